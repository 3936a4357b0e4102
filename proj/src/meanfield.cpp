#include "cidyn/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cidyn {

namespace {

using Vec7 = Eigen::Matrix<double, 7, 1>;
using Mat7 = Eigen::Matrix<double, 7, 7>;

Vec7 to_vec(const MeanFieldState& s) {
  const auto p = s.pack();
  return Vec7(p.data());
}

MeanFieldState from_vec(const Vec7& v) {
  std::array<double, 7> p{};
  for (int i = 0; i < 7; ++i) p[i] = v(i);
  return MeanFieldState::unpack(p);
}

// d(rhs)/d(state) in the packed real coordinates.
Mat7 jacobian(const MeanFieldState& s, const SystemParams& p) {
  const double wx = p.omega_x;
  const double wy = p.omega_y;
  const double gx = p.G_x;
  const double gy = p.G_y;
  const double g = p.gamma_S;
  const double ax = 2.0 * s.A.real();  // A + A*
  const double by = 2.0 * s.B.real();  // B + B*
  Mat7 j = Mat7::Zero();
  // dA/dt = -i wx A - i Gx sz  ->  Re: wx Im A ; Im: -wx Re A - Gx sz
  j(0, 1) = wx;
  j(1, 0) = -wx;
  j(1, 6) = -gx;
  // dB/dt = -i wy B - i Gy sx
  j(2, 3) = wy;
  j(3, 2) = -wy;
  j(3, 4) = -gy;
  // dsx = -2 Gx sy (A + A*) - g/2 sx
  j(4, 0) = -4.0 * gx * s.sy;
  j(4, 4) = -0.5 * g;
  j(4, 5) = -2.0 * gx * ax;
  // dsy = 2 Gx sx (A + A*) - g/2 sy
  j(5, 0) = 4.0 * gx * s.sx;
  j(5, 4) = 2.0 * gx * ax;
  j(5, 5) = -0.5 * g;
  // dsz = 2 Gy sy (B + B*) - g sz
  j(6, 2) = 4.0 * gy * s.sy;
  j(6, 5) = 2.0 * gy * by;
  j(6, 6) = -g;
  return j;
}

MeanFieldState axpy(const MeanFieldState& y, double h, const MeanFieldState& k) {
  return {y.A + h * k.A, y.B + h * k.B, y.sx + h * k.sx, y.sy + h * k.sy, y.sz + h * k.sz};
}

}  // namespace

std::array<double, 7> MeanFieldState::pack() const {
  return {A.real(), A.imag(), B.real(), B.imag(), sx, sy, sz};
}

MeanFieldState MeanFieldState::unpack(const std::array<double, 7>& v) {
  return {{v[0], v[1]}, {v[2], v[3]}, v[4], v[5], v[6]};
}

double MeanFieldState::max_abs() const {
  const auto p = pack();
  double m = 0.0;
  for (double v : p) m = std::max(m, std::abs(v));
  return m;
}

MeanFieldState mf_rhs(const MeanFieldState& s, const SystemParams& p) {
  const double a_sum = 2.0 * s.A.real();
  const double b_sum = 2.0 * s.B.real();
  MeanFieldState d;
  d.A = -kI * p.omega_x * s.A - kI * p.G_x * s.sz;
  d.B = -kI * p.omega_y * s.B - kI * p.G_y * s.sx;
  d.sx = -2.0 * p.G_x * s.sy * a_sum - 0.5 * p.gamma_S * s.sx;
  d.sy = 2.0 * p.G_x * s.sx * a_sum - 0.5 * p.gamma_S * s.sy;
  d.sz = 2.0 * p.G_y * s.sy * b_sum - p.gamma_S * s.sz;
  return d;
}

MeanFieldState mf_initial_state(Complex alpha_x, Complex alpha_y, double sz) { return {alpha_x, alpha_y, 0.0, 0.0, sz}; }

MeanFieldSeries mf_evolve(const MeanFieldState& init, const SystemParams& params, const TimeGrid& grid) {
  grid.validate();
  constexpr double kDivergence = 1e6;
  MeanFieldSeries out;
  MeanFieldState y = init;
  const double h = grid.step();
  auto record = [&](double t) {
    out.times.push_back(t);
    out.states.push_back(y);
    out.max_spin_length_squared = std::max(out.max_spin_length_squared, y.spin_length_squared());
  };
  record(grid.t0);
  for (int n = 1; n <= grid.n_steps; ++n) {
    const MeanFieldState k1 = mf_rhs(y, params);
    const MeanFieldState k2 = mf_rhs(axpy(y, 0.5 * h, k1), params);
    const MeanFieldState k3 = mf_rhs(axpy(y, 0.5 * h, k2), params);
    const MeanFieldState k4 = mf_rhs(axpy(y, h, k3), params);
    y = axpy(y, h / 6.0, k1);
    y = axpy(y, h / 3.0, k2);
    y = axpy(y, h / 3.0, k3);
    y = axpy(y, h / 6.0, k4);
    const double t = grid.time_at(n);
    if (!(y.max_abs() <= kDivergence)) {
      std::ostringstream os;
      os << "mean-field state diverged at t = " << t;
      throw SolverAbort("divergence", os.str(), t);
    }
    if (n % grid.output_stride == 0) record(t);
  }
  return out;
}

std::vector<MeanFieldState> default_guess_grid(double alpha_x) {
  const double r = 2.0 * std::abs(alpha_x);
  const Complex a_values[] = {{-r, 0.0}, {0.0, 0.0}, {r, 0.0}};
  const Complex b_values[] = {{0.0, -r}, {0.0, 0.0}, {0.5 * r, 0.5 * r}};
  const std::array<double, 3> spins[] = {{0.0, 0.0, -1.0}, {0.0, 0.0, 0.0}, {0.6, 0.0, 0.8}};
  std::vector<MeanFieldState> guesses;
  for (const auto& a : a_values) {
    for (const auto& b : b_values) {
      for (const auto& s : spins) guesses.push_back({a, b, s[0], s[1], s[2]});
    }
  }
  return guesses;
}

SteadyStateReport mf_steady_state(const SystemParams& params, std::span<const MeanFieldState> guesses) {
  if (!(params.gamma_S > 0.0)) {
    throw InvalidArgument(
        "mf_steady_state: gamma_S must be > 0; without decay every free-rotation orbit is stationary in the "
        "rotating sense and the fixed-point set is not isolated");
  }
  constexpr int kMaxIterations = 200;
  constexpr double kResidualTarget = 1e-13;
  constexpr double kMergeDistance = 1e-8;

  SteadyStateReport report;
  for (const auto& guess : guesses) {
    GuessOutcome g;
    g.guess = guess;
    Vec7 x = to_vec(guess);
    Vec7 f = to_vec(mf_rhs(guess, params));
    for (int it = 0; it < kMaxIterations && f.norm() > kResidualTarget; ++it) {
      g.iterations = it + 1;
      const Mat7 jac = jacobian(from_vec(x), params);
      const Vec7 dx = jac.fullPivLu().solve(-f);
      if (!dx.allFinite()) break;
      // backtracking on ||f||
      double lambda = 1.0;
      Vec7 trial = x + dx;
      Vec7 ft = to_vec(mf_rhs(from_vec(trial), params));
      while (ft.norm() >= f.norm() && lambda > 1e-6) {
        lambda *= 0.5;
        trial = x + lambda * dx;
        ft = to_vec(mf_rhs(from_vec(trial), params));
      }
      x = trial;
      f = ft;
    }
    g.residual = f.norm();
    g.converged = g.residual < 1e-12;
    if (!g.converged) {
      std::ostringstream os;
      os << "Newton stopped with residual " << g.residual << " after " << g.iterations << " iterations";
      g.message = os.str();
    } else {
      const MeanFieldState root = from_vec(x);
      auto same = std::find_if(report.fixed_points.begin(), report.fixed_points.end(), [&](const FixedPoint& p) {
        return (to_vec(p.state) - x).norm() < kMergeDistance;
      });
      if (same == report.fixed_points.end()) {
        report.fixed_points.push_back({root, g.residual, 1});
      } else {
        ++same->hits;
      }
    }
    report.guesses.push_back(std::move(g));
  }
  return report;
}

}  // namespace cidyn
