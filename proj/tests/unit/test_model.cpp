#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "oracles.hpp"

#include "cidyn/model.hpp"
#include "cidyn/states.hpp"

using namespace cidyn;

namespace {

SystemParams small_params(int nx = 5, int ny = 4) {
  SystemParams p;
  p.basis = {nx, ny};
  return p;
}

// H written out element by element over the product basis
DenseMatrix hamiltonian_by_loops(const SystemParams& p) {
  const BasisSpec& b = p.basis;
  DenseMatrix h = DenseMatrix::Zero(b.dim(), b.dim());
  const int lo = BasisSpec::spin_index(Level::zero, Level::one);  // |01>, Sz = -1
  const int hi = BasisSpec::spin_index(Level::one, Level::zero);  // |10>, Sz = +1
  for (int s = 0; s < 9; ++s)
    for (int x = 0; x < b.n_max_x; ++x)
      for (int y = 0; y < b.n_max_y; ++y) {
        const Index i = (Index{s} * b.n_max_x + x) * b.n_max_y + y;
        h(i, i) = p.omega_x * (x + 0.5) + p.omega_y * (y + 0.5);
        const double sz = s == hi ? 1.0 : s == lo ? -1.0 : 0.0;
        if (sz != 0.0 && x + 1 < b.n_max_x) {
          const Index j = i + b.n_max_y;
          h(i, j) = h(j, i) = p.G_x * sz * std::sqrt(x + 1.0);
        }
        if ((s == lo || s == hi) && y + 1 < b.n_max_y) {
          const int flipped = s == lo ? hi : lo;
          const Index j = (Index{flipped} * b.n_max_x + x) * b.n_max_y + y + 1;
          h(i, j) = h(j, i) = p.G_y * std::sqrt(y + 1.0);
        }
      }
  return h;
}

}  // namespace

TEST_SUITE("model") {
  TEST_CASE("collective spins") {
    const auto s = collective_spins();
    const int i01 = BasisSpec::spin_index(Level::zero, Level::one);
    const int i10 = BasisSpec::spin_index(Level::one, Level::zero);
    const int igg = BasisSpec::spin_index(Level::g, Level::g);
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(9);
    v(i01) = 1.0;
    CHECK((s.sz.apply(v) + v).norm() == 0.0);
    Eigen::VectorXcd g = Eigen::VectorXcd::Zero(9);
    g(igg) = 1.0;
    CHECK(s.sx.apply(g).norm() == 0.0);
    CHECK((commutator(s.sz, s.sx).dense() - Complex(0.0, 2.0) * s.sy.dense()).cwiseAbs().maxCoeff() < 1e-15);

    // Pauli algebra on span{|10>, |01>}
    const int idx[2] = {i10, i01};
    auto restrict2 = [&](const OperatorMatrix& op) {
      DenseMatrix m(2, 2);
      for (int a = 0; a < 2; ++a)
        for (int c = 0; c < 2; ++c) m(a, c) = op.coeff(idx[a], idx[c]);
      return m;
    };
    const DenseMatrix m[3] = {restrict2(s.sx), restrict2(s.sy), restrict2(s.sz)};
    const DenseMatrix id = DenseMatrix::Identity(2, 2);
    for (int a = 0; a < 3; ++a) {
      CHECK((m[a] * m[a] - id).cwiseAbs().maxCoeff() < 1e-15);
      const int b = (a + 1) % 3;
      const int c = (a + 2) % 3;
      CHECK((m[a] * m[b] - Complex(0.0, 1.0) * m[c]).cwiseAbs().maxCoeff() < 1e-15);
    }
    // nothing outside the support
    for (const auto* op : {&s.sx, &s.sy, &s.sz}) {
      const DenseMatrix d = op->dense();
      CHECK(d.cwiseAbs().sum() == doctest::Approx(restrict2(*op).cwiseAbs().sum()));
      CHECK(op->hermiticity_error() == 0.0);
    }
  }

  TEST_CASE("hamiltonian matches an element-wise construction") {
    for (const auto& p : {small_params(), small_params(3, 6)}) {
      const auto h = build_hamiltonian(p);
      CHECK((h.dense() - hamiltonian_by_loops(p)).cwiseAbs().maxCoeff() < 1e-13);
      CHECK(h.hermiticity_error() < 1e-12);
    }
    SystemParams p = small_params();
    const auto h = build_hamiltonian(p);
    const BasisSpec& b = p.basis;
    CHECK(h.coeff(b.index(Level::g, Level::g, 0, 0), b.index(Level::g, Level::g, 0, 0)).real() ==
          doctest::Approx((p.omega_x + p.omega_y) / 2).epsilon(1e-15));
    CHECK(h.coeff(b.index(Level::zero, Level::one, 1, 0), b.index(Level::zero, Level::one, 0, 0)).real() ==
          doctest::Approx(-p.G_x).epsilon(1e-15));
    CHECK(build_hamiltonian(SystemParams{}).hermiticity_error() < 1e-12);
  }

  TEST_CASE("no coupling between |g> sectors and the spin support") {
    const SystemParams p = small_params(4, 3);
    const auto h = build_hamiltonian(p);
    const BasisSpec& b = p.basis;
    for (Index i = 0; i < b.dim(); ++i)
      for (Index j = 0; j < b.dim(); ++j) {
        if (i == j) continue;
        const int si = b.coordinates(i).spin;
        const int sj = b.coordinates(j).spin;
        const auto active = [](int s) { return s == 5 || s == 7; };  // |01>, |10>
        if (!(active(si) && active(sj))) CHECK(h.coeff(i, j) == Complex(0.0));
      }
  }

  TEST_CASE("parity commutes with H") {
    for (const double gx : {0.22, 1.0, 3.7}) {
      SystemParams p = small_params(6, 5);
      p.G_x = kTwoPi * gx;
      p.G_y = kTwoPi * (1.3 - 0.2 * gx);
      CHECK(commutator(parity_operator(p.basis), build_hamiltonian(p)).max_abs() < 1e-12);
    }
  }

  TEST_CASE("position operators") {
    SystemParams p = small_params(24, 3);
    const auto x = position_operator(Axis::x, p);
    const auto psi = initial_state(Complex(std::sqrt(2.0)), 0.0, {Level::zero, Level::one}, p.basis);
    CHECK(expectation(psi, x).real() == doctest::Approx(21.44).epsilon(5e-3));
    CHECK(expectation(psi, x).real() == doctest::Approx(2 * 7.58 * std::sqrt(2.0)).epsilon(1e-9));
    const auto vac = initial_state(0.0, 0.0, {Level::g, Level::g}, p.basis);
    CHECK(std::abs(expectation(vac, x)) == 0.0);
    PureState one = vac;
    one.amplitudes.setZero();
    one.amplitudes(p.basis.index(Level::g, Level::g, 1, 0)) = 1.0;
    CHECK(expectation(one, x * x).real() == doctest::Approx(3 * p.eta_x * p.eta_x).epsilon(1e-14));
  }

  TEST_CASE("jump operators") {
    SystemParams p = small_params(3, 2);
    p.gamma_S = 0.0;
    CHECK(build_jump_operators(p).empty());
    p.gamma_S = 0.13;
    const auto jumps = build_jump_operators(p);
    REQUIRE(jumps.size() == 2);
    const Slot slots[2] = {Slot::ion_left, Slot::ion_right};
    for (int j = 0; j < 2; ++j) {
      const auto expected = Complex(0.13) * embed(ion_projector("0", "0"), slots[j], p.basis);
      CHECK(((jumps[j].op.adjoint() * jumps[j].op) - expected).max_abs() < 1e-15);
      CHECK(jumps[j].rate == 0.13);
    }
    // left jump on |0,1><0,1| gives gamma |g,1><g,1|
    const auto psi = initial_state(0.0, 0.0, {Level::zero, Level::one}, p.basis);
    const DenseMatrix rho = psi.amplitudes * psi.amplitudes.adjoint();
    const DenseMatrix out = jumps[0].op.dense() * rho * jumps[0].op.adjoint().dense();
    const Index gi = p.basis.index(Level::g, Level::one, 0, 0);
    CHECK(out(gi, gi).real() == doctest::Approx(0.13).epsilon(1e-15));
    CHECK(out.cwiseAbs().sum() == doctest::Approx(0.13).epsilon(1e-15));

    p.gamma_P = 0.01;
    CHECK(build_jump_operators(p).size() == 4);
  }

  TEST_CASE("adiabatic surfaces") {
    SystemParams p;
    std::vector<SurfacePoint> grid;
    for (double x = -20; x <= 20; x += 2.5)
      for (double y = -15; y <= 15; y += 3) grid.push_back({x, y});
    grid.push_back({0.0, 0.0});
    const auto v = adiabatic_surfaces(p, grid);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const double x = grid[k].x_nm, y = grid[k].y_nm;
      const double u = p.omega_x * x * x / (4 * p.eta_x * p.eta_x) + p.omega_y * y * y / (4 * p.eta_y * p.eta_y);
      Eigen::Matrix2d m;
      m << u + p.g_x() * x, p.g_y() * y, p.g_y() * y, u - p.g_x() * x;
      const Eigen::Vector2d ev = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(m).eigenvalues();
      const double scale = std::max(1.0, std::abs(ev(1)));
      CHECK(std::abs(v[k].v_minus - ev(0)) / scale < 1e-12);
      CHECK(std::abs(v[k].v_plus - ev(1)) / scale < 1e-12);
    }
    CHECK(v.back().v_plus - v.back().v_minus == 0.0);
    CHECK(surface_minimum_x(p) == doctest::Approx(2 * p.eta_x * p.G_x / p.omega_x).epsilon(1e-14));
    // numerical minimum along the x axis
    double best_x = 0.0, best_v = 1e300;
    for (int k = 0; k <= 200000; ++k) {
      const double x = 10.0 * k / 200000;
      const SurfacePoint pt{x, 0.0};
      const double val = adiabatic_surfaces(p, std::span(&pt, 1))[0].v_minus;
      if (val < best_v) best_v = val, best_x = x;
    }
    CHECK(best_x == doctest::Approx(surface_minimum_x(p)).epsilon(1e-4));
    CHECK_THROWS_AS(adiabatic_surfaces(p, {}), InvalidArgument);
  }

  TEST_CASE("lifetimes") {
    const auto t = LifetimeTable::standard();
    CHECK(decay_rate("50S", t) == doctest::Approx(1 / 7.2).epsilon(1e-15));
    CHECK(decay_rate("50S", t) == doctest::Approx(0.1389).epsilon(1e-3));
    CHECK(decay_rate("50P", t) == doctest::Approx(0.00633).epsilon(1e-3));
    CHECK_THROWS_AS(decay_rate("60D", t), InvalidArgument);
    const auto parsed = LifetimeTable::parse("# custom\n60D = 12.5\n 50S=7.2  # quoted\n");
    CHECK(decay_rate("60D", parsed) == doctest::Approx(0.08));
    CHECK_THROWS_AS(LifetimeTable::parse("60D = -1\n"), InvalidArgument);
    CHECK_THROWS_AS(LifetimeTable::parse("60D\n"), InvalidArgument);
  }

  TEST_CASE("parameter validation reports each violation") {
    SystemParams p;
    CHECK(p.violations().empty());
    CHECK(p.eta_y == doctest::Approx(SystemParams::scaled_eta(p.eta_x, p.omega_x, p.omega_y)).epsilon(1e-15));
    p.omega_x = -1.0;
    CHECK(p.violations().size() == 1);
    p.eta_y = 0.0;
    p.gamma_S = -0.1;
    CHECK(p.violations().size() == 3);
    CHECK_THROWS_AS(p.validate(), InvalidArgument);
  }
}
