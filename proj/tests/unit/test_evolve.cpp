#include <random>

#include "doctest.h"
#include "oracles.hpp"

#include "cidyn/config.hpp"
#include "cidyn/evolve.hpp"
#include "cidyn/scenarios.hpp"
#include "cidyn/states.hpp"

using namespace cidyn;

namespace {

DenseMatrix random_hermitian(Index n, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  DenseMatrix m(n, n);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = Complex(g(rng), g(rng));
  return scale * (m + m.adjoint()) / 2.0;
}

TimeGrid grid_for(const OperatorMatrix& h, std::span<const JumpOperator> jumps, double t1, double interval,
                  double factor = 0.005) {
  return TimeGrid::with_output_interval(0.0, t1, interval, recommended_step(h, jumps, {factor, 0.02}));
}

SystemParams small(int nx, int ny) {
  SystemParams p;
  p.basis = {nx, ny};
  return p;
}

}  // namespace

TEST_SUITE("evolve") {
  TEST_CASE("time grid") {
    const auto g = TimeGrid::with_output_interval(0.0, 40.0, 0.1, 0.02);
    CHECK(g.step() <= 0.02);
    CHECK(g.n_outputs() == 401);
    CHECK(g.output_time(400) == 40.0);
    CHECK(g.output_time(1) == 0.1);
    CHECK(g.n_steps % g.output_stride == 0);
    CHECK_THROWS_AS(TimeGrid::with_output_interval(0.0, 1.0, 0.3, 0.02), InvalidArgument);
    CHECK_THROWS_AS((TimeGrid{1.0, 1.0, 10, 1}.validate()), InvalidArgument);
    CHECK_THROWS_AS((TimeGrid{0.0, 1.0, 10, 3}.validate()), InvalidArgument);
  }

  TEST_CASE("free coherent oscillation") {
    SystemParams p = small(24, 2);
    p.G_x = p.G_y = 0.0;
    const auto h = build_hamiltonian(p);
    const auto psi = initial_state(std::sqrt(2.0), 0.0, {Level::zero, Level::one}, p.basis);
    const auto obs = standard_observables(p);
    const auto r = measure_all(schrodinger_evolve(h, psi, grid_for(h, {}, 2.0, 0.05), obs), obs);
    const double xm = 2 * p.eta_x * std::sqrt(2.0);
    for (std::size_t k = 0; k < r.times.size(); ++k) {
      CHECK(r.track("Nx")[k] == doctest::Approx(2.0).epsilon(1e-6));
      CHECK(std::abs(r.track("x")[k] - xm * std::cos(p.omega_x * r.times[k])) < 1e-6);
    }
  }

  TEST_CASE("schrodinger matches the matrix exponential") {
    const SystemParams p = small(6, 4);
    const auto h = build_hamiltonian(p);
    const auto psi = initial_state(Complex(0.8, 0.3), Complex(0.2), {Level::zero, Level::one}, p.basis);
    const auto obs = standard_observables(p);
    const auto grid = grid_for(h, {}, 2.0, 0.25);
    EvolveOptions keep;
    keep.retain_states = true;
    const auto r = schrodinger_evolve(h, psi, grid, obs, keep);
    CHECK(r.diagnostics.interaction_frame);
    REQUIRE(r.pure_states.size() == static_cast<std::size_t>(grid.n_outputs()));
    for (int k = 0; k < grid.n_outputs(); ++k) {
      const StateVector ref = oracle::propagate(h.dense(), grid.output_time(k)) * psi.amplitudes;
      CHECK((r.pure_states[k].amplitudes - ref).norm() < 1e-8);
      CHECK(std::abs(r.tracks.at("Sz")[k] - ref.dot(obs.at("Sz").apply(ref))) < 1e-8);
    }
  }

  TEST_CASE("norm drift aborts") {
    const SystemParams p = small(6, 4);
    const auto h = build_hamiltonian(p);
    const auto psi = initial_state(std::sqrt(2.0), 0.0, {Level::zero, Level::one}, p.basis);
    const auto grid = TimeGrid::with_output_interval(0.0, 2.0, 0.5, 0.5);
    CHECK_THROWS_AS(schrodinger_evolve(h, psi, grid, standard_observables(p)), SolverAbort);
  }

  TEST_CASE("lindblad matches the Liouvillian exponential") {
    const Index n = 6;
    const std::string tag = "toy6";
    const ObservableSet obs = [&] {
      ObservableSet s(tag);
      s.add("a", OperatorMatrix(random_hermitian(n, 21), tag));
      s.add("b", OperatorMatrix(random_hermitian(n, 22), tag));
      return s;
    }();
    DenseMatrix psi = DenseMatrix::Zero(n, 1);
    psi(0, 0) = Complex(0.6, 0.0);
    psi(3, 0) = Complex(0.0, 0.8);
    const DensityState rho0{psi * psi.adjoint(), tag};

    SUBCASE("generic jumps (no frame)") {
      const DenseMatrix h = random_hermitian(n, 23);
      DenseMatrix c1 = DenseMatrix::Zero(n, n), c2 = DenseMatrix::Zero(n, n);
      c1(0, 3) = 0.7;
      c2(1, 2) = Complex(0.2, 0.4);
      c2(5, 0) = 0.3;
      const std::vector<JumpOperator> jumps{{"c1", 0.49, OperatorMatrix(c1, tag)}, {"c2", 0.29, OperatorMatrix(c2, tag)}};
      const OperatorMatrix hop(h, tag);
      const auto grid = grid_for(hop, jumps, 1.5, 0.25);
      EvolveOptions keep;
      keep.retain_states = true;
      const auto r = lindblad_evolve(hop, jumps, rho0, grid, obs, keep);
      CHECK_FALSE(r.diagnostics.interaction_frame);
      for (int k = 0; k < grid.n_outputs(); ++k) {
        const DenseMatrix ref = oracle::lindblad_solution(h, {c1, c2}, rho0.matrix, grid.output_time(k));
        CHECK((r.density_states[k].matrix - ref).cwiseAbs().maxCoeff() < 1e-8);
        CHECK(std::abs(r.tracks.at("a")[k] - (ref * obs.at("a").dense()).trace()) < 1e-8);
      }
    }

    SUBCASE("dephasing jumps (frame active)") {
      DenseMatrix h = random_hermitian(n, 24, 0.3);
      for (Index i = 0; i < n; ++i) h(i, i) = 3.0 * static_cast<double>(i);
      DenseMatrix c = DenseMatrix::Zero(n, n);
      c(1, 1) = 0.5;
      c(3, 3) = -0.5;
      const std::vector<JumpOperator> jumps{{"z", 0.25, OperatorMatrix(c, tag)}};
      const OperatorMatrix hop(h, tag);
      const auto grid = grid_for(hop, jumps, 1.5, 0.25);
      const auto r = lindblad_evolve(hop, jumps, rho0, grid, obs);
      CHECK(r.diagnostics.interaction_frame);
      for (int k = 0; k < grid.n_outputs(); ++k) {
        const DenseMatrix ref = oracle::lindblad_solution(h, {c}, rho0.matrix, grid.output_time(k));
        CHECK(std::abs(r.tracks.at("b")[k] - (ref * obs.at("b").dense()).trace()) < 1e-8);
      }
    }
  }

  TEST_CASE("lindblad on the ion model matches the Liouvillian exponential") {
    // dense Liouvillian of dimension 18^2
    SystemParams p = small(2, 1);
    p.gamma_P = 0.05;
    const auto h = build_hamiltonian(p);
    const auto jumps = build_jump_operators(p);
    const auto psi = initial_state(0.5, 0.0, {Level::zero, Level::one}, p.basis);
    const auto obs = standard_observables(p);
    const auto grid = grid_for(h, jumps, 1.0, 0.5);
    const auto r = lindblad_evolve(h, jumps, to_density(psi), grid, obs);
    std::vector<DenseMatrix> c;
    for (const auto& j : jumps) c.push_back(j.op.dense());
    const DenseMatrix rho0 = psi.amplitudes * psi.amplitudes.adjoint();
    for (int k = 0; k < grid.n_outputs(); ++k) {
      const DenseMatrix ref = oracle::lindblad_solution(h.dense(), c, rho0, grid.output_time(k));
      for (const char* name : {"Sz", "x", "ySx", "pop_l_gg", "pop_r_gg"})
        CHECK(std::abs(r.tracks.at(name)[k] - (ref * obs.at(name).dense()).trace()) < 1e-8);
    }
  }

  TEST_CASE("lindblad without decay reproduces schrodinger") {
    SystemParams p = small(8, 5);
    p.gamma_S = 0.0;
    const auto h = build_hamiltonian(p);
    const auto psi = initial_state(std::sqrt(2.0), 0.0, {Level::zero, Level::one}, p.basis);
    const auto obs = standard_observables(p);
    const auto grid = grid_for(h, {}, 2.0, 0.1);
    const auto a = measure_all(schrodinger_evolve(h, psi, grid, obs), obs);
    const auto b = measure_all(lindblad_evolve(h, {}, to_density(psi), grid, obs), obs);
    for (const auto& [name, track] : a.tracks)
      for (std::size_t k = 0; k < track.size(); ++k) CHECK(std::abs(track[k] - b.track(name)[k]) < 1e-6);
  }

  TEST_CASE("decay with Gy = 0 against the closed form") {
    // left ion |0> decays at rate gamma; before the jump a_x relaxes around
    // beta = Gx / wx (Sz = -1), after it rotates freely (Sz = 0)
    SystemParams p = small(24, 1);
    p.G_y = 0.0;
    p.gamma_S = 0.5;
    const Complex a0(std::sqrt(2.0), 0.0);
    const auto h = build_hamiltonian(p);
    const auto jumps = build_jump_operators(p);
    const auto psi = initial_state(a0, 0.0, {Level::zero, Level::one}, p.basis);
    const auto obs = standard_observables(p);
    const auto grid = grid_for(h, jumps, 6.0, 0.25, 0.05);
    const auto r = measure_all(lindblad_evolve(h, jumps, to_density(psi), grid, obs), obs);
    const double w = p.omega_x, g = p.gamma_S, beta = p.G_x / p.omega_x;
    for (std::size_t k = 0; k < r.times.size(); ++k) {
      const double t = r.times[k];
      const Complex rot = std::exp(Complex(0.0, -w * t));
      const Complex coherent = beta + (a0 - beta) * rot;
      const Complex after = g * rot *
                            (beta * (std::exp(Complex(-g, w) * t) - 1.0) / Complex(-g, w) +
                             (a0 - beta) * (1.0 - std::exp(-g * t)) / g);
      const Complex a = std::exp(-g * t) * coherent + after;
      CHECK(std::abs(r.track("x")[k] - 2.0 * p.eta_x * a.real()) < 1e-6);
      CHECK(std::abs(r.track("pop_l_00")[k] - std::exp(-g * t)) < 1e-7);
    }
  }

  TEST_CASE("trajectories") {
    SystemParams p = small(6, 3);
    p.gamma_S = 0.5;
    const auto h = build_hamiltonian(p);
    const auto jumps = build_jump_operators(p);
    const auto psi = initial_state(1.0, 0.0, {Level::zero, Level::one}, p.basis);
    const auto obs = standard_observables(p);
    const auto grid = grid_for(h, jumps, 3.0, 0.1);

    SUBCASE("agree with lindblad within sampling error") {
      const auto exact = measure_all(lindblad_evolve(h, jumps, to_density(psi), grid, obs), obs);
      const auto mc = measure_all(mc_trajectories(h, jumps, psi, grid, obs, {800, 11}), obs);
      int outside = 0;
      for (const char* name : {"Sz", "x", "Nx", "pop_l_00", "pop_r_11", "xSz"}) {
        for (std::size_t k = 0; k < mc.times.size(); ++k) {
          const double se = mc.stderr_tracks.at(name)[k];
          if (std::abs(mc.track(name)[k] - exact.track(name)[k]) > 4.0 * se + 1e-6) ++outside;
        }
      }
      CHECK(outside == 0);
    }

    SUBCASE("deterministic and scheduling independent") {
      EvolveOptions serial;
      serial.exec = kernels::Exec::serial;
      const auto a = mc_trajectories(h, jumps, psi, grid, obs, {40, 5});
      const auto b = mc_trajectories(h, jumps, psi, grid, obs, {40, 5});
      const auto c = mc_trajectories(h, jumps, psi, grid, obs, {40, 5}, serial);
      CHECK(a.tracks == b.tracks);
      CHECK(a.tracks == c.tracks);
      CHECK(a.stderr_tracks == c.stderr_tracks);
      const auto d = mc_trajectories(h, jumps, psi, grid, obs, {40, 6});
      CHECK(a.tracks != d.tracks);
    }

    SUBCASE("without jumps every trajectory is the pure evolution") {
      const auto coherent = schrodinger_evolve(h, psi, grid, obs);
      const auto mc = mc_trajectories(h, {}, psi, grid, obs, {5, 3});
      for (const auto& [name, track] : coherent.tracks)
        for (std::size_t k = 0; k < track.size(); ++k) {
          CHECK(std::abs(track[k] - mc.tracks.at(name)[k]) < 1e-10);
          CHECK(mc.stderr_tracks.at(name)[k] < 1e-10);
        }
      CHECK(mc.diagnostics.jumps == 0);
    }
  }

  TEST_CASE("rng streams") {
    TrajectoryRng a(1, 0), b(1, 0), c(1, 1);
    bool differs = false;
    for (int i = 0; i < 100; ++i) {
      const double x = a.uniform();
      CHECK(x == b.uniform());
      CHECK(x >= 0.0);
      CHECK(x < 1.0);
      differs = differs || x != c.uniform();
    }
    CHECK(differs);
  }

  TEST_CASE("convergence sweep") {
    RunConfig c = scenario_defaults("fig2-weak");
    c.t1 = 1.0;
    c.output_interval = 0.1;

    SUBCASE("uncoupled modes converge at the first rung") {
      // alpha = 1 keeps the coherent-state tail below 1e-9 at 12 levels
      c.params.G_x = c.params.G_y = 0.0;
      c.alpha_x = 1.0;
      const std::vector<BasisSpec> ladder{{12, 8}, {16, 10}, {20, 12}};
      const auto report = run_convergence(c, ladder, 1e-4);
      CHECK(report.converged);
      REQUIRE(report.first_converged_rung.has_value());
      CHECK(*report.first_converged_rung == 0);
    }

    SUBCASE("strong coupling needs more Fock states") {
      const std::vector<BasisSpec> ladder{{10, 8}, {14, 12}, {18, 14}, {22, 16}};
      const auto weak = run_convergence(c, ladder, 1e-4);
      RunConfig s = scenario_defaults("fig2-strong");
      s.t1 = c.t1;
      s.output_interval = c.output_interval;
      const auto strong = run_convergence(s, ladder, 1e-4);
      CHECK(weak.converged);
      CHECK_FALSE(strong.converged);
      const int never = static_cast<int>(ladder.size());
      CHECK(strong.first_converged_rung.value_or(never) > weak.first_converged_rung.value_or(never));
    }

    SUBCASE("ladder must not decrease") {
      const std::vector<BasisSpec> ladder{{8, 6}, {6, 6}};
      CHECK_THROWS_AS(run_convergence(c, ladder, 1e-4), InvalidArgument);
    }
  }
}
