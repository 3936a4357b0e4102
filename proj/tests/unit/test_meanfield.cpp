#include "doctest.h"

#include "cidyn/meanfield.hpp"

using namespace cidyn;

TEST_SUITE("meanfield") {
  TEST_CASE("right-hand side") {
    SystemParams p;
    const MeanFieldState zero;
    CHECK(mf_rhs(zero, p).max_abs() == 0.0);

    p.G_x = 1.0;
    p.gamma_S = 0.0;
    MeanFieldState s;
    s.A = 1.0;
    s.sy = 1.0;
    const auto d = mf_rhs(s, p);
    CHECK(d.sx == doctest::Approx(-4.0));
    CHECK(d.sz == 0.0);

    // every printed term, at a generic point
    SystemParams q;
    MeanFieldState g;
    g.A = Complex(0.3, -0.7);
    g.B = Complex(-1.1, 0.4);
    g.sx = 0.2;
    g.sy = -0.5;
    g.sz = 0.6;
    const auto e = mf_rhs(g, q);
    const double ra = 2 * g.A.real(), rb = 2 * g.B.real();
    CHECK(std::abs(e.A - (Complex(0, -q.omega_x) * g.A - Complex(0, q.G_x * g.sz))) < 1e-14);
    CHECK(std::abs(e.B - (Complex(0, -q.omega_y) * g.B - Complex(0, q.G_y * g.sx))) < 1e-14);
    CHECK(e.sx == doctest::Approx(-2 * q.G_x * g.sy * ra - q.gamma_S / 2 * g.sx).epsilon(1e-14));
    CHECK(e.sy == doctest::Approx(2 * q.G_x * g.sx * ra - q.gamma_S / 2 * g.sy).epsilon(1e-14));
    CHECK(e.sz == doctest::Approx(2 * q.G_y * g.sy * rb - q.gamma_S * g.sz).epsilon(1e-14));
  }

  TEST_CASE("pack round trip") {
    MeanFieldState s;
    s.A = Complex(1, 2);
    s.B = Complex(3, 4);
    s.sx = 5;
    s.sy = 6;
    s.sz = 7;
    const auto v = s.pack();
    CHECK(v == std::array<double, 7>{1, 2, 3, 4, 5, 6, 7});
    CHECK(MeanFieldState::unpack(v).pack() == v);
    CHECK(s.max_abs() == 7.0);
  }

  TEST_CASE("free rotation") {
    SystemParams p;
    p.G_x = p.G_y = 0.0;
    p.gamma_S = 0.0;
    const auto init = mf_initial_state(std::sqrt(2.0), Complex(0.3, 0.1), -1.0);
    const TimeGrid grid{0.0, 5.0, 5000, 50};
    const auto r = mf_evolve(init, p, grid);
    for (std::size_t k = 0; k < r.times.size(); ++k) {
      const double t = r.times[k];
      CHECK(std::abs(r.states[k].A - std::sqrt(2.0) * std::exp(Complex(0, -p.omega_x * t))) < 1e-9);
      CHECK(std::norm(r.states[k].A) + std::norm(r.states[k].B) == doctest::Approx(2.1).epsilon(1e-10));
      CHECK(r.states[k].sz == -1.0);
    }
  }

  TEST_CASE("sz decouples without Gx") {
    SystemParams p;
    p.G_x = 0.0;
    p.gamma_S = 0.0;
    const auto r = mf_evolve(mf_initial_state(1.0, 0.0, -1.0), p, {0.0, 4.0, 4000, 100});
    for (const auto& s : r.states) CHECK(s.sz == -1.0);
  }

  TEST_CASE("spins relax with decay") {
    SystemParams p;
    const auto r = mf_evolve(mf_initial_state(std::sqrt(2.0), 0.0, -1.0), p, {0.0, 200.0, 200000, 1000});
    const auto& last = r.states.back();
    CHECK(std::abs(last.sx) < 1e-6);
    CHECK(std::abs(last.sy) < 1e-6);
    CHECK(std::abs(last.sz) < 1e-6);
    CHECK(r.max_spin_length_squared <= 1.0 + 1e-6);
    // nothing damps the modes: once sz is gone A rotates freely at fixed |A|
    const auto& mid = r.states[r.states.size() * 3 / 4];
    CHECK(std::abs(last.A) == doctest::Approx(std::abs(mid.A)).epsilon(1e-8));
    CHECK(std::abs(last.A) > 1.0);
  }

  TEST_CASE("divergence aborts") {
    SystemParams p;
    MeanFieldState s;
    s.A = 2e6;
    CHECK_THROWS_AS(mf_evolve(s, p, {0.0, 1.0, 100, 10}), SolverAbort);
  }

  TEST_CASE("steady state") {
    SystemParams p;
    const auto guesses = default_guess_grid(std::sqrt(2.0));
    CHECK(guesses.size() == 27);
    const auto report = mf_steady_state(p, guesses);
    REQUIRE(report.fixed_points.size() == 1);
    CHECK(report.fixed_points[0].state.max_abs() < 1e-12);
    CHECK(report.fixed_points[0].hits == 27);
    for (const auto& fp : report.fixed_points) CHECK(mf_rhs(fp.state, p).max_abs() < 1e-12);
    p.gamma_S = 0.0;
    CHECK_THROWS_AS(mf_steady_state(p, guesses), InvalidArgument);
  }
}
