#include <filesystem>
#include <fstream>

#include "doctest.h"

#include "cidyn/config.hpp"

using namespace cidyn;

TEST_SUITE("config") {
  TEST_CASE("empty config is the fig5-weak set") {
    const auto r = parse_config("");
    CHECK(r.ok());
    CHECK(r.warnings.empty());
    CHECK(r.config == scenario_defaults("fig5-weak"));
    CHECK(r.config == RunConfig{});
    const auto& p = r.config.params;
    CHECK(p.G_x == kTwoPi * 0.22);
    CHECK(p.G_y == kTwoPi * 0.86);
    CHECK(p.omega_x == kTwoPi * 1.0);
    CHECK(p.omega_y == kTwoPi * 1.6);
    CHECK(p.gamma_S == 0.13);
    CHECK(r.config.alpha_x == Complex(std::sqrt(2.0)));
    CHECK(r.config.spins == SpinConfig{Level::zero, Level::one});
  }

  TEST_CASE("scenario defaults") {
    const auto s = scenario_defaults("fig2-strong");
    CHECK(s.params.G_x == kTwoPi);
    CHECK(s.params.G_y == kTwoPi);
    CHECK(s.params.gamma_S == 0.0);
    CHECK(s.solver == Solver::schrodinger);
    try {
      scenario_defaults("fig9");
      FAIL("expected an error");
    } catch (const InvalidArgument& e) {
      CHECK(std::string(e.what()).find("fig5-weak") != std::string::npos);
    }
  }

  TEST_CASE("one violation per problem") {
    const auto r = parse_config("omega_x = -1\n");
    REQUIRE(r.errors.size() == 1);
    CHECK(r.errors[0].find("omega_x") != std::string::npos);
    const auto many = parse_config("omega_x = -1\nn_traj = 0\nsurface_points = 4\n");
    CHECK(many.errors.size() == 3);
  }

  TEST_CASE("warnings and parse errors") {
    const auto w = parse_config("colour = blue\n");
    CHECK(w.ok());
    REQUIRE(w.warnings.size() == 1);
    CHECK(w.warnings[0].find("colour") != std::string::npos);

    const auto e = parse_config("# header\n\nG_x = fast\n");
    REQUIRE(e.errors.size() == 1);
    CHECK(e.errors[0].find("line 3") != std::string::npos);
    CHECK(e.errors[0].find("G_x") != std::string::npos);
    CHECK(parse_config("t1 = 5\nt1 = 6\n").errors.size() == 1);
    CHECK(parse_config("novalue\n").errors.size() == 1);
    CHECK(parse_config("solver = euler\n").errors.size() == 1);
  }

  TEST_CASE("values") {
    const auto r = parse_config("G_x = 2pi*0.5\nalpha_y = 0.1,0.2\nspins = 1,0\nscenario = fig2-weak\n");
    REQUIRE(r.ok());
    CHECK(r.config.params.G_x == kTwoPi * 0.5);
    CHECK(r.config.alpha_y == Complex(0.1, 0.2));
    CHECK(r.config.spins == SpinConfig{Level::one, Level::zero});
    CHECK(r.config.solver == Solver::schrodinger);
    const auto o = parse_config("scenario = fig2-weak\n", "fig5-strong");
    CHECK(o.config.scenario == "fig5-strong");
    // eta_y follows omega_y unless given
    const auto e = parse_config("omega_y = 2pi*4\n");
    CHECK(e.config.params.eta_y == doctest::Approx(7.58 / 2).epsilon(1e-14));
    CHECK(parse_config("omega_y = 2pi*4\neta_y = 3\n").config.params.eta_y == 3.0);
  }

  TEST_CASE("decay state") {
    const auto r = parse_config("decay_state = 50S\n");
    REQUIRE(r.ok());
    CHECK(r.config.params.gamma_S == doctest::Approx(1 / 7.2).epsilon(1e-15));
    const auto custom = parse_config("lifetime.60D = 20\ndecay_state = 60D\n");
    REQUIRE(custom.ok());
    CHECK(custom.config.params.gamma_S == doctest::Approx(0.05));
    CHECK_FALSE(parse_config("decay_state = 60D\n").ok());
    CHECK_FALSE(parse_config("decay_state = 50S\ngamma_S = 0.1\n").ok());
  }

  TEST_CASE("solver constraints") {
    CHECK_FALSE(parse_config("scenario = fig2-weak\ngamma_S = 0.1\n").ok());
    CHECK_FALSE(parse_config("output_interval = 0.3\n").ok());
    CHECK(parse_config("solver = trajectories\nn_traj = 10\n").ok());
  }

  TEST_CASE("serialization round trip") {
    for (const auto& name : scenario_names()) {
      RunConfig c = scenario_defaults(name);
      c.seed = 987654321987ULL;
      c.params.eta_x = 0.1 + 0.2;  // not exactly representable in short decimal
      c.alpha_y = Complex(-0.25, 1.0 / 3.0);
      const auto back = parse_config(serialize_config(c));
      CHECK_MESSAGE(back.ok(), name);
      CHECK_MESSAGE(back.config == c, name);
      CHECK(back.warnings.empty());
    }
  }

  TEST_CASE("files") {
    const auto dir = std::filesystem::temp_directory_path() / "cidyn-config-test";
    std::filesystem::create_directories(dir);
    const auto path = (dir / "run.cfg").string();
    std::ofstream(path) << "scenario = fig6-strong\nn_traj = 42\n";
    const auto r = validate_config(path);
    CHECK(r.ok());
    CHECK(r.config.scenario == "fig6-strong");
    CHECK(r.config.n_traj == 42);
    CHECK_FALSE(validate_config((dir / "missing.cfg").string()).ok());
    std::filesystem::remove_all(dir);
  }
}
