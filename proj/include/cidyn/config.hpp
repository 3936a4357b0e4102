#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cidyn/evolve.hpp"
#include "cidyn/model.hpp"
#include "cidyn/states.hpp"

namespace cidyn {

inline constexpr const char* kArtifactVersion = "0.1.0";

enum class Solver { schrodinger, lindblad, trajectories, meanfield };

std::string_view solver_name(Solver s);
std::optional<Solver> parse_solver(std::string_view name);

// Everything a run needs. Frequencies in rad/us, lengths in nm, times in us.
struct RunConfig {
  std::string scenario = "fig5-weak";
  SystemParams params{};
  Complex alpha_x{1.4142135623730951, 0.0};
  Complex alpha_y{0.0, 0.0};
  SpinConfig spins{Level::zero, Level::one};
  double t0 = 0.0;
  double t1 = 40.0;
  double output_interval = 0.1;
  StepPolicy step{};
  Solver solver = Solver::lindblad;
  int n_traj = 500;
  std::uint64_t seed = 1;
  std::string out_dir = "cidyn-out";
  std::string prefix;  // file stem; the scenario name when empty
  // surfaces scenario: square grid [-extent, extent]^2
  double surface_extent_nm = 24.0;
  int surface_points = 241;
  // extra lifetime entries; decay_state, when set, replaces gamma_S by 1/lifetime
  std::map<std::string, double> lifetimes;
  std::string decay_state;

  std::string stem() const { return prefix.empty() ? scenario : prefix; }
  LifetimeTable lifetime_table() const;

  bool operator==(const RunConfig&) const;
};

std::vector<std::string> scenario_names();
bool is_scenario(std::string_view name);
// Throws InvalidArgument naming the available scenarios.
RunConfig scenario_defaults(std::string_view name);

struct ConfigResult {
  RunConfig config;
  std::vector<std::string> errors;
  std::vector<std::string> warnings;

  bool ok() const { return errors.empty(); }
};

// "key = value" lines; '#' starts a comment. Keys override the scenario's
// defaults; `scenario_override` replaces the file's scenario key. All
// problems are collected, not just the first.
ConfigResult parse_config(std::string_view text, std::optional<std::string> scenario_override = std::nullopt);

// Reads a config file, or the "config" object of a run's JSON sidecar.
ConfigResult validate_config(const std::string& path, std::optional<std::string> scenario_override = std::nullopt);

// Constraint violations of an assembled config (parameters, grid, solver).
std::vector<std::string> config_violations(const RunConfig& config);

// Normalized key/value form, every key present, doubles in shortest round-trip form.
std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& config);
std::string serialize_config(const RunConfig& config);

}  // namespace cidyn
