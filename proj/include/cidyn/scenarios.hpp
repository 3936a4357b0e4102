#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cidyn/config.hpp"
#include "cidyn/evolve.hpp"
#include "cidyn/meanfield.hpp"

namespace cidyn {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitSolverAbort = 3;

struct RunOptions {
  kernels::Exec exec = kernels::Exec::parallel;
  std::ostream* log = nullptr;  // progress and warnings; silent when null
};

// Everything the solvers need, assembled from a config.
struct Problem {
  SystemParams params;
  OperatorMatrix hamiltonian;
  std::vector<JumpOperator> jumps;
  PureState psi0;
  ObservableSet observables;
  TimeGrid grid;
};

Problem build_problem(const RunConfig& config);

struct SimulationResult {
  TimeSeries series;
  Diagnostics diagnostics;
  TimeGrid grid;
  std::optional<SteadyStateReport> steady_state;  // meanfield with gamma_S > 0
};

// Runs the configured solver (not for the surfaces scenario).
SimulationResult simulate(const RunConfig& config, const RunOptions& options = {});

struct SurfaceGrid {
  std::vector<SurfacePoint> points;  // row-major, x outer
  std::vector<SurfaceValue> values;
  int n = 0;
};

SurfaceGrid compute_surfaces(const RunConfig& config);

// Column contract of the dynamics CSV.
const std::vector<std::string>& csv_columns();
const std::vector<std::string>& meanfield_csv_columns();

struct RunOutcome {
  int exit_code = kExitOk;
  std::vector<std::string> files;
  std::string error;  // one-line JSON error record when exit_code != 0
};

// Runs the config and writes <stem>.csv plus the <stem>.json sidecar into
// out_dir. Solver aborts leave a <stem>.error.json record.
RunOutcome run_scenario(const RunConfig& config, const RunOptions& options = {});

// (12,8), (16,10), (20,12)
std::vector<BasisSpec> default_ladder();

ConvergenceReport run_convergence(const RunConfig& config, std::span<const BasisSpec> ladder, double tolerance,
                                  const RunOptions& options = {});

// Writes <stem>.convergence.csv. Exit code 0 when converged, 1 when every
// rung ran but the final change is above tolerance.
RunOutcome run_convergence_scenario(const RunConfig& config, std::span<const BasisSpec> ladder, double tolerance,
                                    const RunOptions& options = {});

}  // namespace cidyn
