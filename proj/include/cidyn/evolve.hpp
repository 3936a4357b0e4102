#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cidyn/hilbert.hpp"
#include "cidyn/kernels.hpp"
#include "cidyn/model.hpp"
#include "cidyn/observables.hpp"
#include "cidyn/state.hpp"

namespace cidyn {

// n_steps fixed RK4 steps of size (t1 - t0) / n_steps; a sample is recorded
// every output_stride steps (and at t0).
struct TimeGrid {
  double t0 = 0.0;
  double t1 = 10.0;
  int n_steps = 1000;
  int output_stride = 10;

  void validate() const;
  double step() const { return (t1 - t0) / n_steps; }
  int n_outputs() const { return n_steps / output_stride + 1; }
  // t0 + n h, rounded once so output times come out as exact as possible
  double time_at(int n) const { return t0 + (t1 - t0) * n / n_steps; }
  double output_time(int k) const { return time_at(k * output_stride); }

  // Samples every `output_interval`; the integration step is the largest
  // divisor of the interval not exceeding `max_step`.
  static TimeGrid with_output_interval(double t0, double t1, double output_interval, double max_step);
};

struct StepPolicy {
  double step_factor = 0.2;  // h <= step_factor / ||V||
  double max_step = 0.02;    // us
};

// Largest stable step for the coupling part of H (the diagonal is carried
// exactly by the interaction frame).
double recommended_step(const OperatorMatrix& hamiltonian, std::span<const JumpOperator> jumps,
                        const StepPolicy& policy = {});

struct EvolveOptions {
  bool retain_states = false;
  double norm_tolerance = 1e-8;
  double trace_tolerance = 1e-7;
  double negative_population_warning = -1e-6;
  double leakage_warning = 1e-6;
  kernels::Exec exec = kernels::Exec::parallel;
};

struct Diagnostics {
  std::string solver;
  double step = 0.0;
  std::int64_t steps = 0;
  std::int64_t rhs_evaluations = 0;
  bool interaction_frame = false;
  std::vector<double> trace;        // norm^2 or Re Tr rho per output
  std::vector<double> norm_drift;   // |norm^2 - 1| or |Tr rho - 1| per output
  std::vector<double> leakage_x;    // population of the top two x Fock levels
  std::vector<double> leakage_y;
  std::vector<double> min_population;  // smallest diagonal entry (density runs)
  std::int64_t jumps = 0;              // trajectories only
  std::vector<std::string> warnings;

  double max_norm_drift() const;
  double max_leakage() const;
};

struct EvolutionResult {
  std::vector<double> times;
  std::map<std::string, std::vector<Complex>> tracks;
  std::map<std::string, std::vector<double>> stderr_tracks;  // trajectories only
  Diagnostics diagnostics;
  std::vector<PureState> pure_states;
  std::vector<DensityState> density_states;
};

EvolutionResult schrodinger_evolve(const OperatorMatrix& hamiltonian, const PureState& psi0, const TimeGrid& grid,
                                   const ObservableSet& observables, const EvolveOptions& options = {});

EvolutionResult lindblad_evolve(const OperatorMatrix& hamiltonian, std::span<const JumpOperator> jumps,
                                const DensityState& rho0, const TimeGrid& grid, const ObservableSet& observables,
                                const EvolveOptions& options = {});

struct TrajectoryOptions {
  int n_traj = 100;
  std::uint64_t seed = 1;
  double jump_time_resolution = 1e-6;  // us
};

// Monte Carlo wave-function unravelling. Trajectory i draws from a stream
// seeded by (seed, i), so results do not depend on scheduling.
EvolutionResult mc_trajectories(const OperatorMatrix& hamiltonian, std::span<const JumpOperator> jumps,
                                const PureState& psi0, const TimeGrid& grid, const ObservableSet& observables,
                                const TrajectoryOptions& traj, const EvolveOptions& options = {});

// Uniform double in [0, 1) from the per-trajectory stream; exposed for tests.
class TrajectoryRng {
 public:
  TrajectoryRng(std::uint64_t seed, std::uint64_t trajectory);
  double uniform();

 private:
  std::mt19937_64 engine_;
};

struct ConvergenceRung {
  BasisSpec basis;
  bool completed = false;
  std::string error;
  std::map<std::string, double> max_change;  // vs previous completed rung
  double worst_change = 0.0;
};

struct ConvergenceReport {
  std::vector<ConvergenceRung> rungs;
  double tolerance = 1e-4;
  bool converged = false;         // final rung change below tolerance
  // coarsest rung that already agrees with the next completed rung
  std::optional<int> first_converged_rung;
};

using ScenarioRunner = std::function<TimeSeries(const BasisSpec&)>;

ConvergenceReport convergence_sweep(const ScenarioRunner& run, std::span<const BasisSpec> ladder,
                                    double tolerance = 1e-4);

}  // namespace cidyn
