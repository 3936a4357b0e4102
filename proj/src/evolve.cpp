#include "cidyn/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "evolve_internal.hpp"
#include "frame.hpp"

namespace cidyn {

namespace detail {

FrameObservables::FrameObservables(const InteractionFrame& frame, const ObservableSet& set) {
  for (const auto& [name, op] : set.entries()) {
    names_.push_back(name);
    ops_.push_back(frame.rotate(op.sparse()));
  }
  std::size_t offset = 0;
  for (const auto& op : ops_) {
    offsets_.push_back(offset);
    offset += op.n_frequencies();
  }
  offsets_.push_back(offset);
}

std::vector<Complex> FrameObservables::components(const StateVector& psi) const {
  std::vector<Complex> out(offsets_.back());
  for (std::size_t i = 0; i < ops_.size(); ++i) ops_[i].components(psi, out.data() + offsets_[i]);
  return out;
}

void FrameObservables::measure_frozen(double tau, const std::vector<Complex>& components, double norm2,
                                      std::span<Complex> out) const {
  for (std::size_t i = 0; i < ops_.size(); ++i) out[i] = ops_[i].combine(tau, components.data() + offsets_[i]) / norm2;
}

void FrameObservables::measure(double tau, const StateVector& psi, std::span<Complex> out) const {
  const double norm2 = psi.squaredNorm();
  for (std::size_t i = 0; i < ops_.size(); ++i) out[i] = ops_[i].expectation(tau, psi) / norm2;
}

bool LeakageProbe::top_x(Index i) const {
  return basis->coordinates(i).nx >= std::max(0, basis->n_max_x - 2);
}

bool LeakageProbe::top_y(Index i) const {
  return basis->coordinates(i).ny >= std::max(0, basis->n_max_y - 2);
}

std::pair<double, double> LeakageProbe::pure(const StateVector& psi) const {
  if (!basis || basis->dim() != psi.size()) return {0.0, 0.0};
  const double norm2 = psi.squaredNorm();
  double lx = 0.0;
  double ly = 0.0;
  for (Index i = 0; i < psi.size(); ++i) {
    const double p = std::norm(psi(i));
    if (top_x(i)) lx += p;
    if (top_y(i)) ly += p;
  }
  return {lx / norm2, ly / norm2};
}

void require_hermitian(const OperatorMatrix& h, const char* who) {
  const double err = h.hermiticity_error();
  if (err > 1e-12 * std::max(1.0, h.max_abs())) {
    std::ostringstream os;
    os << who << ": Hamiltonian is not Hermitian (max |H - H^dagger| = " << err << ")";
    throw InvalidArgument(os.str());
  }
}

void require_same_basis(const std::string& a, const std::string& b, const char* who) {
  if (a != b) throw DimensionError(std::string(who) + ": basis mismatch ('" + a + "' vs '" + b + "')");
}

}  // namespace detail

// ---------------------------------------------------------------------------

void TimeGrid::validate() const {
  if (!(t1 > t0)) throw InvalidArgument("time grid: t1 must be greater than t0");
  if (n_steps < 1) throw InvalidArgument("time grid: n_steps must be >= 1");
  if (output_stride < 1 || n_steps % output_stride != 0) {
    throw InvalidArgument("time grid: output_stride must divide n_steps");
  }
}

TimeGrid TimeGrid::with_output_interval(double t0, double t1, double output_interval, double max_step) {
  if (!(t1 > t0) || !(output_interval > 0.0) || !(max_step > 0.0)) {
    throw InvalidArgument("time grid: need t1 > t0 and positive intervals");
  }
  const double ratio = (t1 - t0) / output_interval;
  const int n_out = static_cast<int>(std::llround(ratio));
  if (n_out < 1 || std::abs(ratio - n_out) > 1e-9 * std::max(1.0, ratio)) {
    throw InvalidArgument("time grid: output interval must divide the time span");
  }
  const int stride = std::max(1, static_cast<int>(std::ceil(output_interval / max_step - 1e-9)));
  TimeGrid g{t0, t1, n_out * stride, stride};
  g.validate();
  return g;
}

double Diagnostics::max_norm_drift() const {
  return norm_drift.empty() ? 0.0 : *std::max_element(norm_drift.begin(), norm_drift.end());
}

double Diagnostics::max_leakage() const {
  double m = 0.0;
  for (double v : leakage_x) m = std::max(m, v);
  for (double v : leakage_y) m = std::max(m, v);
  return m;
}

double recommended_step(const OperatorMatrix& hamiltonian, std::span<const JumpOperator> jumps,
                        const StepPolicy& policy) {
  const detail::InteractionFrame frame(hamiltonian.sparse(), jumps);
  double norm = detail::spectral_norm_estimate(frame.coupling());
  for (const auto& j : jumps) norm += 0.5 * j.rate;
  if (norm <= 0.0) return policy.max_step;
  return std::min(policy.step_factor / norm, policy.max_step);
}

// ---------------------------------------------------------------------------

EvolutionResult schrodinger_evolve(const OperatorMatrix& hamiltonian, const PureState& psi0, const TimeGrid& grid,
                                   const ObservableSet& observables, const EvolveOptions& options) {
  grid.validate();
  detail::require_hermitian(hamiltonian, "schrodinger_evolve");
  detail::require_same_basis(hamiltonian.basis_tag(), psi0.basis_tag, "schrodinger_evolve");
  detail::require_same_basis(hamiltonian.basis_tag(), observables.basis_tag(), "schrodinger_evolve");
  if (std::abs(psi0.norm_squared() - 1.0) > 1e-8) throw InvalidArgument("schrodinger_evolve: psi0 is not normalized");

  const detail::InteractionFrame frame(hamiltonian.sparse(), {});
  const detail::PhasedSparse coupling = frame.rotate(frame.coupling());
  detail::FrameObservables probes(frame, observables);
  const detail::LeakageProbe leakage(psi0.basis_tag);

  EvolutionResult result;
  auto& diag = result.diagnostics;
  diag.solver = "schrodinger";
  diag.step = grid.step();
  diag.interaction_frame = frame.active();
  for (const auto& name : probes.names()) result.tracks[name].reserve(grid.n_outputs());

  std::vector<Complex> sample(probes.names().size());
  auto record = [&](int step_index, const StateVector& psi) {
    const double tau = step_index * grid.step();
    const double t = grid.time_at(step_index);
    const double drift = std::abs(psi.squaredNorm() - 1.0);
    result.times.push_back(t);
    probes.measure(tau, psi, sample);
    for (std::size_t i = 0; i < sample.size(); ++i) result.tracks[probes.names()[i]].push_back(sample[i]);
    diag.trace.push_back(psi.squaredNorm());
    diag.norm_drift.push_back(drift);
    const auto [lx, ly] = leakage.pure(psi);
    diag.leakage_x.push_back(lx);
    diag.leakage_y.push_back(ly);
    if (options.retain_states) result.pure_states.push_back({frame.to_lab(tau, psi), psi0.basis_tag});
    if (drift > options.norm_tolerance) {
      std::ostringstream os;
      os << "norm drift " << drift << " exceeds tolerance " << options.norm_tolerance << " at t = " << t;
      throw SolverAbort("norm_drift", os.str(), t);
    }
  };

  auto rhs = [&](double tau, const StateVector& y, StateVector& out) {
    out.setZero(y.size());
    coupling.apply_add(tau, y, -kI, out);
    ++diag.rhs_evaluations;
  };

  StateVector psi = psi0.amplitudes;
  detail::VectorRk4 rk;
  const double h = grid.step();
  record(0, psi);
  for (int n = 1; n <= grid.n_steps; ++n) {
    rk.step(psi, (n - 1) * h, h, rhs);
    ++diag.steps;
    if (n % grid.output_stride == 0) record(n, psi);
  }
  if (diag.max_leakage() > options.leakage_warning) {
    diag.warnings.push_back("Fock leakage " + std::to_string(diag.max_leakage()) + " above warning threshold");
  }
  return result;
}

// ---------------------------------------------------------------------------

ConvergenceReport convergence_sweep(const ScenarioRunner& run, std::span<const BasisSpec> ladder, double tolerance) {
  if (ladder.empty()) throw InvalidArgument("convergence_sweep: empty ladder");
  for (std::size_t i = 1; i < ladder.size(); ++i) {
    if (ladder[i].n_max_x < ladder[i - 1].n_max_x || ladder[i].n_max_y < ladder[i - 1].n_max_y) {
      throw InvalidArgument("convergence_sweep: ladder cutoffs must not decrease");
    }
  }
  ConvergenceReport report;
  report.tolerance = tolerance;
  std::optional<TimeSeries> previous;
  int previous_index = -1;
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    ConvergenceRung rung;
    rung.basis = ladder[i];
    TimeSeries current;
    try {
      current = run(ladder[i]);
      rung.completed = true;
    } catch (const std::bad_alloc&) {
      rung.error = "out of memory";
    } catch (const std::exception& e) {
      rung.error = e.what();
    }
    if (rung.completed && previous) {
      if (current.times.size() != previous->times.size()) {
        rung.completed = false;
        rung.error = "time axis differs from previous rung";
      } else {
        for (const auto& [name, track] : current.tracks) {
          const auto it = previous->tracks.find(name);
          if (it == previous->tracks.end()) continue;
          double change = 0.0;
          for (std::size_t k = 0; k < track.size(); ++k) change = std::max(change, std::abs(track[k] - it->second[k]));
          rung.max_change[name] = change;
          rung.worst_change = std::max(rung.worst_change, change);
        }
        if (rung.worst_change < tolerance && !report.first_converged_rung) {
          report.first_converged_rung = previous_index;
        }
      }
    }
    if (rung.completed) {
      previous = std::move(current);
      previous_index = static_cast<int>(i);
    }
    report.rungs.push_back(std::move(rung));
  }
  const auto& last = report.rungs.back();
  report.converged = report.rungs.size() > 1 && last.completed && !last.max_change.empty() &&
                     last.worst_change < tolerance;
  return report;
}

}  // namespace cidyn
