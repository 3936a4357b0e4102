// Monte Carlo wave-function trajectories: no-jump evolution under
// H_eff = H - (i/2) sum_k L_k^dagger L_k until the squared norm falls below a
// uniform draw, jump time refined by bisection, jump channel chosen with
// probability proportional to ||L_k psi||^2.

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <sstream>

#include "cidyn/evolve.hpp"
#include "evolve_internal.hpp"
#include "frame.hpp"
#include "kernels_omp.hpp"

namespace cidyn {

namespace {

struct Shared {
  detail::InteractionFrame frame;
  // H_eff splits into decoupled blocks (connected components of its
  // sparsity graph). Amplitudes outside every block are constant in the
  // interaction frame.
  struct Component {
    std::vector<Index> index;
    detail::PhasedSparse heff;
  };
  std::vector<Component> components;
  std::vector<int> component_of;  // -1: untouched by H_eff
  std::vector<SparseMatrix> jumps;
  const ObservableSet* observables;
  std::optional<detail::FrameObservables> probes;
  detail::LeakageProbe leakage;
  TimeGrid grid;
  double resolution;
};

struct TrajectoryOutput {
  std::vector<Complex> values;  // [output][observable]
  std::vector<double> leak_x;
  std::vector<double> leak_y;
  std::int64_t jumps = 0;
  std::int64_t steps = 0;
  std::int64_t rhs = 0;
};

class Trajectory {
 public:
  Trajectory(const Shared& shared, std::uint64_t seed, std::uint64_t index) : sh_(shared), rng_(seed, index) {}

  TrajectoryOutput run(const StateVector& psi0) {
    TrajectoryOutput out;
    const auto n_obs = sh_.observables->size();
    const int n_out = sh_.grid.n_outputs();
    out.values.resize(static_cast<std::size_t>(n_out) * n_obs);
    out.leak_x.reserve(n_out);
    out.leak_y.reserve(n_out);

    load(psi0);
    threshold_ = rng_.uniform();
    const double h = sh_.grid.step();
    int k = 0;
    auto record = [&](double tau) {
      const std::span<Complex> slot(out.values.data() + static_cast<std::size_t>(k) * n_obs, n_obs);
      if (frozen_) {
        if (frozen_components_.empty()) frozen_components_ = sh_.probes->components(psi_);
        sh_.probes->measure_frozen(tau, frozen_components_, psi_.squaredNorm(), slot);
      } else {
        sync();
        sh_.probes->measure(tau, psi_, slot);
      }
      if (!frozen_ || out.leak_x.empty() || leak_dirty_) {
        leak_ = sh_.leakage.pure(psi_);
        leak_dirty_ = false;
      }
      out.leak_x.push_back(leak_.first);
      out.leak_y.push_back(leak_.second);
      ++k;
    };
    record(0.0);
    for (int n = 1; n <= sh_.grid.n_steps; ++n) {
      advance((n - 1) * h, n * h, out);
      ++out.steps;
      if (n % sh_.grid.output_stride == 0) record(n * h);
    }
    out.rhs = rhs_count_;
    return out;
  }

 private:
  using Parts = std::vector<StateVector>;

  Parts step_from(const Parts& start, double tau, double h) {
    Parts out = start;
    for (std::size_t c = 0; c < live_.size(); ++c) {
      const auto& heff = sh_.components[live_[c]].heff;
      rk_.step(out[c], tau, h, [&](double t, const StateVector& in, StateVector& o) {
        o.setZero(in.size());
        heff.apply_add(t, in, -kI, o);
        ++rhs_count_;
      });
    }
    return out;
  }

  double norm_squared(const Parts& parts) const {
    double n = inactive_norm2_;
    for (const auto& p : parts) n += p.squaredNorm();
    return n;
  }

  // full state -> amplitudes on the blocks it occupies, constant remainder
  void load(const StateVector& full) {
    psi_ = full;
    live_.clear();
    parts_.clear();
    double inactive = 0.0;
    for (Index i = 0; i < psi_.size(); ++i) {
      if (psi_[i] == Complex{0.0, 0.0}) continue;
      const int c = sh_.component_of[i];
      if (c < 0) {
        inactive += std::norm(psi_[i]);
      } else if (std::find(live_.begin(), live_.end(), c) == live_.end()) {
        live_.push_back(c);
      }
    }
    std::sort(live_.begin(), live_.end());
    for (int c : live_) {
      const auto& index = sh_.components[c].index;
      StateVector part(static_cast<Index>(index.size()));
      for (std::size_t k = 0; k < index.size(); ++k) part[k] = psi_[index[k]];
      parts_.push_back(std::move(part));
    }
    inactive_norm2_ = inactive;
    frozen_ = live_.empty();
    frozen_components_.clear();
    synced_ = true;
    leak_dirty_ = true;
  }

  void sync() {
    if (synced_) return;
    for (std::size_t c = 0; c < live_.size(); ++c) {
      const auto& index = sh_.components[live_[c]].index;
      for (std::size_t k = 0; k < index.size(); ++k) psi_[index[k]] = parts_[c][k];
    }
    synced_ = true;
  }

  void advance(double a, double b, TrajectoryOutput& out) {
    while (!frozen_ && a < b) {
      Parts next = step_from(parts_, a, b - a);
      synced_ = false;
      if (sh_.jumps.empty() || norm_squared(next) > threshold_) {
        parts_.swap(next);
        return;
      }
      // jump inside (a, b]: bisect on the no-jump norm
      double lo = 0.0;
      double hi = b - a;
      while (hi - lo > sh_.resolution) {
        const double mid = 0.5 * (lo + hi);
        if (norm_squared(step_from(parts_, a, mid)) > threshold_) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      parts_ = hi == b - a ? std::move(next) : step_from(parts_, a, hi);
      sync();
      jump();
      ++out.jumps;
      a += hi;
      if (b - a <= 0.5 * sh_.resolution) {
        // the realigning step would be shorter than the jump-time resolution
        a = b;
      }
    }
  }

  void jump() {
    std::vector<double> weights(sh_.jumps.size());
    std::vector<StateVector> candidates(sh_.jumps.size());
    double total = 0.0;
    for (std::size_t c = 0; c < sh_.jumps.size(); ++c) {
      candidates[c] = StateVector::Zero(psi_.size());
      kernels::spmv_add(sh_.jumps[c], psi_, Complex{1.0, 0.0}, candidates[c]);
      weights[c] = candidates[c].squaredNorm();
      total += weights[c];
    }
    const double pick = rng_.uniform() * total;
    threshold_ = rng_.uniform();
    if (total <= 0.0) {
      load(psi_ / psi_.norm());
      return;
    }
    double cumulative = 0.0;
    std::size_t chosen = 0;
    for (; chosen + 1 < weights.size(); ++chosen) {
      cumulative += weights[chosen];
      if (pick < cumulative) break;
    }
    while (weights[chosen] <= 0.0 && chosen > 0) --chosen;
    load(candidates[chosen] / std::sqrt(weights[chosen]));
  }

  const Shared& sh_;
  TrajectoryRng rng_;
  detail::VectorRk4 rk_;
  StateVector psi_;      // full state, current whenever synced_
  std::vector<int> live_;  // occupied blocks, ascending
  Parts parts_;            // amplitudes on each occupied block
  double inactive_norm2_ = 0.0;
  bool synced_ = true;
  double threshold_ = 0.0;
  bool frozen_ = false;
  std::vector<Complex> frozen_components_;
  std::pair<double, double> leak_{0.0, 0.0};
  bool leak_dirty_ = true;
  std::int64_t rhs_count_ = 0;
};

}  // namespace

TrajectoryRng::TrajectoryRng(std::uint64_t seed, std::uint64_t trajectory) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(trajectory), static_cast<std::uint32_t>(trajectory >> 32)};
  engine_.seed(seq);
}

// top 53 bits; uniform_real_distribution would leave the value to the library
double TrajectoryRng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

EvolutionResult mc_trajectories(const OperatorMatrix& hamiltonian, std::span<const JumpOperator> jumps,
                                const PureState& psi0, const TimeGrid& grid, const ObservableSet& observables,
                                const TrajectoryOptions& traj, const EvolveOptions& options) {
  grid.validate();
  if (traj.n_traj < 1) throw InvalidArgument("mc_trajectories: n_traj must be >= 1");
  if (!(traj.jump_time_resolution > 0.0)) throw InvalidArgument("mc_trajectories: jump time resolution must be > 0");
  detail::require_hermitian(hamiltonian, "mc_trajectories");
  detail::require_same_basis(hamiltonian.basis_tag(), psi0.basis_tag, "mc_trajectories");
  detail::require_same_basis(hamiltonian.basis_tag(), observables.basis_tag(), "mc_trajectories");
  for (const auto& j : jumps) detail::require_same_basis(hamiltonian.basis_tag(), j.op.basis_tag(), "mc_trajectories");
  if (std::abs(psi0.norm_squared() - 1.0) > 1e-8) throw InvalidArgument("mc_trajectories: psi0 is not normalized");

  const Index dim = hamiltonian.dim();
  Shared shared{detail::InteractionFrame(hamiltonian.sparse(), jumps), {}, {}, {}, &observables, std::nullopt,
                detail::LeakageProbe(psi0.basis_tag), grid, traj.jump_time_resolution};
  shared.probes.emplace(shared.frame, observables);
  SparseMatrix gamma(dim, dim);
  for (const auto& j : jumps) {
    SparseMatrix l = j.op.sparse();
    gamma += SparseMatrix(l.adjoint() * l);
    shared.jumps.push_back(std::move(l));
  }
  SparseMatrix heff = shared.frame.coupling() - Complex{0.0, 0.5} * gamma;
  heff.prune(Complex{0.0, 0.0}, 0.0);
  heff.makeCompressed();
  // connected components of the H_eff graph (union-find)
  std::vector<Index> parent(static_cast<std::size_t>(dim));
  for (Index i = 0; i < dim; ++i) parent[i] = i;
  auto root = [&](Index i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  std::vector<char> touched(static_cast<std::size_t>(dim), 0);
  for (Index r = 0; r < heff.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(heff, r); it; ++it) {
      touched[r] = 1;
      touched[it.col()] = 1;
      const Index a = root(r);
      const Index b = root(it.col());
      if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
  }
  shared.component_of.assign(static_cast<std::size_t>(dim), -1);
  std::vector<int> id_of_root(static_cast<std::size_t>(dim), -1);
  std::vector<Index> local(static_cast<std::size_t>(dim), -1);
  for (Index i = 0; i < dim; ++i) {
    if (!touched[i]) continue;
    int& id = id_of_root[root(i)];
    if (id < 0) {
      id = static_cast<int>(shared.components.size());
      shared.components.emplace_back();
    }
    shared.component_of[i] = id;
    local[i] = static_cast<Index>(shared.components[id].index.size());
    shared.components[id].index.push_back(i);
  }
  std::vector<std::vector<Eigen::Triplet<Complex>>> entries(shared.components.size());
  for (Index r = 0; r < heff.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(heff, r); it; ++it) {
      entries[shared.component_of[r]].emplace_back(local[r], local[it.col()], it.value());
    }
  }
  for (std::size_t c = 0; c < shared.components.size(); ++c) {
    auto& comp = shared.components[c];
    const Index n = static_cast<Index>(comp.index.size());
    SparseMatrix block(n, n);
    block.setFromTriplets(entries[c].begin(), entries[c].end());
    comp.heff = shared.frame.rotate_subspace(block, comp.index);
  }

  EvolutionResult result;
  auto& diag = result.diagnostics;
  diag.solver = "trajectories";
  diag.step = grid.step();
  diag.interaction_frame = shared.frame.active();

  const int n_out = grid.n_outputs();
  const std::size_t n_obs = observables.size();
  std::vector<Complex> mean(static_cast<std::size_t>(n_out) * n_obs, Complex{0.0, 0.0});
  std::vector<double> m2(mean.size(), 0.0);
  std::vector<double> leak_x(n_out, 0.0);
  std::vector<double> leak_y(n_out, 0.0);

  // Batches run in parallel; accumulation is serial in trajectory order, so
  // the result does not depend on the thread count.
  constexpr int kBatch = 64;
  std::int64_t done = 0;
  for (int first = 0; first < traj.n_traj; first += kBatch) {
    const int count = std::min(kBatch, traj.n_traj - first);
    std::vector<TrajectoryOutput> batch(static_cast<std::size_t>(count));
    if (options.exec == kernels::Exec::parallel) {
      CIDYN_OMP_PARALLEL_FOR_DYNAMIC
      for (int i = 0; i < count; ++i) {
        batch[i] = Trajectory(shared, traj.seed, static_cast<std::uint64_t>(first + i)).run(psi0.amplitudes);
      }
    } else {
      for (int i = 0; i < count; ++i) {
        batch[i] = Trajectory(shared, traj.seed, static_cast<std::uint64_t>(first + i)).run(psi0.amplitudes);
      }
    }
    for (const auto& t : batch) {
      ++done;
      for (std::size_t v = 0; v < mean.size(); ++v) {
        // Welford on the real part; imaginary part only averaged
        const Complex x = t.values[v];
        const double delta = x.real() - mean[v].real();
        mean[v] += (x - mean[v]) / static_cast<double>(done);
        m2[v] += delta * (x.real() - mean[v].real());
      }
      for (int k = 0; k < n_out; ++k) {
        leak_x[k] += t.leak_x[k];
        leak_y[k] += t.leak_y[k];
      }
      diag.jumps += t.jumps;
      diag.steps += t.steps;
      diag.rhs_evaluations += t.rhs;
    }
  }

  const double n = static_cast<double>(traj.n_traj);
  for (int k = 0; k < n_out; ++k) {
    result.times.push_back(grid.output_time(k));
    diag.trace.push_back(1.0);  // every sample is taken on the normalized state
    diag.norm_drift.push_back(0.0);
    diag.leakage_x.push_back(leak_x[k] / n);
    diag.leakage_y.push_back(leak_y[k] / n);
  }
  for (std::size_t o = 0; o < n_obs; ++o) {
    const auto& name = observables.entries()[o].first;
    auto& track = result.tracks[name];
    auto& se = result.stderr_tracks[name];
    for (int k = 0; k < n_out; ++k) {
      const std::size_t v = static_cast<std::size_t>(k) * n_obs + o;
      track.push_back(mean[v]);
      se.push_back(traj.n_traj > 1 ? std::sqrt(m2[v] / (n - 1.0) / n) : 0.0);
    }
  }
  if (diag.max_leakage() > options.leakage_warning) {
    diag.warnings.push_back("Fock leakage " + std::to_string(diag.max_leakage()) + " above warning threshold");
  }
  return result;
}

}  // namespace cidyn
