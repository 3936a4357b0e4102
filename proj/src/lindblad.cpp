// Density-matrix propagation of drho/dt = -i[H, rho] + sum_k (L rho L^dagger - {L^dagger L, rho}/2).
//
// rho is held in the interaction frame of diag(H), restricted to the basis
// states reachable from rho0 under H_eff and the jump operators, and split
// into spin blocks (s, s') of mode-space matrices. Only blocks reachable from
// rho0 are stored; everything else stays exactly zero.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <tuple>

#include "cidyn/evolve.hpp"
#include "evolve_internal.hpp"
#include "frame.hpp"

namespace cidyn {

namespace {

using kernels::Exec;

// Reachable basis states grouped by spin index (one group without a known
// basis). Group g holds full indices groups[g]; local_of maps back.
struct Layout {
  std::vector<std::vector<Index>> groups;
  std::vector<int> group_of;  // -1 outside the reachable set
  std::vector<Index> local_of;

  int n_groups() const { return static_cast<int>(groups.size()); }
  Index size(int g) const { return static_cast<Index>(groups[g].size()); }

  static Layout build(const std::string& tag, Index dim, const std::vector<char>& seed,
                      const std::vector<const SparseMatrix*>& generators) {
    // rows reachable from the seed rows: i -> r whenever G(r, i) != 0
    std::vector<std::vector<Index>> next(static_cast<std::size_t>(dim));
    for (const SparseMatrix* g : generators) {
      for (Index r = 0; r < g->outerSize(); ++r) {
        for (SparseMatrix::InnerIterator it(*g, r); it; ++it) next[it.col()].push_back(r);
      }
    }
    std::vector<char> on = seed;
    std::vector<Index> stack;
    for (Index i = 0; i < dim; ++i) {
      if (on[i]) stack.push_back(i);
    }
    while (!stack.empty()) {
      const Index i = stack.back();
      stack.pop_back();
      for (Index r : next[i]) {
        if (!on[r]) {
          on[r] = 1;
          stack.push_back(r);
        }
      }
    }
    Layout l;
    const auto basis = BasisSpec::from_tag(tag);
    const bool by_spin = basis && basis->dim() == dim;
    const int n = by_spin ? BasisSpec::kSpinDim : 1;
    std::vector<std::vector<Index>> buckets(static_cast<std::size_t>(n));
    for (Index i = 0; i < dim; ++i) {
      if (on[i]) buckets[by_spin ? basis->coordinates(i).spin : 0].push_back(i);
    }
    l.group_of.assign(static_cast<std::size_t>(dim), -1);
    l.local_of.assign(static_cast<std::size_t>(dim), -1);
    for (auto& b : buckets) {
      if (b.empty()) continue;
      const int g = l.n_groups();
      for (std::size_t k = 0; k < b.size(); ++k) {
        l.group_of[b[k]] = g;
        l.local_of[b[k]] = static_cast<Index>(k);
      }
      l.groups.push_back(std::move(b));
    }
    return l;
  }
};

// Nonzero (row group, col group) blocks of a full operator, restricted to the
// reachable set.
std::vector<std::tuple<int, int, SparseMatrix>> split_blocks(const SparseMatrix& op, const Layout& layout) {
  const int n = layout.n_groups();
  std::vector<std::vector<Eigen::Triplet<Complex>>> buckets(static_cast<std::size_t>(n * n));
  for (Index r = 0; r < op.outerSize(); ++r) {
    const int gr = layout.group_of[r];
    if (gr < 0) continue;
    for (SparseMatrix::InnerIterator it(op, r); it; ++it) {
      const int gc = layout.group_of[it.col()];
      if (gc < 0) continue;
      buckets[static_cast<std::size_t>(gr * n + gc)].emplace_back(layout.local_of[r], layout.local_of[it.col()],
                                                                  it.value());
    }
  }
  std::vector<std::tuple<int, int, SparseMatrix>> out;
  for (int s = 0; s < n; ++s) {
    for (int t = 0; t < n; ++t) {
      auto& trip = buckets[static_cast<std::size_t>(s * n + t)];
      if (trip.empty()) continue;
      SparseMatrix block(layout.size(s), layout.size(t));
      block.setFromTriplets(trip.begin(), trip.end());
      block.prune(Complex{0.0, 0.0}, 0.0);
      block.makeCompressed();
      if (block.nonZeros() > 0) out.emplace_back(s, t, std::move(block));
    }
  }
  return out;
}

// c * identity?
std::optional<Complex> scalar_identity(const SparseMatrix& block) {
  if (block.rows() != block.cols() || block.nonZeros() != block.rows()) return std::nullopt;
  const Complex c = block.valuePtr()[0];
  for (Index r = 0; r < block.outerSize(); ++r) {
    SparseMatrix::InnerIterator it(block, r);
    if (!it || it.col() != r || it.value() != c) return std::nullopt;
  }
  return c;
}

struct GeneratorBlock {
  int row_spin;
  int col_spin;
  detail::PhasedSparse op;
  std::optional<Complex> scalar;  // static c * identity
};

class BlockDensity {
 public:
  BlockDensity() = default;
  BlockDensity(const Layout& layout, const std::vector<std::pair<int, int>>& active)
      : n_(layout.n_groups()), slot_(static_cast<std::size_t>(n_ * n_), -1), active_(active) {
    for (std::size_t i = 0; i < active_.size(); ++i) {
      slot_[static_cast<std::size_t>(active_[i].first * n_ + active_[i].second)] = static_cast<int>(i);
      blocks_.push_back(DenseMatrix::Zero(layout.size(active_[i].first), layout.size(active_[i].second)));
    }
  }

  int slot(int s, int t) const { return slot_[static_cast<std::size_t>(s * n_ + t)]; }
  const std::vector<std::pair<int, int>>& active() const { return active_; }
  std::vector<DenseMatrix>& blocks() { return blocks_; }
  const std::vector<DenseMatrix>& blocks() const { return blocks_; }
  int n_spin() const { return n_; }

 private:
  int n_ = 1;
  std::vector<int> slot_;
  std::vector<std::pair<int, int>> active_;
  std::vector<DenseMatrix> blocks_;
};

std::vector<std::pair<int, int>> reachable_blocks(int n, const std::vector<std::pair<int, int>>& seed,
                                                  const std::vector<GeneratorBlock>& heff,
                                                  const std::vector<std::vector<GeneratorBlock>>& jumps) {
  std::vector<char> on(static_cast<std::size_t>(n * n), 0);
  auto at = [&](int s, int t) -> char& { return on[static_cast<std::size_t>(s * n + t)]; };
  for (auto [s, t] : seed) {
    at(s, t) = 1;
    at(t, s) = 1;
  }
  bool changed = true;
  while (changed) {
    changed = false;
    auto set = [&](int s, int t) {
      if (!at(s, t)) {
        at(s, t) = 1;
        changed = true;
      }
      if (!at(t, s)) {
        at(t, s) = 1;
        changed = true;
      }
    };
    for (int s = 0; s < n; ++s) {
      for (int t = 0; t < n; ++t) {
        if (!at(s, t)) continue;
        // (Heff rho)_{r t} picks up rho_{s t} through Heff_{r s}
        for (const auto& b : heff) {
          if (b.col_spin == s) set(b.row_spin, t);
        }
        for (const auto& jump : jumps) {
          for (const auto& a : jump) {
            if (a.col_spin != s) continue;
            for (const auto& c : jump) {
              if (c.col_spin == t) set(a.row_spin, c.row_spin);
            }
          }
        }
      }
    }
  }
  std::vector<std::pair<int, int>> active;
  for (int s = 0; s < n; ++s) {
    for (int t = 0; t < n; ++t) {
      if (at(s, t)) active.emplace_back(s, t);
    }
  }
  return active;
}

class LindbladGenerator {
 public:
  LindbladGenerator(const detail::InteractionFrame& frame, const SparseMatrix& heff,
                    std::span<const JumpOperator> jumps, const Layout& layout, Exec exec)
      : layout_(layout), exec_(exec) {
    for (auto& [s, t, block] : split_blocks(heff, layout)) {
      heff_.push_back(make_block(frame, s, t, std::move(block)));
    }
    for (const auto& j : jumps) {
      std::vector<GeneratorBlock> blocks;
      for (auto& [s, t, block] : split_blocks(j.op.sparse(), layout)) {
        blocks.push_back(make_block(frame, s, t, std::move(block)));
      }
      jumps_.push_back(std::move(blocks));
    }
  }

  const std::vector<GeneratorBlock>& heff() const { return heff_; }
  const std::vector<std::vector<GeneratorBlock>>& jumps() const { return jumps_; }

  void bind(const BlockDensity& shape) {
    products_ = shape;
    has_product_.assign(shape.active().size(), 0);
    for (auto& b : heff_) work_.push_back(b.op.base());
    for (auto& jump : jumps_) {
      for (auto& b : jump) jump_work_.push_back(b.op.base());
    }
  }

  // out = L(tau)[rho]
  void apply(double tau, const BlockDensity& rho, BlockDensity& out) {
    const Exec exec = exec_;
    for (std::size_t i = 0; i < heff_.size(); ++i) heff_[i].op.evaluate(tau, work_[i]);

    // K = Heff rho, block by block
    const auto& active = rho.active();
    for (std::size_t a = 0; a < active.size(); ++a) {
      const auto [s, sp] = active[a];
      DenseMatrix& k = products_.blocks()[a];
      has_product_[a] = 0;
      for (std::size_t i = 0; i < heff_.size(); ++i) {
        if (heff_[i].row_spin != s) continue;
        const int src = rho.slot(heff_[i].col_spin, sp);
        if (src < 0) continue;
        if (!has_product_[a]) {
          k.setZero();
          has_product_[a] = 1;
        }
        kernels::spmm_add(exec, work_[i], rho.blocks()[src], Complex{1.0, 0.0}, k);
      }
    }
    // -i K + i K^dagger (mirror block)
    for (std::size_t a = 0; a < active.size(); ++a) {
      const auto [s, sp] = active[a];
      const int mirror = rho.slot(sp, s);
      DenseMatrix& d = out.blocks()[a];
      const bool own = has_product_[a];
      const bool other = has_product_[mirror];
      if (own && other) {
        kernels::commutator_from_products(exec, products_.blocks()[a], products_.blocks()[mirror], d);
      } else if (own) {
        kernels::axpy_to(exec, DenseMatrix::Zero(d.rows(), d.cols()), -kI, products_.blocks()[a], d);
      } else if (other) {
        d = kI * products_.blocks()[mirror].adjoint();
      } else {
        d.setZero();
      }
    }
    // sum_k L rho L^dagger
    std::size_t w = 0;
    for (auto& jump : jumps_) {
      for (auto& b : jump) b.op.evaluate(tau, jump_work_[w++]);
    }
    w = 0;
    for (auto& jump : jumps_) {
      const std::size_t first = w;
      for (std::size_t i = 0; i < jump.size(); ++i) {
        for (std::size_t j = 0; j < jump.size(); ++j) {
          const int target = out.slot(jump[i].row_spin, jump[j].row_spin);
          const int src = rho.slot(jump[i].col_spin, jump[j].col_spin);
          if (target < 0 || src < 0) continue;
          if (jump[i].scalar && jump[j].scalar) {
            kernels::axpy(exec, *jump[i].scalar * std::conj(*jump[j].scalar), rho.blocks()[src],
                          out.blocks()[target]);
          } else {
            const DenseMatrix left = jump_work_[first + i] * rho.blocks()[src];
            const DenseMatrix right = jump_work_[first + j] * left.adjoint();
            out.blocks()[target] += right.adjoint();
          }
        }
      }
      w += jump.size();
    }
  }

 private:
  GeneratorBlock make_block(const detail::InteractionFrame& frame, int s, int t, SparseMatrix block) const {
    auto phased = frame.rotate_indexed(block, layout_.groups[s], layout_.groups[t]);
    std::optional<Complex> scalar;
    if (phased.is_static()) scalar = scalar_identity(phased.base());
    return {s, t, std::move(phased), scalar};
  }

  Layout layout_;
  Exec exec_;
  std::vector<GeneratorBlock> heff_;
  std::vector<std::vector<GeneratorBlock>> jumps_;
  std::vector<SparseMatrix> work_;
  std::vector<SparseMatrix> jump_work_;
  BlockDensity products_;
  std::vector<char> has_product_;
};

// Tr(rho O) for an observable split into blocks.
class BlockObservables {
 public:
  BlockObservables(const detail::InteractionFrame& frame, const ObservableSet& set, const Layout& layout) {
    for (const auto& [name, op] : set.entries()) {
      names_.push_back(name);
      std::vector<GeneratorBlock> blocks;
      for (auto& [s, t, block] : split_blocks(op.sparse(), layout)) {
        auto phased = frame.rotate_indexed(block, layout.groups[s], layout.groups[t]);
        work_.push_back(phased.base());
        blocks.push_back({s, t, std::move(phased), std::nullopt});
      }
      ops_.push_back(std::move(blocks));
    }
  }

  const std::vector<std::string>& names() const { return names_; }

  void measure(Exec exec, double tau, const BlockDensity& rho, std::span<Complex> out) {
    std::size_t w = 0;
    for (std::size_t i = 0; i < ops_.size(); ++i) {
      Complex acc{0.0, 0.0};
      for (const auto& b : ops_[i]) {
        SparseMatrix& m = work_[w++];
        // Tr(O_st rho_ts)
        const int src = rho.slot(b.col_spin, b.row_spin);
        if (src < 0) continue;
        b.op.evaluate(tau, m);
        acc += kernels::trace_product(exec, rho.blocks()[src], m);
      }
      out[i] = acc;
    }
  }

 private:
  std::vector<std::string> names_;
  std::vector<std::vector<GeneratorBlock>> ops_;
  std::vector<SparseMatrix> work_;
};

struct DensityRk4 {
  BlockDensity k, acc, tmp;

  void bind(const BlockDensity& shape) {
    k = shape;
    acc = shape;
    tmp = shape;
  }

  // a <- x + alpha * y, block-wise
  static void combine(Exec exec, const BlockDensity& x, Complex alpha, const BlockDensity& y, BlockDensity& a) {
    for (std::size_t i = 0; i < x.blocks().size(); ++i) {
      kernels::axpy_to(exec, x.blocks()[i], alpha, y.blocks()[i], a.blocks()[i]);
    }
  }
  static void accumulate(Exec exec, Complex alpha, const BlockDensity& y, BlockDensity& a) {
    for (std::size_t i = 0; i < y.blocks().size(); ++i) kernels::axpy(exec, alpha, y.blocks()[i], a.blocks()[i]);
  }

  template <class Rhs>
  void step(Exec exec, BlockDensity& y, double t, double h, Rhs&& rhs) {
    rhs(t, y, k);
    combine(exec, y, h / 6.0, k, acc);
    combine(exec, y, h / 2.0, k, tmp);
    rhs(t + 0.5 * h, tmp, k);
    accumulate(exec, h / 3.0, k, acc);
    combine(exec, y, h / 2.0, k, tmp);
    rhs(t + 0.5 * h, tmp, k);
    accumulate(exec, h / 3.0, k, acc);
    combine(exec, y, h, k, tmp);
    rhs(t + h, tmp, k);
    accumulate(exec, h / 6.0, k, acc);
    std::swap(y, acc);
  }
};

void hermitize(Exec exec, BlockDensity& rho) {
  const auto& active = rho.active();
  for (std::size_t a = 0; a < active.size(); ++a) {
    const auto [s, t] = active[a];
    if (s == t) {
      kernels::hermitize(exec, rho.blocks()[a]);
    } else if (s < t) {
      kernels::hermitize_pair(exec, rho.blocks()[a], rho.blocks()[rho.slot(t, s)]);
    }
  }
}

SparseMatrix decay_generator(std::span<const JumpOperator> jumps, Index dim) {
  SparseMatrix gamma(dim, dim);
  for (const auto& j : jumps) {
    const SparseMatrix l = j.op.sparse();
    gamma += SparseMatrix(l.adjoint() * l);
  }
  gamma.prune(Complex{0.0, 0.0}, 0.0);
  gamma.makeCompressed();
  return gamma;
}

DenseMatrix assemble(const BlockDensity& rho, const Layout& layout, Index dim) {
  DenseMatrix full = DenseMatrix::Zero(dim, dim);
  for (std::size_t a = 0; a < rho.active().size(); ++a) {
    const auto [s, t] = rho.active()[a];
    const auto& rows = layout.groups[s];
    const auto& cols = layout.groups[t];
    for (std::size_t j = 0; j < cols.size(); ++j) {
      for (std::size_t i = 0; i < rows.size(); ++i) full(rows[i], cols[j]) = rho.blocks()[a](i, j);
    }
  }
  return full;
}

}  // namespace

EvolutionResult lindblad_evolve(const OperatorMatrix& hamiltonian, std::span<const JumpOperator> jumps,
                                const DensityState& rho0, const TimeGrid& grid, const ObservableSet& observables,
                                const EvolveOptions& options) {
  grid.validate();
  detail::require_hermitian(hamiltonian, "lindblad_evolve");
  detail::require_same_basis(hamiltonian.basis_tag(), rho0.basis_tag, "lindblad_evolve");
  detail::require_same_basis(hamiltonian.basis_tag(), observables.basis_tag(), "lindblad_evolve");
  for (const auto& j : jumps) detail::require_same_basis(hamiltonian.basis_tag(), j.op.basis_tag(), "lindblad_evolve");
  if (std::abs(rho0.trace() - 1.0) > 1e-8) throw InvalidArgument("lindblad_evolve: rho0 trace is not 1");
  if ((rho0.matrix - rho0.matrix.adjoint()).cwiseAbs().maxCoeff() > 1e-10) {
    throw InvalidArgument("lindblad_evolve: rho0 is not Hermitian");
  }

  const Exec exec = options.exec;
  const Index dim = hamiltonian.dim();
  const detail::InteractionFrame frame(hamiltonian.sparse(), jumps);
  SparseMatrix heff = frame.coupling() - Complex{0.0, 0.5} * decay_generator(jumps, dim);
  heff.prune(Complex{0.0, 0.0}, 0.0);
  heff.makeCompressed();
  std::vector<SparseMatrix> jump_ops;
  for (const auto& j : jumps) jump_ops.push_back(j.op.sparse());
  std::vector<const SparseMatrix*> generators = {&heff};
  for (const auto& l : jump_ops) generators.push_back(&l);
  std::vector<char> support(static_cast<std::size_t>(dim), 0);
  for (Index i = 0; i < dim; ++i) support[i] = rho0.matrix.row(i).cwiseAbs().maxCoeff() > 0.0;
  const Layout layout = Layout::build(rho0.basis_tag, dim, support, generators);
  LindbladGenerator generator(frame, heff, jumps, layout, exec);

  std::vector<std::pair<int, int>> seed;
  for (int s = 0; s < layout.n_groups(); ++s) {
    for (int t = 0; t < layout.n_groups(); ++t) {
      bool nonzero = false;
      for (Index r : layout.groups[s]) {
        for (Index c : layout.groups[t]) nonzero = nonzero || rho0.matrix(r, c) != Complex{0.0, 0.0};
        if (nonzero) break;
      }
      if (nonzero) seed.emplace_back(s, t);
    }
  }
  BlockDensity rho(layout, reachable_blocks(layout.n_groups(), seed, generator.heff(), generator.jumps()));
  for (std::size_t a = 0; a < rho.active().size(); ++a) {
    const auto [s, t] = rho.active()[a];
    const auto& rows = layout.groups[s];
    const auto& cols = layout.groups[t];
    for (std::size_t j = 0; j < cols.size(); ++j) {
      for (std::size_t i = 0; i < rows.size(); ++i) rho.blocks()[a](i, j) = rho0.matrix(rows[i], cols[j]);
    }
  }
  generator.bind(rho);
  BlockObservables probes(frame, observables, layout);
  const detail::LeakageProbe leakage(rho0.basis_tag);

  EvolutionResult result;
  auto& diag = result.diagnostics;
  diag.solver = "lindblad";
  diag.step = grid.step();
  diag.interaction_frame = frame.active();
  bool warned_negative = false;

  std::vector<Complex> sample(probes.names().size());
  auto record = [&](int step_index, const BlockDensity& r) {
    const double tau = step_index * grid.step();
    const double t = grid.time_at(step_index);
    Complex trace{0.0, 0.0};
    double min_pop = std::numeric_limits<double>::infinity();
    double lx = 0.0;
    double ly = 0.0;
    for (std::size_t a = 0; a < r.active().size(); ++a) {
      const auto [s, sp] = r.active()[a];
      if (s != sp) continue;
      const auto& block = r.blocks()[a];
      for (Index j = 0; j < block.rows(); ++j) {
        const double p = block(j, j).real();
        trace += block(j, j);
        min_pop = std::min(min_pop, p);
        if (leakage.basis) {
          const Index full = layout.groups[s][j];
          if (leakage.top_x(full)) lx += p;
          if (leakage.top_y(full)) ly += p;
        }
      }
    }
    const double drift = std::abs(trace - 1.0);
    result.times.push_back(t);
    probes.measure(exec, tau, r, sample);
    for (std::size_t i = 0; i < sample.size(); ++i) result.tracks[probes.names()[i]].push_back(sample[i]);
    diag.trace.push_back(trace.real());
    diag.norm_drift.push_back(drift);
    diag.min_population.push_back(min_pop);
    diag.leakage_x.push_back(lx);
    diag.leakage_y.push_back(ly);
    if (options.retain_states) result.density_states.push_back({frame.to_lab(tau, assemble(r, layout, dim)), rho0.basis_tag});
    if (min_pop < options.negative_population_warning && !warned_negative) {
      warned_negative = true;
      std::ostringstream os;
      os << "negative population " << min_pop << " at t = " << t;
      diag.warnings.push_back(os.str());
    }
    if (drift > options.trace_tolerance) {
      std::ostringstream os;
      os << "trace drift " << drift << " exceeds tolerance " << options.trace_tolerance << " at t = " << t;
      throw SolverAbort("trace_drift", os.str(), t);
    }
  };

  auto rhs = [&](double tau, const BlockDensity& y, BlockDensity& out) {
    generator.apply(tau, y, out);
    ++diag.rhs_evaluations;
  };

  DensityRk4 rk;
  rk.bind(rho);
  const double h = grid.step();
  record(0, rho);
  for (int n = 1; n <= grid.n_steps; ++n) {
    rk.step(exec, rho, (n - 1) * h, h, rhs);
    hermitize(exec, rho);
    ++diag.steps;
    if (n % grid.output_stride == 0) record(n, rho);
  }
  if (diag.max_leakage() > options.leakage_warning) {
    diag.warnings.push_back("Fock leakage " + std::to_string(diag.max_leakage()) + " above warning threshold");
  }
  return result;
}

}  // namespace cidyn
