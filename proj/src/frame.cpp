#include "frame.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace cidyn::detail {

namespace {

// Two frequencies closer than this are the same rotation.
constexpr double kDeltaMatch = 1e-12;

}  // namespace

PhasedSparse::PhasedSparse(SparseMatrix base, const std::vector<double>& delta) : base_(std::move(base)) {
  base_.makeCompressed();
  if (static_cast<Index>(delta.size()) != base_.nonZeros()) {
    throw DimensionError("PhasedSparse: one frequency per nonzero required");
  }
  delta_id_.resize(delta.size());
  for (std::size_t n = 0; n < delta.size(); ++n) {
    const double d = delta[n];
    auto it = std::find_if(unique_delta_.begin(), unique_delta_.end(),
                           [&](double u) { return std::abs(u - d) <= kDeltaMatch * std::max(1.0, std::abs(d)); });
    if (it == unique_delta_.end()) {
      unique_delta_.push_back(d);
      it = std::prev(unique_delta_.end());
    }
    delta_id_[n] = static_cast<int>(it - unique_delta_.begin());
    if (d != 0.0) static_ = false;
  }
}

namespace {

inline Complex cmul(Complex a, Complex b) {
  return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}

constexpr std::size_t kMaxStackPhases = 64;

}  // namespace

void PhasedSparse::phases(double t, Complex* out) const {
  for (std::size_t u = 0; u < unique_delta_.size(); ++u) out[u] = std::polar(1.0, unique_delta_[u] * t);
}

void PhasedSparse::evaluate(double t, SparseMatrix& out) const {
  if (static_) {
    std::copy(base_.valuePtr(), base_.valuePtr() + base_.nonZeros(), out.valuePtr());
    return;
  }
  std::vector<Complex> phase(unique_delta_.size());
  phases(t, phase.data());
  const Complex* in = base_.valuePtr();
  Complex* dst = out.valuePtr();
  const Index nnz = base_.nonZeros();
  for (Index n = 0; n < nnz; ++n) dst[n] = cmul(in[n], phase[delta_id_[n]]);
}

void PhasedSparse::apply_add(double t, const StateVector& x, Complex alpha, StateVector& y) const {
  if (x.size() != base_.cols() || y.size() != base_.rows()) throw DimensionError("PhasedSparse: shape mismatch");
  std::vector<Complex> heap;
  Complex stack[kMaxStackPhases];
  Complex* phase = stack;
  if (unique_delta_.size() > kMaxStackPhases) {
    heap.resize(unique_delta_.size());
    phase = heap.data();
  }
  phases(t, phase);
  const auto* outer = base_.outerIndexPtr();
  const auto* inner = base_.innerIndexPtr();
  const Complex* values = base_.valuePtr();
  const Complex* xs = x.data();
  for (Index r = 0; r < base_.rows(); ++r) {
    Complex acc{0.0, 0.0};
    for (auto k = outer[r]; k < outer[r + 1]; ++k) {
      const Complex v = static_ ? values[k] : cmul(values[k], phase[delta_id_[k]]);
      const Complex p = cmul(v, xs[inner[k]]);
      acc = {acc.real() + p.real(), acc.imag() + p.imag()};
    }
    y[r] += cmul(alpha, acc);
  }
}

Complex PhasedSparse::expectation(double t, const StateVector& psi) const {
  std::vector<Complex> heap;
  Complex stack[kMaxStackPhases];
  Complex* phase = stack;
  if (unique_delta_.size() > kMaxStackPhases) {
    heap.resize(unique_delta_.size());
    phase = heap.data();
  }
  phases(t, phase);
  const auto* outer = base_.outerIndexPtr();
  const auto* inner = base_.innerIndexPtr();
  const Complex* values = base_.valuePtr();
  double re = 0.0;
  double im = 0.0;
  for (Index r = 0; r < base_.rows(); ++r) {
    if (outer[r] == outer[r + 1]) continue;
    Complex acc{0.0, 0.0};
    for (auto k = outer[r]; k < outer[r + 1]; ++k) {
      const Complex v = static_ ? values[k] : cmul(values[k], phase[delta_id_[k]]);
      const Complex p = cmul(v, psi[inner[k]]);
      acc = {acc.real() + p.real(), acc.imag() + p.imag()};
    }
    const Complex p = cmul(std::conj(psi[r]), acc);
    re += p.real();
    im += p.imag();
  }
  return {re, im};
}

void PhasedSparse::components(const StateVector& psi, Complex* out) const {
  std::fill(out, out + unique_delta_.size(), Complex{0.0, 0.0});
  const auto* outer = base_.outerIndexPtr();
  const auto* inner = base_.innerIndexPtr();
  const Complex* values = base_.valuePtr();
  for (Index r = 0; r < base_.rows(); ++r) {
    const Complex left = std::conj(psi[r]);
    if (left == Complex{0.0, 0.0}) continue;
    for (auto k = outer[r]; k < outer[r + 1]; ++k) {
      out[delta_id_[k]] += cmul(left, cmul(values[k], psi[inner[k]]));
    }
  }
}

Complex PhasedSparse::combine(double t, const Complex* components) const {
  Complex sum{0.0, 0.0};
  for (std::size_t u = 0; u < unique_delta_.size(); ++u) {
    sum += unique_delta_[u] == 0.0 ? components[u] : cmul(std::polar(1.0, unique_delta_[u] * t), components[u]);
  }
  return sum;
}

InteractionFrame::InteractionFrame(const SparseMatrix& hamiltonian, std::span<const JumpOperator> jumps) {
  const Index dim = hamiltonian.rows();
  diag_.assign(static_cast<std::size_t>(dim), 0.0);
  for (Index j = 0; j < dim; ++j) diag_[j] = hamiltonian.coeff(j, j).real();

  const double scale = std::max(1.0, *std::max_element(diag_.begin(), diag_.end(),
                                                       [](double a, double b) { return std::abs(a) < std::abs(b); }));
  active_ = true;
  for (const auto& jump : jumps) {
    const SparseMatrix l = jump.op.sparse();
    for (Index r = 0; r < l.outerSize() && active_; ++r) {
      for (SparseMatrix::InnerIterator it(l, r); it; ++it) {
        if (std::abs(diag_[r] - diag_[it.col()]) > kDeltaMatch * scale) {
          active_ = false;
          break;
        }
      }
    }
  }
  if (!active_) std::fill(diag_.begin(), diag_.end(), 0.0);

  coupling_ = hamiltonian;
  for (Index j = 0; j < dim; ++j) {
    if (diag_[j] != 0.0) coupling_.coeffRef(j, j) -= diag_[j];
  }
  coupling_.prune(Complex{0.0, 0.0}, 0.0);
  coupling_.makeCompressed();
}

PhasedSparse InteractionFrame::rotate(const SparseMatrix& op) const { return rotate_block(op, 0, 0); }

PhasedSparse InteractionFrame::rotate_block(const SparseMatrix& block, Index row_offset, Index col_offset) const {
  SparseMatrix b = block;
  b.makeCompressed();
  std::vector<double> delta(static_cast<std::size_t>(b.nonZeros()), 0.0);
  if (active_) {
    std::size_t n = 0;
    for (Index r = 0; r < b.outerSize(); ++r) {
      for (SparseMatrix::InnerIterator it(b, r); it; ++it, ++n) {
        delta[n] = diag_[row_offset + r] - diag_[col_offset + it.col()];
      }
    }
  }
  return {std::move(b), delta};
}

StateVector InteractionFrame::to_lab(double t, const StateVector& psi) const {
  if (!active_) return psi;
  StateVector out(psi.size());
  for (Index j = 0; j < psi.size(); ++j) out(j) = std::polar(1.0, -diag_[j] * t) * psi(j);
  return out;
}

StateVector InteractionFrame::from_lab(double t, const StateVector& psi) const {
  if (!active_) return psi;
  StateVector out(psi.size());
  for (Index j = 0; j < psi.size(); ++j) out(j) = std::polar(1.0, diag_[j] * t) * psi(j);
  return out;
}

DenseMatrix InteractionFrame::to_lab(double t, const DenseMatrix& rho) const {
  if (!active_) return rho;
  StateVector p(rho.rows());
  for (Index j = 0; j < rho.rows(); ++j) p(j) = std::polar(1.0, -diag_[j] * t);
  return p.asDiagonal() * rho * p.conjugate().asDiagonal();
}

double spectral_norm_estimate(const SparseMatrix& h) {
  const Index n = h.rows();
  if (n == 0 || h.nonZeros() == 0) return 0.0;
  StateVector v = StateVector::Ones(n);
  for (Index j = 0; j < n; ++j) v(j) += 0.01 * static_cast<double>(j % 7);
  v.normalize();
  double lambda = 0.0;
  for (int iter = 0; iter < 500; ++iter) {
    StateVector w = h * (h * v);
    const double next = std::sqrt(w.norm());
    if (next == 0.0) return 0.0;
    v = w / w.norm();
    if (std::abs(next - lambda) <= 1e-10 * next) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  return 1.01 * lambda;
}

PhasedSparse InteractionFrame::rotate_indexed(const SparseMatrix& op, std::span<const Index> rows,
                                              std::span<const Index> cols) const {
  if (op.rows() != static_cast<Index>(rows.size()) || op.cols() != static_cast<Index>(cols.size())) {
    throw DimensionError("rotate_indexed: operator does not match the index maps");
  }
  SparseMatrix b = op;
  b.makeCompressed();
  std::vector<double> delta(static_cast<std::size_t>(b.nonZeros()), 0.0);
  if (active_) {
    std::size_t n = 0;
    for (Index r = 0; r < b.outerSize(); ++r) {
      for (SparseMatrix::InnerIterator it(b, r); it; ++it, ++n) delta[n] = diag_[rows[r]] - diag_[cols[it.col()]];
    }
  }
  return {std::move(b), delta};
}

}  // namespace cidyn::detail
