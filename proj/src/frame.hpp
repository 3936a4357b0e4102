#pragma once

#include <span>
#include <vector>

#include "cidyn/evolve.hpp"
#include "cidyn/types.hpp"

namespace cidyn::detail {

// Sparse matrix whose entry n evolves as base_n * exp(i delta_n t). The
// distinct deltas are few (differences of oscillator energies), so phases are
// evaluated once per distinct value.
class PhasedSparse {
 public:
  PhasedSparse() = default;
  PhasedSparse(SparseMatrix base, const std::vector<double>& delta);

  // `out` must have been initialised from base() (same sparsity pattern).
  void evaluate(double t, SparseMatrix& out) const;
  // y += alpha * O(t) x without materializing O(t)
  void apply_add(double t, const StateVector& x, Complex alpha, StateVector& y) const;
  // <psi| O(t) |psi>
  Complex expectation(double t, const StateVector& psi) const;
  // <psi| O_u |psi> for each distinct frequency u; for a state that does not
  // evolve, <O(t)> = sum_u exp(i delta_u t) c_u.
  void components(const StateVector& psi, Complex* out) const;
  Complex combine(double t, const Complex* components) const;
  std::size_t n_frequencies() const { return unique_delta_.size(); }

  const SparseMatrix& base() const { return base_; }
  bool is_static() const { return static_; }
  Index nonzeros() const { return base_.nonZeros(); }

 private:
  SparseMatrix base_;
  std::vector<int> delta_id_;
  std::vector<double> unique_delta_;
  bool static_ = true;

  void phases(double t, Complex* out) const;
};

// Interaction picture with respect to the diagonal of H. Observables and jump
// operators rotate as O_I(t) = e^{iDt} O e^{-iDt}. The frame is only used
// when every jump operator commutes with D; otherwise D = 0.
class InteractionFrame {
 public:
  InteractionFrame() = default;
  InteractionFrame(const SparseMatrix& hamiltonian, std::span<const JumpOperator> jumps);

  bool active() const { return active_; }
  const std::vector<double>& diagonal() const { return diag_; }
  // H - D
  const SparseMatrix& coupling() const { return coupling_; }

  PhasedSparse rotate(const SparseMatrix& op) const;
  // Same rotation restricted to a block (row_offset, col_offset).
  PhasedSparse rotate_block(const SparseMatrix& block, Index row_offset, Index col_offset) const;
  // `op` maps the span of basis vectors cols[0], cols[1], ... to the span of
  // rows[0], rows[1], ...
  PhasedSparse rotate_indexed(const SparseMatrix& op, std::span<const Index> rows, std::span<const Index> cols) const;
  PhasedSparse rotate_subspace(const SparseMatrix& op, std::span<const Index> index) const {
    return rotate_indexed(op, index, index);
  }

  // Lab-frame amplitudes: psi_S = e^{-iDt} psi_I.
  StateVector to_lab(double t, const StateVector& psi) const;
  DenseMatrix to_lab(double t, const DenseMatrix& rho) const;
  StateVector from_lab(double t, const StateVector& psi) const;

 private:
  std::vector<double> diag_;
  SparseMatrix coupling_;
  bool active_ = false;
};

// Spectral norm of a Hermitian sparse matrix by Lanczos-free power iteration
// on H^2 (upper estimate padded by 1%).
double spectral_norm_estimate(const SparseMatrix& h);

}  // namespace cidyn::detail
