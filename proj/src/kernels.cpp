#include "cidyn/kernels.hpp"

#include <vector>

#include "kernels_omp.hpp"

namespace cidyn::kernels {

namespace {

inline Complex cmul(Complex a, Complex b) {
  return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}

void check_shapes(const DenseMatrix& a, const DenseMatrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionError(std::string(what) + ": shape mismatch");
}

// One column of y += alpha * A x.
inline void spmm_column(const SparseMatrix& a, const Complex* x, Complex alpha, Complex* y) {
  const auto* outer = a.outerIndexPtr();
  const auto* inner = a.innerIndexPtr();
  const Complex* values = a.valuePtr();
  for (Index r = 0; r < a.rows(); ++r) {
    const auto begin = outer[r];
    const auto end = outer[r + 1];
    if (begin == end) continue;
    double re = 0.0;
    double im = 0.0;
    for (auto k = begin; k < end; ++k) {
      const Complex p = cmul(values[k], x[inner[k]]);
      re += p.real();
      im += p.imag();
    }
    y[r] += cmul(alpha, {re, im});
  }
}

inline Complex trace_column_chunk(const DenseMatrix& rho, const SparseMatrix& op, Index row) {
  const auto* outer = op.outerIndexPtr();
  const auto* inner = op.innerIndexPtr();
  const Complex* values = op.valuePtr();
  double re = 0.0;
  double im = 0.0;
  // op_{row,c} rho_{c,row}
  for (auto k = outer[row]; k < outer[row + 1]; ++k) {
    const Complex p = cmul(values[k], rho(inner[k], row));
    re += p.real();
    im += p.imag();
  }
  return {re, im};
}

}  // namespace

void spmm_add(Exec exec, const SparseMatrix& a, const DenseMatrix& x, Complex alpha, DenseMatrix& y) {
  if (!a.isCompressed()) throw InvalidArgument("spmm_add: sparse operand must be compressed");
  if (a.cols() != x.rows() || a.rows() != y.rows() || x.cols() != y.cols()) {
    throw DimensionError("spmm_add: shape mismatch");
  }
  const Index cols = x.cols();
  if (exec == Exec::serial) {
    for (Index c = 0; c < cols; ++c) spmm_column(a, x.col(c).data(), alpha, y.col(c).data());
    return;
  }
  CIDYN_OMP_PARALLEL_FOR
  for (Index c = 0; c < cols; ++c) spmm_column(a, x.col(c).data(), alpha, y.col(c).data());
}

void spmv_add(const SparseMatrix& a, const StateVector& v, Complex alpha, StateVector& y) {
  if (a.cols() != v.size() || a.rows() != y.size()) throw DimensionError("spmv_add: shape mismatch");
  spmm_column(a, v.data(), alpha, y.data());
}

void axpy(Exec exec, Complex alpha, const DenseMatrix& x, DenseMatrix& y) {
  check_shapes(x, y, "axpy");
  const Index n = x.size();
  const Complex* xs = x.data();
  Complex* ys = y.data();
  if (exec == Exec::serial) {
    for (Index i = 0; i < n; ++i) ys[i] += cmul(alpha, xs[i]);
    return;
  }
  CIDYN_OMP_PARALLEL_FOR
  for (Index i = 0; i < n; ++i) ys[i] += cmul(alpha, xs[i]);
}

void axpy_to(Exec exec, const DenseMatrix& a, Complex alpha, const DenseMatrix& x, DenseMatrix& out) {
  check_shapes(a, x, "axpy_to");
  out.resize(a.rows(), a.cols());
  const Index n = a.size();
  const Complex* as = a.data();
  const Complex* xs = x.data();
  Complex* os = out.data();
  if (exec == Exec::serial) {
    for (Index i = 0; i < n; ++i) os[i] = as[i] + cmul(alpha, xs[i]);
    return;
  }
  CIDYN_OMP_PARALLEL_FOR
  for (Index i = 0; i < n; ++i) os[i] = as[i] + cmul(alpha, xs[i]);
}

void commutator_from_products(Exec exec, const DenseMatrix& k, const DenseMatrix& mirror, DenseMatrix& out) {
  if (k.rows() != mirror.cols() || k.cols() != mirror.rows()) {
    throw DimensionError("commutator_from_products: shape mismatch");
  }
  out.resize(k.rows(), k.cols());
  const Index rows = k.rows();
  const Index cols = k.cols();
  // (-i k)_{rc} + i conj(mirror_{cr})
  auto column = [&](Index c) {
    for (Index r = 0; r < rows; ++r) {
      const Complex a = k(r, c);
      const Complex b = mirror(c, r);
      out(r, c) = {a.imag() + b.imag(), -a.real() + b.real()};
    }
  };
  if (exec == Exec::serial) {
    for (Index c = 0; c < cols; ++c) column(c);
    return;
  }
  CIDYN_OMP_PARALLEL_FOR
  for (Index c = 0; c < cols; ++c) column(c);
}

Complex trace_product(Exec exec, const DenseMatrix& rho, const SparseMatrix& op) {
  if (op.rows() != rho.cols() || op.cols() != rho.rows()) throw DimensionError("trace_product: shape mismatch");
  const Index rows = op.rows();
  std::vector<Complex> partial(static_cast<std::size_t>(rows));
  if (exec == Exec::serial) {
    for (Index r = 0; r < rows; ++r) partial[r] = trace_column_chunk(rho, op, r);
  } else {
    CIDYN_OMP_PARALLEL_FOR
    for (Index r = 0; r < rows; ++r) partial[r] = trace_column_chunk(rho, op, r);
  }
  Complex acc{0.0, 0.0};
  for (const Complex& p : partial) acc += p;
  return acc;
}

void hermitize(Exec exec, DenseMatrix& rho) {
  if (rho.rows() != rho.cols()) throw DimensionError("hermitize: matrix must be square");
  const Index n = rho.rows();
  auto column = [&](Index c) {
    for (Index r = 0; r <= c; ++r) {
      const Complex avg = 0.5 * (rho(r, c) + std::conj(rho(c, r)));
      rho(r, c) = avg;
      rho(c, r) = std::conj(avg);
    }
  };
  if (exec == Exec::serial) {
    for (Index c = 0; c < n; ++c) column(c);
    return;
  }
  // columns touch disjoint (r, c) / (c, r) pairs
  CIDYN_OMP_PARALLEL_FOR
  for (Index c = 0; c < n; ++c) column(c);
}

void hermitize_pair(Exec exec, DenseMatrix& upper, DenseMatrix& lower) {
  if (upper.rows() != lower.cols() || upper.cols() != lower.rows()) {
    throw DimensionError("hermitize_pair: shape mismatch");
  }
  const Index rows = upper.rows();
  const Index cols = upper.cols();
  auto column = [&](Index c) {
    for (Index r = 0; r < rows; ++r) {
      const Complex avg = 0.5 * (upper(r, c) + std::conj(lower(c, r)));
      upper(r, c) = avg;
      lower(c, r) = std::conj(avg);
    }
  };
  if (exec == Exec::serial) {
    for (Index c = 0; c < cols; ++c) column(c);
    return;
  }
  CIDYN_OMP_PARALLEL_FOR
  for (Index c = 0; c < cols; ++c) column(c);
}

}  // namespace cidyn::kernels
