#pragma once

// Dense/sparse kernels used by the density-matrix and trajectory solvers.
// Every kernel has a serial reference path and an OpenMP path; both produce
// bit-identical results (reductions are chunked independently of the thread
// count).

#include "cidyn/types.hpp"

namespace cidyn::kernels {

enum class Exec { serial, parallel };

// y += alpha * A x, A in row storage, x and y dense column-major.
void spmm_add(Exec exec, const SparseMatrix& a, const DenseMatrix& x, Complex alpha, DenseMatrix& y);

// y += alpha * A v
void spmv_add(const SparseMatrix& a, const StateVector& v, Complex alpha, StateVector& y);

// y += alpha * x
void axpy(Exec exec, Complex alpha, const DenseMatrix& x, DenseMatrix& y);

// out = a + alpha * x
void axpy_to(Exec exec, const DenseMatrix& a, Complex alpha, const DenseMatrix& x, DenseMatrix& out);

// out = -i k + i mirror^dagger
void commutator_from_products(Exec exec, const DenseMatrix& k, const DenseMatrix& mirror, DenseMatrix& out);

// sum_jk op_jk rho_kj
Complex trace_product(Exec exec, const DenseMatrix& rho, const SparseMatrix& op);

// rho <- (rho + rho^dagger) / 2
void hermitize(Exec exec, DenseMatrix& rho);

// upper <- (upper + lower^dagger) / 2, lower <- upper^dagger
void hermitize_pair(Exec exec, DenseMatrix& upper, DenseMatrix& lower);

}  // namespace cidyn::kernels
