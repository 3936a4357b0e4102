#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace cidyn {

using Complex = std::complex<double>;
using Index = Eigen::Index;
using DenseMatrix = Eigen::MatrixXcd;
using SparseMatrix = Eigen::SparseMatrix<Complex, Eigen::RowMajor>;
using StateVector = Eigen::VectorXcd;

inline constexpr double kTwoPi = 6.283185307179586476925286766559;
inline constexpr Complex kI{0.0, 1.0};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// A run that had to stop. `diagnostic` is a short machine-readable tag
// ("norm_drift", "trace_drift", "divergence", ...).
class SolverAbort : public Error {
 public:
  SolverAbort(std::string diagnostic, const std::string& what, double time)
      : Error(what), diagnostic_(std::move(diagnostic)), time_(time) {}
  const std::string& diagnostic() const { return diagnostic_; }
  double time() const { return time_; }

 private:
  std::string diagnostic_;
  double time_;
};

}  // namespace cidyn
