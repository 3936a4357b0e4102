#pragma once

#include <string>

#include "cidyn/types.hpp"

namespace cidyn {

struct PureState {
  StateVector amplitudes;
  std::string basis_tag;

  Index dim() const { return amplitudes.size(); }
  double norm_squared() const { return amplitudes.squaredNorm(); }
};

struct DensityState {
  DenseMatrix matrix;
  std::string basis_tag;

  Index dim() const { return matrix.rows(); }
  Complex trace() const { return matrix.trace(); }
};

}  // namespace cidyn
