#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "cidyn/state.hpp"
#include "cidyn/types.hpp"

namespace cidyn {

// Ion levels. Index order inside a 3-level ion is g, 0, 1.
enum class Level : int { g = 0, zero = 1, one = 2 };

Level parse_level(std::string_view label);
std::string_view level_name(Level level);

// Tensor factors in storage order: ion_left (x) ion_right (x) mode_x (x) mode_y.
enum class Slot : int { ion_left = 0, ion_right = 1, mode_x = 2, mode_y = 3 };

struct BasisSpec {
  int n_max_x = 20;
  int n_max_y = 10;

  static constexpr int kIonLevels = 3;
  static constexpr int kSpinDim = kIonLevels * kIonLevels;

  void validate() const;

  Index dim() const { return Index{kSpinDim} * n_max_x * n_max_y; }
  Index mode_dim() const { return Index{n_max_x} * n_max_y; }
  Index local_dim(Slot slot) const;

  // Spin index of the two-ion pair: 3 * left + right.
  static int spin_index(Level left, Level right) {
    return kIonLevels * static_cast<int>(left) + static_cast<int>(right);
  }
  Index index(Level left, Level right, int nx, int ny) const {
    return (Index{spin_index(left, right)} * n_max_x + nx) * n_max_y + ny;
  }

  struct Coordinates {
    int spin;
    int nx;
    int ny;
  };
  Coordinates coordinates(Index i) const;

  std::string tag() const;
  // Inverse of tag(); nullopt for anything that is not a full composite basis.
  static std::optional<BasisSpec> from_tag(std::string_view tag);
  bool operator==(const BasisSpec&) const = default;
};

std::string fock_tag(int n_max);
inline constexpr std::string_view kIonTag = "ion3";
inline constexpr std::string_view kSpinPairTag = "ion3x3";

// Square complex operator. Dimensions below kDenseBelow are held dense,
// everything else in compressed row storage.
class OperatorMatrix {
 public:
  static constexpr Index kDenseBelow = 64;

  OperatorMatrix() = default;
  OperatorMatrix(SparseMatrix m, std::string basis_tag);
  OperatorMatrix(DenseMatrix m, std::string basis_tag);

  static OperatorMatrix identity(Index dim, std::string basis_tag);
  static OperatorMatrix zero(Index dim, std::string basis_tag);

  Index dim() const;
  const std::string& basis_tag() const { return tag_; }
  bool is_sparse() const { return std::holds_alternative<SparseMatrix>(data_); }

  SparseMatrix sparse() const;
  DenseMatrix dense() const;
  Complex coeff(Index row, Index col) const;

  OperatorMatrix adjoint() const;
  StateVector apply(const StateVector& v) const;

  // max |O - O^dagger| over all entries
  double hermiticity_error() const;
  double max_abs() const;

  friend OperatorMatrix operator+(const OperatorMatrix& a, const OperatorMatrix& b);
  friend OperatorMatrix operator-(const OperatorMatrix& a, const OperatorMatrix& b);
  friend OperatorMatrix operator*(const OperatorMatrix& a, const OperatorMatrix& b);
  friend OperatorMatrix operator*(Complex s, const OperatorMatrix& a);
  friend OperatorMatrix operator*(const OperatorMatrix& a, Complex s) { return s * a; }

 private:
  std::variant<DenseMatrix, SparseMatrix> data_{DenseMatrix{}};
  std::string tag_;
};

OperatorMatrix commutator(const OperatorMatrix& a, const OperatorMatrix& b);

OperatorMatrix fock_annihilation(int n_max);
OperatorMatrix ion_projector(Level i, Level j);
OperatorMatrix ion_projector(std::string_view i, std::string_view j);

// op (x) identity on every other factor, in storage order.
OperatorMatrix embed(const OperatorMatrix& op, Slot slot, const BasisSpec& basis);
// 9x9 two-ion operator (x) identity on both modes.
OperatorMatrix embed_spin_pair(const OperatorMatrix& op, const BasisSpec& basis);

Complex expectation(const PureState& state, const OperatorMatrix& op);
Complex expectation(const DensityState& state, const OperatorMatrix& op);

}  // namespace cidyn
