#include "cidyn/hilbert.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include <unsupported/Eigen/KroneckerProduct>

namespace cidyn {

namespace {

constexpr double kNormTolerance = 1e-8;

SparseMatrix to_sparse(const DenseMatrix& m) {
  SparseMatrix s = m.sparseView();
  s.makeCompressed();
  return s;
}

void require_same_basis(const OperatorMatrix& a, const OperatorMatrix& b, const char* what) {
  if (a.dim() != b.dim() || a.basis_tag() != b.basis_tag()) {
    throw DimensionError(std::string(what) + ": operands on different bases ('" + a.basis_tag() +
                         "' vs '" + b.basis_tag() + "')");
  }
}

SparseMatrix sparse_identity(Index n) {
  SparseMatrix id(n, n);
  id.setIdentity();
  return id;
}

}  // namespace

Level parse_level(std::string_view label) {
  if (label == "g") return Level::g;
  if (label == "0") return Level::zero;
  if (label == "1") return Level::one;
  throw InvalidArgument("unknown ion level '" + std::string(label) + "' (expected g, 0 or 1)");
}

std::string_view level_name(Level level) {
  switch (level) {
    case Level::g: return "g";
    case Level::zero: return "0";
    case Level::one: return "1";
  }
  return "?";
}

void BasisSpec::validate() const {
  if (n_max_x < 1 || n_max_y < 1) {
    throw InvalidArgument("Fock cutoffs must be >= 1 (got " + std::to_string(n_max_x) + ", " +
                          std::to_string(n_max_y) + ")");
  }
}

Index BasisSpec::local_dim(Slot slot) const {
  switch (slot) {
    case Slot::ion_left:
    case Slot::ion_right: return kIonLevels;
    case Slot::mode_x: return n_max_x;
    case Slot::mode_y: return n_max_y;
  }
  return 0;
}

BasisSpec::Coordinates BasisSpec::coordinates(Index i) const {
  Coordinates c{};
  c.ny = static_cast<int>(i % n_max_y);
  i /= n_max_y;
  c.nx = static_cast<int>(i % n_max_x);
  c.spin = static_cast<int>(i / n_max_x);
  return c;
}

std::string BasisSpec::tag() const {
  std::ostringstream os;
  os << "ion3.ion3.fock" << n_max_x << ".fock" << n_max_y;
  return os.str();
}

std::optional<BasisSpec> BasisSpec::from_tag(std::string_view tag) {
  BasisSpec b;
  char tail = 0;
  const std::string t(tag);
  if (std::sscanf(t.c_str(), "ion3.ion3.fock%d.fock%d%c", &b.n_max_x, &b.n_max_y, &tail) != 2) return std::nullopt;
  if (b.n_max_x < 1 || b.n_max_y < 1 || b.tag() != t) return std::nullopt;
  return b;
}

std::string fock_tag(int n_max) { return "fock" + std::to_string(n_max); }

// ---------------------------------------------------------------------------

OperatorMatrix::OperatorMatrix(SparseMatrix m, std::string basis_tag) : tag_(std::move(basis_tag)) {
  if (m.rows() != m.cols()) throw DimensionError("operator must be square");
  if (m.rows() < kDenseBelow) {
    data_ = DenseMatrix(m);
  } else {
    m.prune(Complex{0.0, 0.0}, 0.0);
    m.makeCompressed();
    data_ = std::move(m);
  }
}

OperatorMatrix::OperatorMatrix(DenseMatrix m, std::string basis_tag) : tag_(std::move(basis_tag)) {
  if (m.rows() != m.cols()) throw DimensionError("operator must be square");
  if (m.rows() < kDenseBelow) {
    data_ = std::move(m);
  } else {
    data_ = to_sparse(m);
  }
}

OperatorMatrix OperatorMatrix::identity(Index dim, std::string basis_tag) {
  return OperatorMatrix(sparse_identity(dim), std::move(basis_tag));
}

OperatorMatrix OperatorMatrix::zero(Index dim, std::string basis_tag) {
  return OperatorMatrix(SparseMatrix(dim, dim), std::move(basis_tag));
}

Index OperatorMatrix::dim() const {
  return std::visit([](const auto& m) { return m.rows(); }, data_);
}

SparseMatrix OperatorMatrix::sparse() const {
  if (const auto* s = std::get_if<SparseMatrix>(&data_)) return *s;
  return to_sparse(std::get<DenseMatrix>(data_));
}

DenseMatrix OperatorMatrix::dense() const {
  if (const auto* d = std::get_if<DenseMatrix>(&data_)) return *d;
  return DenseMatrix(std::get<SparseMatrix>(data_));
}

Complex OperatorMatrix::coeff(Index row, Index col) const {
  return std::visit([&](const auto& m) { return Complex(m.coeff(row, col)); }, data_);
}

OperatorMatrix OperatorMatrix::adjoint() const {
  if (const auto* d = std::get_if<DenseMatrix>(&data_)) return {DenseMatrix(d->adjoint()), tag_};
  return {SparseMatrix(std::get<SparseMatrix>(data_).adjoint()), tag_};
}

StateVector OperatorMatrix::apply(const StateVector& v) const {
  if (v.size() != dim()) throw DimensionError("apply: vector length does not match operator");
  return std::visit([&](const auto& m) { return StateVector(m * v); }, data_);
}

double OperatorMatrix::hermiticity_error() const {
  if (const auto* d = std::get_if<DenseMatrix>(&data_)) {
    return d->rows() == 0 ? 0.0 : (*d - d->adjoint()).cwiseAbs().maxCoeff();
  }
  const auto& s = std::get<SparseMatrix>(data_);
  SparseMatrix diff = s - SparseMatrix(s.adjoint());
  double err = 0.0;
  for (Index k = 0; k < diff.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(diff, k); it; ++it) err = std::max(err, std::abs(it.value()));
  }
  return err;
}

double OperatorMatrix::max_abs() const {
  if (const auto* d = std::get_if<DenseMatrix>(&data_)) {
    return d->size() == 0 ? 0.0 : d->cwiseAbs().maxCoeff();
  }
  double m = 0.0;
  const auto& s = std::get<SparseMatrix>(data_);
  for (Index k = 0; k < s.nonZeros(); ++k) m = std::max(m, std::abs(s.valuePtr()[k]));
  return m;
}

OperatorMatrix operator+(const OperatorMatrix& a, const OperatorMatrix& b) {
  require_same_basis(a, b, "operator+");
  if (!a.is_sparse() && !b.is_sparse()) return {DenseMatrix(a.dense() + b.dense()), a.tag_};
  return {SparseMatrix(a.sparse() + b.sparse()), a.tag_};
}

OperatorMatrix operator-(const OperatorMatrix& a, const OperatorMatrix& b) {
  require_same_basis(a, b, "operator-");
  if (!a.is_sparse() && !b.is_sparse()) return {DenseMatrix(a.dense() - b.dense()), a.tag_};
  return {SparseMatrix(a.sparse() - b.sparse()), a.tag_};
}

OperatorMatrix operator*(const OperatorMatrix& a, const OperatorMatrix& b) {
  require_same_basis(a, b, "operator*");
  if (!a.is_sparse() && !b.is_sparse()) return {DenseMatrix(a.dense() * b.dense()), a.tag_};
  return {SparseMatrix(a.sparse() * b.sparse()), a.tag_};
}

OperatorMatrix operator*(Complex s, const OperatorMatrix& a) {
  if (!a.is_sparse()) return {DenseMatrix(s * a.dense()), a.tag_};
  return {SparseMatrix(s * a.sparse()), a.tag_};
}

OperatorMatrix commutator(const OperatorMatrix& a, const OperatorMatrix& b) { return a * b - b * a; }

// ---------------------------------------------------------------------------

OperatorMatrix fock_annihilation(int n_max) {
  if (n_max < 1) throw InvalidArgument("fock_annihilation: n_max must be >= 1");
  SparseMatrix a(n_max, n_max);
  a.reserve(Eigen::VectorXi::Constant(n_max, 1));
  for (int n = 1; n < n_max; ++n) a.insert(n - 1, n) = std::sqrt(static_cast<double>(n));
  a.makeCompressed();
  return {std::move(a), fock_tag(n_max)};
}

OperatorMatrix ion_projector(Level i, Level j) {
  DenseMatrix p = DenseMatrix::Zero(3, 3);
  p(static_cast<int>(i), static_cast<int>(j)) = 1.0;
  return {std::move(p), std::string(kIonTag)};
}

OperatorMatrix ion_projector(std::string_view i, std::string_view j) {
  return ion_projector(parse_level(i), parse_level(j));
}

OperatorMatrix embed(const OperatorMatrix& op, Slot slot, const BasisSpec& basis) {
  basis.validate();
  const Index local = basis.local_dim(slot);
  const std::string expected_tag =
      (slot == Slot::ion_left || slot == Slot::ion_right)
          ? std::string(kIonTag)
          : fock_tag(static_cast<int>(local));
  if (op.dim() != local || op.basis_tag() != expected_tag) {
    throw DimensionError("embed: operator '" + op.basis_tag() + "' of dim " + std::to_string(op.dim()) +
                         " does not fit slot expecting '" + expected_tag + "'");
  }
  Index before = 1;
  Index after = 1;
  for (int s = 0; s < 4; ++s) {
    if (s < static_cast<int>(slot)) before *= basis.local_dim(static_cast<Slot>(s));
    if (s > static_cast<int>(slot)) after *= basis.local_dim(static_cast<Slot>(s));
  }
  SparseMatrix left = Eigen::kroneckerProduct(sparse_identity(before), op.sparse());
  SparseMatrix full = Eigen::kroneckerProduct(left, sparse_identity(after));
  return {std::move(full), basis.tag()};
}

OperatorMatrix embed_spin_pair(const OperatorMatrix& op, const BasisSpec& basis) {
  basis.validate();
  if (op.dim() != BasisSpec::kSpinDim || op.basis_tag() != kSpinPairTag) {
    throw DimensionError("embed_spin_pair: expected a 9x9 two-ion operator, got '" + op.basis_tag() + "'");
  }
  SparseMatrix full = Eigen::kroneckerProduct(op.sparse(), sparse_identity(basis.mode_dim()));
  return {std::move(full), basis.tag()};
}

// ---------------------------------------------------------------------------

Complex expectation(const PureState& state, const OperatorMatrix& op) {
  if (state.dim() != op.dim() || state.basis_tag != op.basis_tag()) {
    throw DimensionError("expectation: state and operator live on different bases");
  }
  if (std::abs(state.norm_squared() - 1.0) > kNormTolerance) {
    throw InvalidArgument("expectation: state norm^2 = " + std::to_string(state.norm_squared()) +
                          " is not 1 within tolerance");
  }
  return state.amplitudes.dot(op.apply(state.amplitudes));
}

Complex expectation(const DensityState& state, const OperatorMatrix& op) {
  if (state.dim() != op.dim() || state.basis_tag != op.basis_tag()) {
    throw DimensionError("expectation: state and operator live on different bases");
  }
  if (std::abs(state.trace() - 1.0) > kNormTolerance) {
    throw InvalidArgument("expectation: density trace is not 1 within tolerance");
  }
  // Tr(rho O) = sum_jk O_jk rho_kj
  Complex acc{0.0, 0.0};
  if (op.is_sparse()) {
    const SparseMatrix s = op.sparse();
    for (Index j = 0; j < s.outerSize(); ++j) {
      for (SparseMatrix::InnerIterator it(s, j); it; ++it) acc += it.value() * state.matrix(it.col(), j);
    }
  } else {
    acc = (state.matrix * op.dense()).trace();
  }
  return acc;
}

}  // namespace cidyn
