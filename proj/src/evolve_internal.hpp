#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cidyn/evolve.hpp"
#include "frame.hpp"

namespace cidyn::detail {

// Observables rotated into the interaction frame.
class FrameObservables {
 public:
  FrameObservables(const InteractionFrame& frame, const ObservableSet& set);

  // <psi_I| O_I(tau) |psi_I> / <psi_I|psi_I> for every observable, in set order.
  void measure(double tau, const StateVector& psi, std::span<Complex> out) const;

  // Per-frequency pieces of every observable, for a state that no longer
  // evolves in the frame; measure_frozen() then costs a few phases each.
  std::vector<Complex> components(const StateVector& psi) const;
  void measure_frozen(double tau, const std::vector<Complex>& components, double norm2, std::span<Complex> out) const;

  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
  std::vector<PhasedSparse> ops_;
  std::vector<std::size_t> offsets_;  // into the flattened components
};

// Fock cutoff bookkeeping for the leakage diagnostic.
struct LeakageProbe {
  std::optional<BasisSpec> basis;

  explicit LeakageProbe(const std::string& tag) : basis(BasisSpec::from_tag(tag)) {}

  bool top_x(Index i) const;
  bool top_y(Index i) const;
  // (x, y) population in the top two Fock levels
  std::pair<double, double> pure(const StateVector& psi) const;
};

void require_hermitian(const OperatorMatrix& h, const char* who);
void require_same_basis(const std::string& a, const std::string& b, const char* who);

// y <- RK4 step of dy/dt = -i A(t) y, A(t) evaluated in `work` (same pattern
// as a.base()).
struct VectorRk4 {
  StateVector k, acc, tmp;

  template <class Rhs>
  void step(StateVector& y, double t, double h, Rhs&& rhs) {
    rhs(t, y, k);
    acc = y + (h / 6.0) * k;
    tmp = y + (h / 2.0) * k;
    rhs(t + 0.5 * h, tmp, k);
    acc += (h / 3.0) * k;
    tmp = y + (h / 2.0) * k;
    rhs(t + 0.5 * h, tmp, k);
    acc += (h / 3.0) * k;
    tmp = y + h * k;
    rhs(t + h, tmp, k);
    acc += (h / 6.0) * k;
    y.swap(acc);
  }
};

}  // namespace cidyn::detail
