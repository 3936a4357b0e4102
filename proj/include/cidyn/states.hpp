#pragma once

#include <utility>

#include "cidyn/hilbert.hpp"
#include "cidyn/state.hpp"

namespace cidyn {

inline constexpr double kLeakageWarning = 1e-6;

struct ModeState {
  StateVector amplitudes;  // renormalized after truncation
  double leakage;          // probability weight beyond the cutoff before renormalization

  bool leakage_warning() const { return leakage > kLeakageWarning; }
};

// e^{-|alpha|^2/2} sum_n alpha^n / sqrt(n!) |n>, truncated to n < n_max.
ModeState coherent_state(Complex alpha, int n_max);

// 1 - sum_{n<n_max} e^{-|alpha|^2} |alpha|^{2n} / n!
double coherent_leakage(Complex alpha, int n_max);

using SpinConfig = std::pair<Level, Level>;

// Accepts "0,1", "01", "|0,1>" and the like.
SpinConfig parse_spin_config(std::string_view label);
std::string spin_config_name(const SpinConfig& spins);

// spins (x) |alpha_x> (x) |alpha_y>
PureState initial_state(Complex alpha_x, Complex alpha_y, const SpinConfig& spins, const BasisSpec& basis);

DensityState to_density(const PureState& psi);

}  // namespace cidyn
