#include "cidyn/states.hpp"

#include <cmath>

namespace cidyn {

namespace {

// Unnormalized truncated coefficients, built by recurrence c_n = c_{n-1} alpha / sqrt(n).
StateVector coherent_coefficients(Complex alpha, int n_max) {
  StateVector c(n_max);
  c(0) = std::exp(-0.5 * std::norm(alpha));
  for (int n = 1; n < n_max; ++n) c(n) = c(n - 1) * alpha / std::sqrt(static_cast<double>(n));
  return c;
}

}  // namespace

double coherent_leakage(Complex alpha, int n_max) {
  if (n_max < 1) throw InvalidArgument("coherent_leakage: n_max must be >= 1");
  return std::max(0.0, 1.0 - coherent_coefficients(alpha, n_max).squaredNorm());
}

ModeState coherent_state(Complex alpha, int n_max) {
  if (n_max < 1) throw InvalidArgument("coherent_state: n_max must be >= 1");
  StateVector c = coherent_coefficients(alpha, n_max);
  const double kept = c.squaredNorm();
  c /= std::sqrt(kept);
  return {std::move(c), std::max(0.0, 1.0 - kept)};
}

SpinConfig parse_spin_config(std::string_view label) {
  std::string levels;
  for (char ch : label) {
    if (ch == 'g' || ch == '0' || ch == '1') {
      levels.push_back(ch);
    } else if (ch != '|' && ch != '>' && ch != ',' && ch != ' ') {
      throw InvalidArgument("invalid spin configuration '" + std::string(label) + "'");
    }
  }
  if (levels.size() != 2) {
    throw InvalidArgument("spin configuration '" + std::string(label) + "' must name two ion levels");
  }
  return {parse_level(levels.substr(0, 1)), parse_level(levels.substr(1, 1))};
}

std::string spin_config_name(const SpinConfig& spins) {
  return std::string(level_name(spins.first)) + "," + std::string(level_name(spins.second));
}

PureState initial_state(Complex alpha_x, Complex alpha_y, const SpinConfig& spins, const BasisSpec& basis) {
  basis.validate();
  const ModeState mx = coherent_state(alpha_x, basis.n_max_x);
  const ModeState my = coherent_state(alpha_y, basis.n_max_y);
  PureState psi{StateVector::Zero(basis.dim()), basis.tag()};
  for (int nx = 0; nx < basis.n_max_x; ++nx) {
    for (int ny = 0; ny < basis.n_max_y; ++ny) {
      psi.amplitudes(basis.index(spins.first, spins.second, nx, ny)) = mx.amplitudes(nx) * my.amplitudes(ny);
    }
  }
  return psi;
}

DensityState to_density(const PureState& psi) {
  return {psi.amplitudes * psi.amplitudes.adjoint(), psi.basis_tag};
}

}  // namespace cidyn
