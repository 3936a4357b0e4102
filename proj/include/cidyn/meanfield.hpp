#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "cidyn/evolve.hpp"
#include "cidyn/model.hpp"

namespace cidyn {

// Factorized expectation values: A = <a_x>, B = <a_y>, s = <S>.
struct MeanFieldState {
  Complex A{0.0, 0.0};
  Complex B{0.0, 0.0};
  double sx = 0.0;
  double sy = 0.0;
  double sz = 0.0;

  // (Re A, Im A, Re B, Im B, sx, sy, sz)
  std::array<double, 7> pack() const;
  static MeanFieldState unpack(const std::array<double, 7>& v);

  double spin_length_squared() const { return sx * sx + sy * sy + sz * sz; }
  double max_abs() const;
};

MeanFieldState mf_rhs(const MeanFieldState& state, const SystemParams& params);

struct MeanFieldSeries {
  std::vector<double> times;
  std::vector<MeanFieldState> states;
  double max_spin_length_squared = 0.0;
};

// Throws SolverAbort("divergence") once any component exceeds 1e6.
MeanFieldSeries mf_evolve(const MeanFieldState& init, const SystemParams& params, const TimeGrid& grid);

// A = alpha_x, B = alpha_y, s = <S> of the spin configuration.
MeanFieldState mf_initial_state(Complex alpha_x, Complex alpha_y, double sz);

struct FixedPoint {
  MeanFieldState state;
  double residual;
  int hits;  // number of guesses that landed here
};

struct GuessOutcome {
  MeanFieldState guess;
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;
  std::string message;
};

struct SteadyStateReport {
  std::vector<FixedPoint> fixed_points;
  std::vector<GuessOutcome> guesses;
};

// 3 x 3 x 3 grid: A and B on {-2 alpha, 0, 2 alpha}-type rays, spins on the
// poles/centre of the Bloch ball.
std::vector<MeanFieldState> default_guess_grid(double alpha_x);

// Damped Newton from each guess; fixed points closer than 1e-8 are merged.
// Requires gamma_S > 0.
SteadyStateReport mf_steady_state(const SystemParams& params, std::span<const MeanFieldState> guesses);

}  // namespace cidyn
