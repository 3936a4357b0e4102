#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>
#include <cmath>

#include "cidyn/hilbert.hpp"

namespace cidyn {

// Physical inputs. hbar = 1; time in us, angular frequencies in rad/us,
// lengths in nm.
struct SystemParams {
  double omega_x = kTwoPi * 1.0;
  double omega_y = kTwoPi * 1.6;
  double G_x = kTwoPi * 0.22;
  double G_y = kTwoPi * 0.86;
  double eta_x = 7.58;
  double eta_y = 7.58 * 0.7905694150420949;  // eta_x * sqrt(omega_x / omega_y)
  double gamma_S = 0.13;
  // Optional |1> -> |g> channel per ion; off unless set.
  double gamma_P = 0.0;
  BasisSpec basis{};

  // eta at fixed mass scales as 1/sqrt(omega)
  static double scaled_eta(double eta_ref, double omega_ref, double omega) {
    return eta_ref * std::sqrt(omega_ref / omega);
  }

  double g_x() const { return G_x / eta_x; }
  double g_y() const { return G_y / eta_y; }

  // Every violated constraint, one message each.
  std::vector<std::string> violations() const;
  void validate() const;
};

struct CollectiveSpins {
  OperatorMatrix sx;
  OperatorMatrix sy;
  OperatorMatrix sz;
};

// 9x9 operators on the two-ion space, supported on span{|10>, |01>}.
CollectiveSpins collective_spins();

OperatorMatrix build_hamiltonian(const SystemParams& params);

enum class Axis { x, y };

OperatorMatrix number_operator(Axis axis, const BasisSpec& basis);
// eta (a^dagger + a), in nm
OperatorMatrix position_operator(Axis axis, const SystemParams& params);
// S_z exp(i pi N_y)
OperatorMatrix parity_operator(const BasisSpec& basis);

struct JumpOperator {
  std::string name;
  double rate;      // us^-1
  OperatorMatrix op;  // sqrt(rate) * sigma_{g,level}
};

std::vector<JumpOperator> build_jump_operators(const SystemParams& params);

struct SurfacePoint {
  double x_nm;
  double y_nm;
};

struct SurfaceValue {
  double v_minus;
  double v_plus;
};

// Eigenvalues of the potential part restricted to span{|10>, |01>}, rad/us.
std::vector<SurfaceValue> adiabatic_surfaces(const SystemParams& params, std::span<const SurfacePoint> grid);

// Positions of the lower-surface minima along the x axis (+/- value), nm.
double surface_minimum_x(const SystemParams& params);

class LifetimeTable {
 public:
  LifetimeTable() = default;
  explicit LifetimeTable(std::map<std::string, double> entries);

  // 50S = 7.2 us, 50P = 158 us
  static LifetimeTable standard();
  // Lines of "label = lifetime_us"; '#' starts a comment.
  static LifetimeTable parse(std::string_view text);
  static LifetimeTable load(const std::string& path);

  void set(const std::string& label, double lifetime_us);
  const std::map<std::string, double>& entries() const { return entries_; }

 private:
  std::map<std::string, double> entries_;
};

double decay_rate(const std::string& label, const LifetimeTable& table);

}  // namespace cidyn
