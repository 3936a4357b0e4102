#include "cidyn/model.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

#include <unsupported/Eigen/KroneckerProduct>

#include "kernels_omp.hpp"

namespace cidyn {

namespace {

OperatorMatrix pair_product(Level l_row, Level l_col, Level r_row, Level r_col) {
  DenseMatrix m = Eigen::kroneckerProduct(ion_projector(l_row, l_col).dense(),
                                          ion_projector(r_row, r_col).dense());
  return {std::move(m), std::string(kSpinPairTag)};
}

OperatorMatrix quadrature(Axis axis, const BasisSpec& basis) {
  const int n = axis == Axis::x ? basis.n_max_x : basis.n_max_y;
  const OperatorMatrix a = fock_annihilation(n);
  return embed(a + a.adjoint(), axis == Axis::x ? Slot::mode_x : Slot::mode_y, basis);
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

std::vector<std::string> SystemParams::violations() const {
  std::vector<std::string> v;
  auto positive = [&](const char* name, double value) {
    if (!(value > 0.0) || !std::isfinite(value)) v.push_back(std::string(name) + " must be > 0");
  };
  positive("omega_x", omega_x);
  positive("omega_y", omega_y);
  positive("eta_x", eta_x);
  positive("eta_y", eta_y);
  if (!(gamma_S >= 0.0)) v.push_back("gamma_S must be >= 0");
  if (!(gamma_P >= 0.0)) v.push_back("gamma_P must be >= 0");
  if (!std::isfinite(G_x)) v.push_back("G_x must be finite");
  if (!std::isfinite(G_y)) v.push_back("G_y must be finite");
  if (basis.n_max_x < 1) v.push_back("n_max_x must be >= 1");
  if (basis.n_max_y < 1) v.push_back("n_max_y must be >= 1");
  return v;
}

void SystemParams::validate() const {
  const auto v = violations();
  if (v.empty()) return;
  std::string msg = "invalid system parameters:";
  for (const auto& s : v) msg += " " + s + ";";
  throw InvalidArgument(msg);
}

CollectiveSpins collective_spins() {
  using L = Level;
  // |10><01| = sigma^l_10 sigma^r_01
  const OperatorMatrix up = pair_product(L::one, L::zero, L::zero, L::one);
  const OperatorMatrix down = pair_product(L::zero, L::one, L::one, L::zero);
  CollectiveSpins s;
  s.sx = up + down;
  // standard sigma_y orientation, so that [Sz, Sx] = 2i Sy
  s.sy = kI * (down - up);
  s.sz = pair_product(L::one, L::one, L::zero, L::zero) - pair_product(L::zero, L::zero, L::one, L::one);
  return s;
}

OperatorMatrix number_operator(Axis axis, const BasisSpec& basis) {
  const int n = axis == Axis::x ? basis.n_max_x : basis.n_max_y;
  const OperatorMatrix a = fock_annihilation(n);
  return embed(a.adjoint() * a, axis == Axis::x ? Slot::mode_x : Slot::mode_y, basis);
}

OperatorMatrix position_operator(Axis axis, const SystemParams& params) {
  const double eta = axis == Axis::x ? params.eta_x : params.eta_y;
  return Complex(eta) * quadrature(axis, params.basis);
}

OperatorMatrix build_hamiltonian(const SystemParams& params) {
  params.validate();
  const BasisSpec& b = params.basis;
  const auto spins = collective_spins();
  const auto id = OperatorMatrix::identity(b.dim(), b.tag());
  const auto nx = number_operator(Axis::x, b);
  const auto ny = number_operator(Axis::y, b);
  const auto sz = embed_spin_pair(spins.sz, b);
  const auto sx = embed_spin_pair(spins.sx, b);
  return Complex(params.omega_x) * (nx + Complex(0.5) * id) + Complex(params.omega_y) * (ny + Complex(0.5) * id) +
         Complex(params.G_x) * (quadrature(Axis::x, b) * sz) + Complex(params.G_y) * (quadrature(Axis::y, b) * sx);
}

OperatorMatrix parity_operator(const BasisSpec& basis) {
  // exp(i pi N_y) = diag((-1)^n)
  DenseMatrix phase = DenseMatrix::Zero(basis.n_max_y, basis.n_max_y);
  for (int n = 0; n < basis.n_max_y; ++n) phase(n, n) = (n % 2 == 0) ? 1.0 : -1.0;
  const OperatorMatrix flip = embed(OperatorMatrix(std::move(phase), fock_tag(basis.n_max_y)), Slot::mode_y, basis);
  return embed_spin_pair(collective_spins().sz, basis) * flip;
}

std::vector<JumpOperator> build_jump_operators(const SystemParams& params) {
  params.validate();
  std::vector<JumpOperator> jumps;
  auto add_channel = [&](double rate, Level from, const char* label) {
    if (rate <= 0.0) return;
    const auto sigma = ion_projector(Level::g, from);
    jumps.push_back({std::string("left_") + label, rate,
                     Complex(std::sqrt(rate)) * embed(sigma, Slot::ion_left, params.basis)});
    jumps.push_back({std::string("right_") + label, rate,
                     Complex(std::sqrt(rate)) * embed(sigma, Slot::ion_right, params.basis)});
  };
  add_channel(params.gamma_S, Level::zero, "g0");
  add_channel(params.gamma_P, Level::one, "g1");
  return jumps;
}

std::vector<SurfaceValue> adiabatic_surfaces(const SystemParams& params, std::span<const SurfacePoint> grid) {
  params.validate();
  if (grid.empty()) throw InvalidArgument("adiabatic_surfaces: empty grid");
  std::vector<SurfaceValue> out(grid.size());
  const double kx = params.omega_x / (4.0 * params.eta_x * params.eta_x);
  const double ky = params.omega_y / (4.0 * params.eta_y * params.eta_y);
  const double gx = params.g_x();
  const double gy = params.g_y();
  const auto n = static_cast<std::int64_t>(grid.size());
  CIDYN_OMP_PARALLEL_FOR
  for (std::int64_t i = 0; i < n; ++i) {
    const double x = grid[i].x_nm;
    const double y = grid[i].y_nm;
    const double mean = kx * x * x + ky * y * y;
    const double split = std::hypot(gx * x, gy * y);
    out[i] = {mean - split, mean + split};
  }
  return out;
}

double surface_minimum_x(const SystemParams& params) {
  return 2.0 * params.eta_x * std::abs(params.G_x) / params.omega_x;
}

// ---------------------------------------------------------------------------

LifetimeTable::LifetimeTable(std::map<std::string, double> entries) {
  for (auto& [k, v] : entries) set(k, v);
}

LifetimeTable LifetimeTable::standard() { return LifetimeTable({{"50S", 7.2}, {"50P", 158.0}}); }

void LifetimeTable::set(const std::string& label, double lifetime_us) {
  if (!(lifetime_us > 0.0) || !std::isfinite(lifetime_us)) {
    throw InvalidArgument("lifetime for '" + label + "' must be > 0");
  }
  entries_[label] = lifetime_us;
}

LifetimeTable LifetimeTable::parse(std::string_view text) {
  LifetimeTable table;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string content = trim(line);
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) {
      throw InvalidArgument("lifetime table line " + std::to_string(line_no) + ": expected 'label = value'");
    }
    const std::string key = trim(content.substr(0, eq));
    const std::string value = trim(content.substr(eq + 1));
    double lifetime = 0.0;
    try {
      std::size_t used = 0;
      lifetime = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
    } catch (const std::exception&) {
      throw InvalidArgument("lifetime table line " + std::to_string(line_no) + ": '" + value + "' is not a number");
    }
    table.set(key, lifetime);
  }
  return table;
}

LifetimeTable LifetimeTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open lifetime table '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

double decay_rate(const std::string& label, const LifetimeTable& table) {
  const auto it = table.entries().find(label);
  if (it == table.entries().end()) throw InvalidArgument("no lifetime tabulated for state '" + label + "'");
  return 1.0 / it->second;
}

}  // namespace cidyn
