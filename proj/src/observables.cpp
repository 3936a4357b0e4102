#include "cidyn/observables.hpp"

#include <cmath>
#include <sstream>

#include "cidyn/evolve.hpp"

namespace cidyn {

void ObservableSet::add(std::string name, OperatorMatrix op) {
  if (!tag_.empty() && op.basis_tag() != tag_) {
    throw DimensionError("observable '" + name + "' is on basis '" + op.basis_tag() + "', set is on '" + tag_ + "'");
  }
  if (tag_.empty()) tag_ = op.basis_tag();
  if (contains(name)) throw InvalidArgument("duplicate observable '" + name + "'");
  if (op.hermiticity_error() > 1e-12 * std::max(1.0, op.max_abs())) {
    throw InvalidArgument("observable '" + name + "' is not Hermitian");
  }
  entries_.emplace_back(std::move(name), std::move(op));
}

const OperatorMatrix& ObservableSet::at(const std::string& name) const {
  for (const auto& [n, op] : entries_) {
    if (n == name) return op;
  }
  throw InvalidArgument("no observable named '" + name + "'");
}

bool ObservableSet::contains(const std::string& name) const {
  for (const auto& e : entries_) {
    if (e.first == name) return true;
  }
  return false;
}

ObservableSet standard_observables(const SystemParams& params) {
  const BasisSpec& b = params.basis;
  const auto spins = collective_spins();
  const auto sx = embed_spin_pair(spins.sx, b);
  const auto sy = embed_spin_pair(spins.sy, b);
  const auto sz = embed_spin_pair(spins.sz, b);
  const auto x = position_operator(Axis::x, params);
  const auto y = position_operator(Axis::y, params);
  const auto nx = number_operator(Axis::x, b);
  const auto ny = number_operator(Axis::y, b);

  ObservableSet set(b.tag());
  set.add("Sx", sx);
  set.add("Sy", sy);
  set.add("Sz", sz);
  set.add("Nx", nx);
  set.add("Ny", ny);
  set.add("x", x);
  set.add("y", y);
  set.add("xSz", x * sz);
  set.add("ySx", y * sx);
  set.add("xSx", x * sx);
  set.add("xSy", x * sy);
  set.add("ySz", y * sz);
  const std::pair<const char*, Slot> ions[] = {{"l", Slot::ion_left}, {"r", Slot::ion_right}};
  for (const auto& [side, slot] : ions) {
    for (Level level : {Level::g, Level::zero, Level::one}) {
      const std::string lv(level_name(level));
      set.add(std::string("pop_") + side + "_" + lv + lv, embed(ion_projector(level, level), slot, b));
    }
  }
  set.add("parity", parity_operator(b));
  set.add("exsum", sz + ny);
  return set;
}

const std::vector<double>& TimeSeries::track(const std::string& name) const {
  const auto it = tracks.find(name);
  if (it == tracks.end()) throw InvalidArgument("time series has no track '" + name + "'");
  return it->second;
}

TimeSeries measure_all(const EvolutionResult& result, const ObservableSet& set, double imag_tolerance) {
  TimeSeries ts;
  ts.times = result.times;
  const bool from_states = !result.pure_states.empty() || !result.density_states.empty();
  for (const auto& [name, op] : set.entries()) {
    std::vector<Complex> values;
    if (from_states) {
      for (const auto& psi : result.pure_states) values.push_back(expectation(psi, op));
      for (const auto& rho : result.density_states) values.push_back(expectation(rho, op));
    } else {
      const auto it = result.tracks.find(name);
      if (it == result.tracks.end()) continue;
      values = it->second;
    }
    if (values.size() != ts.times.size()) {
      throw InvalidArgument("measure_all: track '" + name + "' does not match the time axis");
    }
    auto& track = ts.tracks[name];
    track.reserve(values.size());
    for (std::size_t k = 0; k < values.size(); ++k) {
      if (std::abs(values[k].imag()) > imag_tolerance) {
        std::ostringstream os;
        os << "observable '" << name << "' has imaginary part " << values[k].imag() << " at t = " << ts.times[k];
        throw SolverAbort("imaginary_residue", os.str(), ts.times[k]);
      }
      track.push_back(values[k].real());
    }
    if (const auto se = result.stderr_tracks.find(name); se != result.stderr_tracks.end()) {
      ts.stderr_tracks[name] = se->second;
    }
  }
  ts.metadata["solver"] = result.diagnostics.solver;
  return ts;
}

Complex parity_charge(const PureState& state, const BasisSpec& basis) {
  return expectation(state, parity_operator(basis));
}

Complex parity_charge(const DensityState& state, const BasisSpec& basis) {
  return expectation(state, parity_operator(basis));
}

Complex connected_correlator(const PureState& state, const OperatorMatrix& a, const OperatorMatrix& b) {
  return expectation(state, a * b) - expectation(state, a) * expectation(state, b);
}

}  // namespace cidyn
