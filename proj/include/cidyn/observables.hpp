#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "cidyn/hilbert.hpp"
#include "cidyn/model.hpp"

namespace cidyn {

struct EvolutionResult;

// Named Hermitian operators on one basis.
class ObservableSet {
 public:
  ObservableSet() = default;
  explicit ObservableSet(std::string basis_tag) : tag_(std::move(basis_tag)) {}

  // Throws unless `op` is Hermitian (1e-12) and on this set's basis.
  void add(std::string name, OperatorMatrix op);

  const std::vector<std::pair<std::string, OperatorMatrix>>& entries() const { return entries_; }
  const OperatorMatrix& at(const std::string& name) const;
  bool contains(const std::string& name) const;
  const std::string& basis_tag() const { return tag_; }
  std::size_t size() const { return entries_.size(); }

 private:
  std::string tag_;
  std::vector<std::pair<std::string, OperatorMatrix>> entries_;
};

// x, y, Sx, Sy, Sz, Nx, Ny, xSz, ySx, xSx, xSy, ySz, pop_{l,r}_{gg,00,11},
// parity P = Sz exp(i pi Ny) and exsum = Sz + Ny. Positions and spin-position
// moments in nm.
ObservableSet standard_observables(const SystemParams& params);

struct TimeSeries {
  std::vector<double> times;
  std::map<std::string, std::vector<double>> tracks;
  std::map<std::string, std::vector<double>> stderr_tracks;
  std::map<std::string, std::string> metadata;

  const std::vector<double>& track(const std::string& name) const;
};

// Real parts of every observable track of `result` (recomputed from retained
// states when present). Throws SolverAbort when an imaginary residue above
// `imag_tolerance` shows up.
TimeSeries measure_all(const EvolutionResult& result, const ObservableSet& set, double imag_tolerance = 1e-8);

// <Sz exp(i pi Ny)>
Complex parity_charge(const PureState& state, const BasisSpec& basis);
Complex parity_charge(const DensityState& state, const BasisSpec& basis);

// <A B> - <A><B>
Complex connected_correlator(const PureState& state, const OperatorMatrix& a, const OperatorMatrix& b);

}  // namespace cidyn
