#pragma once

#include "mfg/grid.hpp"

#include <span>
#include <vector>

namespace mfg {

// Time-indexed probability vectors on a state grid (cell-mass convention):
// one row of n^d nonnegative weights per time node, each row summing to 1.
class MeasureCurve {
 public:
  MeasureCurve(StateGrid grid, TimeGrid times, std::vector<double> weights);

  // The same probability vector at every time node.
  static MeasureCurve constant(const StateGrid& grid, const TimeGrid& times, std::span<const double> w);

  const StateGrid& grid() const { return grid_; }
  const TimeGrid& times() const { return times_; }
  std::span<const double> at(std::size_t k) const;
  double weight(std::size_t k, std::size_t i) const { return weights_[k * grid_.size() + i]; }
  const std::vector<double>& data() const { return weights_; }

  // Pointwise (1 - lambda) * this + lambda * other.
  MeasureCurve blend(const MeasureCurve& other, double lambda) const;

 private:
  StateGrid grid_;
  TimeGrid times_;
  std::vector<double> weights_;
};

// Throws ValidationError unless w is a probability vector within tol::kMass.
void require_probability(std::span<const double> w, const char* what);

// Discrete Gaussian N(mean, var * I) sampled at nodes and normalized to unit mass.
std::vector<double> discrete_gaussian(const StateGrid& grid, const SVec& mean, double variance);

// Unit mass at the node nearest to x.
std::vector<double> point_mass(const StateGrid& grid, const SVec& x);

}  // namespace mfg
