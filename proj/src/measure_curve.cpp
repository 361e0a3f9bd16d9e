#include "mfg/measure_curve.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace mfg {

void require_probability(std::span<const double> w, const char* what) {
  double total = 0.0;
  for (double v : w) {
    if (!std::isfinite(v) || v < -tol::kNegativity) {
      throw ValidationError(std::string(what) + ": weights must be finite and nonnegative");
    }
    total += v;
  }
  if (std::abs(total - 1.0) > tol::kMass) {
    throw ValidationError(std::string(what) + ": total mass " + std::to_string(total) + " is not 1");
  }
}

MeasureCurve::MeasureCurve(StateGrid grid, TimeGrid times, std::vector<double> weights)
    : grid_(grid), times_(times), weights_(std::move(weights)) {
  if (weights_.size() != times_.nodes() * grid_.size()) {
    throw DimensionError("measure curve needs (K+1) x n^d weights");
  }
  for (std::size_t k = 0; k < times_.nodes(); ++k) require_probability(at(k), "measure curve slice");
}

MeasureCurve MeasureCurve::constant(const StateGrid& grid, const TimeGrid& times, std::span<const double> w) {
  if (w.size() != grid.size()) throw DimensionError("weight vector does not match grid");
  std::vector<double> data;
  data.reserve(times.nodes() * grid.size());
  for (std::size_t k = 0; k < times.nodes(); ++k) data.insert(data.end(), w.begin(), w.end());
  return MeasureCurve(grid, times, std::move(data));
}

std::span<const double> MeasureCurve::at(std::size_t k) const {
  if (k >= times_.nodes()) throw std::out_of_range("time index out of range");
  return {weights_.data() + k * grid_.size(), grid_.size()};
}

MeasureCurve MeasureCurve::blend(const MeasureCurve& other, double lambda) const {
  if (!(grid_ == other.grid_) || !(times_ == other.times_)) throw DimensionError("blend: grids differ");
  std::vector<double> out(weights_.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (1.0 - lambda) * weights_[i] + lambda * other.weights_[i];
  return MeasureCurve(grid_, times_, std::move(out));
}

std::vector<double> discrete_gaussian(const StateGrid& grid, const SVec& mean, double variance) {
  if (!(variance > 0.0)) throw ValidationError("gaussian variance must be positive");
  std::vector<double> w(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const SVec x = grid.node(i);
    w[i] = std::exp(-(x - mean).squaredNorm() / (2.0 * variance));
  }
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  if (!(total > 0.0)) throw ValidationError("gaussian has no mass on the grid");
  for (double& v : w) v /= total;
  return w;
}

std::vector<double> point_mass(const StateGrid& grid, const SVec& x) {
  std::vector<double> w(grid.size(), 0.0);
  w[grid.nearest(x)] = 1.0;
  return w;
}

}  // namespace mfg
