#include "mfg/occupation.hpp"

#include <cmath>
#include <string>

namespace mfg {

OccupationMeasure::OccupationMeasure(StateGrid grid, TimeGrid times, std::vector<SVec> controls,
                                     std::vector<double> weights)
    : grid_(grid), times_(times), controls_(std::move(controls)), weights_(std::move(weights)) {
  if (controls_.empty()) throw ValidationError("occupation measure needs at least one control point");
  if (weights_.size() != times_.steps() * controls_.size() * grid_.size()) {
    throw DimensionError("occupation measure needs K x m x n^d weights");
  }
  const std::size_t slice = controls_.size() * grid_.size();
  for (std::size_t k = 0; k < times_.steps(); ++k) {
    double total = 0.0;
    for (std::size_t c = 0; c < slice; ++c) {
      const double w = weights_[k * slice + c];
      if (!std::isfinite(w) || w < -tol::kNegativity) {
        throw ValidationError("occupation measure weights must be finite and nonnegative");
      }
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-10) {
      throw ValidationError("occupation measure slice " + std::to_string(k) + " has mass " + std::to_string(total));
    }
  }
}

OccupationMeasure OccupationMeasure::markovian(const StateGrid& grid, const TimeGrid& times,
                                               std::vector<SVec> controls, std::span<const std::size_t> index,
                                               std::span<const double> marginals) {
  const std::size_t n = grid.size(), m = controls.size();
  if (index.size() != times.steps() * n || marginals.size() < times.steps() * n) {
    throw DimensionError("markovian occupation measure: size mismatch");
  }
  std::vector<double> w(times.steps() * m * n, 0.0);
  for (std::size_t k = 0; k < times.steps(); ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = index[k * n + i];
      if (j >= m) throw ValidationError("control index out of range");
      w[(k * m + j) * n + i] = marginals[k * n + i];
    }
  }
  return OccupationMeasure(grid, times, std::move(controls), std::move(w));
}

std::vector<double> OccupationMeasure::marginal(std::size_t k) const {
  if (k >= times_.steps()) throw std::out_of_range("occupation step out of range");
  std::vector<double> m(grid_.size(), 0.0);
  for (std::size_t j = 0; j < controls_.size(); ++j) {
    for (std::size_t i = 0; i < grid_.size(); ++i) m[i] += weights_[offset(k, j, i)];
  }
  return m;
}

OccupationMeasure OccupationMeasure::blend(const OccupationMeasure& other, double alpha) const {
  if (!(grid_ == other.grid_) || !(times_ == other.times_) || controls_.size() != other.controls_.size()) {
    throw DimensionError("blend: occupation measures differ in shape");
  }
  std::vector<double> w(weights_.size());
  for (std::size_t c = 0; c < w.size(); ++c) w[c] = (1.0 - alpha) * weights_[c] + alpha * other.weights_[c];
  return OccupationMeasure(grid_, times_, controls_, std::move(w));
}

ConditionalFamily::ConditionalFamily(StateGrid grid, TimeGrid times, std::vector<SVec> controls,
                                     std::vector<double> base, std::vector<double> conditionals,
                                     std::vector<bool> defined)
    : grid_(grid),
      times_(times),
      controls_(std::move(controls)),
      base_(std::move(base)),
      conditionals_(std::move(conditionals)),
      defined_(std::move(defined)) {
  const std::size_t cells = times_.steps() * grid_.size();
  if (base_.size() != cells || defined_.size() != cells || conditionals_.size() != cells * controls_.size()) {
    throw DimensionError("conditional family: size mismatch");
  }
}

std::span<const double> ConditionalFamily::cell(std::size_t k, std::size_t i) const {
  const std::size_t c = k * grid_.size() + i;
  if (!defined_[c]) throw ValidationError("conditional measure undefined on a zero-mass cell");
  return {conditionals_.data() + c * controls_.size(), controls_.size()};
}

SVec ConditionalFamily::mean(std::size_t k, std::size_t i) const {
  const auto p = cell(k, i);
  SVec u = SVec::Zero(controls_.front().size());
  for (std::size_t j = 0; j < controls_.size(); ++j) u += p[j] * controls_[j];
  return u;
}

OccupationMeasure ConditionalFamily::recompose() const {
  const std::size_t n = grid_.size(), m = controls_.size();
  std::vector<double> w(times_.steps() * m * n, 0.0);
  for (std::size_t k = 0; k < times_.steps(); ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!defined(k, i)) continue;
      const auto p = cell(k, i);
      for (std::size_t j = 0; j < m; ++j) w[(k * m + j) * n + i] = p[j] * base(k, i);
    }
  }
  return OccupationMeasure(grid_, times_, controls_, std::move(w));
}

ConditionalFamily conditional_family(const OccupationMeasure& pi) {
  const std::size_t n = pi.grid().size(), m = pi.num_controls(), steps = pi.times().steps();
  std::vector<double> base(steps * n, 0.0), cond(steps * n * m, 0.0);
  std::vector<bool> defined(steps * n, false);
  for (std::size_t k = 0; k < steps; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      double total = 0.0;
      for (std::size_t j = 0; j < m; ++j) total += std::max(pi.weight(k, j, i), 0.0);
      const std::size_t c = k * n + i;
      base[c] = total;
      if (total <= 0.0) continue;
      defined[c] = true;
      for (std::size_t j = 0; j < m; ++j) cond[c * m + j] = std::max(pi.weight(k, j, i), 0.0) / total;
    }
  }
  return ConditionalFamily(pi.grid(), pi.times(), pi.controls(), std::move(base), std::move(cond),
                           std::move(defined));
}

}  // namespace mfg
