#pragma once

#include "mfg/grid.hpp"

#include <span>
#include <vector>

namespace mfg {

// Nonnegative weights pi(k, j, i) over time step k < K, control point j and
// state node i. Each time slice sums to 1 (so Dt * total mass = T).
class OccupationMeasure {
 public:
  OccupationMeasure(StateGrid grid, TimeGrid times, std::vector<SVec> controls, std::vector<double> weights);

  // delta_{u(k,i)} (x) m_k where u picks a control index per (k, i).
  static OccupationMeasure markovian(const StateGrid& grid, const TimeGrid& times, std::vector<SVec> controls,
                                     std::span<const std::size_t> index, std::span<const double> marginals);

  const StateGrid& grid() const { return grid_; }
  const TimeGrid& times() const { return times_; }
  const std::vector<SVec>& controls() const { return controls_; }
  std::size_t num_controls() const { return controls_.size(); }
  double weight(std::size_t k, std::size_t j, std::size_t i) const { return weights_[offset(k, j, i)]; }
  const std::vector<double>& data() const { return weights_; }

  // (x, t) marginal at step k: sum over controls.
  std::vector<double> marginal(std::size_t k) const;

  // Pointwise (1 - alpha) * this + alpha * other.
  OccupationMeasure blend(const OccupationMeasure& other, double alpha) const;

  std::size_t offset(std::size_t k, std::size_t j, std::size_t i) const {
    return (k * controls_.size() + j) * grid_.size() + i;
  }

 private:
  StateGrid grid_;
  TimeGrid times_;
  std::vector<SVec> controls_;
  std::vector<double> weights_;
};

// Disintegration of an occupation measure over its (x, t) marginal.
class ConditionalFamily {
 public:
  ConditionalFamily(StateGrid grid, TimeGrid times, std::vector<SVec> controls, std::vector<double> base,
                    std::vector<double> conditionals, std::vector<bool> defined);

  const StateGrid& grid() const { return grid_; }
  const TimeGrid& times() const { return times_; }
  const std::vector<SVec>& controls() const { return controls_; }
  double base(std::size_t k, std::size_t i) const { return base_[k * grid_.size() + i]; }
  bool defined(std::size_t k, std::size_t i) const { return defined_[k * grid_.size() + i]; }
  // Probability vector over controls; throws for undefined cells.
  std::span<const double> cell(std::size_t k, std::size_t i) const;
  // Conditional mean of the control in a defined cell.
  SVec mean(std::size_t k, std::size_t i) const;

  OccupationMeasure recompose() const;

 private:
  StateGrid grid_;
  TimeGrid times_;
  std::vector<SVec> controls_;
  std::vector<double> base_;
  std::vector<double> conditionals_;
  std::vector<bool> defined_;
};

ConditionalFamily conditional_family(const OccupationMeasure& pi);

}  // namespace mfg
