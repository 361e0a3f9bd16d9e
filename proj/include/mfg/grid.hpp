#pragma once

#include "mfg/types.hpp"

#include <array>
#include <cstddef>
#include <span>

namespace mfg {

// Uniform tensor grid on [-L, L]^d, d in {1, 2}. Flat index i + n*j.
class StateGrid {
 public:
  StateGrid(int dimension, double half_width, std::size_t points_per_axis);

  int dim() const { return dim_; }
  double half_width() const { return half_width_; }
  std::size_t points_per_axis() const { return n_; }
  double spacing() const { return dx_; }
  std::size_t size() const { return size_; }

  double axis_coord(std::size_t index) const { return -half_width_ + dx_ * static_cast<double>(index); }
  std::array<std::size_t, 2> multi_index(std::size_t flat) const;
  std::size_t flat_index(std::size_t i, std::size_t j = 0) const { return i + n_ * j; }
  SVec node(std::size_t flat) const;

  // Nearest node; coordinates outside the box clamp to the boundary.
  std::size_t nearest(const SVec& x) const;

  bool operator==(const StateGrid& other) const;

 private:
  int dim_;
  double half_width_;
  std::size_t n_;
  double dx_;
  std::size_t size_;
};

class TimeGrid {
 public:
  TimeGrid(double horizon, std::size_t steps);

  double horizon() const { return horizon_; }
  std::size_t steps() const { return steps_; }
  std::size_t nodes() const { return steps_ + 1; }
  double dt() const { return dt_; }
  double time(std::size_t k) const { return dt_ * static_cast<double>(k); }

  bool operator==(const TimeGrid& other) const;

 private:
  double horizon_;
  std::size_t steps_;
  double dt_;
};

}  // namespace mfg
