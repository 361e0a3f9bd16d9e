#include "mfg/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mfg {

StateGrid::StateGrid(int dimension, double half_width, std::size_t points_per_axis)
    : dim_(dimension), half_width_(half_width), n_(points_per_axis) {
  if (dimension != 1 && dimension != 2) {
    throw DimensionError("state grid dimension must be 1 or 2, got " + std::to_string(dimension));
  }
  if (!(half_width > 0.0)) throw ValidationError("state grid half-width must be positive");
  if (points_per_axis < 3) throw ValidationError("state grid needs at least 3 points per axis");
  dx_ = 2.0 * half_width / static_cast<double>(n_ - 1);
  size_ = dim_ == 1 ? n_ : n_ * n_;
}

std::array<std::size_t, 2> StateGrid::multi_index(std::size_t flat) const {
  return {flat % n_, dim_ == 1 ? 0 : flat / n_};
}

SVec StateGrid::node(std::size_t flat) const {
  SVec x(dim_);
  const auto idx = multi_index(flat);
  x(0) = axis_coord(idx[0]);
  if (dim_ == 2) x(1) = axis_coord(idx[1]);
  return x;
}

std::size_t StateGrid::nearest(const SVec& x) const {
  auto axis = [&](double c) {
    const double r = std::round((c + half_width_) / dx_);
    return static_cast<std::size_t>(std::clamp(r, 0.0, static_cast<double>(n_ - 1)));
  };
  if (dim_ == 1) return axis(x(0));
  return flat_index(axis(x(0)), axis(x(1)));
}

bool StateGrid::operator==(const StateGrid& other) const {
  return dim_ == other.dim_ && n_ == other.n_ && half_width_ == other.half_width_;
}

TimeGrid::TimeGrid(double horizon, std::size_t steps) : horizon_(horizon), steps_(steps) {
  if (!(horizon > 0.0)) throw ValidationError("time horizon must be positive");
  if (steps < 1) throw ValidationError("time grid needs at least one step");
  dt_ = horizon / static_cast<double>(steps);
}

bool TimeGrid::operator==(const TimeGrid& other) const {
  return steps_ == other.steps_ && horizon_ == other.horizon_;
}

}  // namespace mfg
