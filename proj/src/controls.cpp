#include "mfg/controls.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mfg {

ControlSet ControlSet::box(std::vector<double> lo, std::vector<double> hi, std::size_t points_per_axis) {
  if (lo.size() != hi.size() || lo.empty() || lo.size() > 2) {
    throw DimensionError("control box needs matching bounds of dimension 1 or 2");
  }
  for (std::size_t m = 0; m < lo.size(); ++m) {
    if (!(lo[m] <= hi[m])) throw ValidationError("control box is empty");
  }
  if (points_per_axis < 1) throw ValidationError("control grid needs at least one point per axis");
  ControlSet s;
  s.shape_ = Shape::kBox;
  s.dim_ = static_cast<int>(lo.size());
  s.lo_ = std::move(lo);
  s.hi_ = std::move(hi);
  auto axis = [&](std::size_t m, std::size_t k) {
    if (points_per_axis == 1) return 0.5 * (s.lo_[m] + s.hi_[m]);
    return s.lo_[m] + (s.hi_[m] - s.lo_[m]) * static_cast<double>(k) / static_cast<double>(points_per_axis - 1);
  };
  for (std::size_t j = 0; j < (s.dim_ == 2 ? points_per_axis : 1); ++j) {
    for (std::size_t i = 0; i < points_per_axis; ++i) {
      SVec u(s.dim_);
      u(0) = axis(0, i);
      if (s.dim_ == 2) u(1) = axis(1, j);
      s.points_.push_back(u);
    }
  }
  s.finish();
  return s;
}

ControlSet ControlSet::ball(int dimension, double radius, std::size_t points_per_axis) {
  if (dimension != 1 && dimension != 2) throw DimensionError("control ball dimension must be 1 or 2");
  if (!(radius >= 0.0)) throw ValidationError("control ball radius must be nonnegative");
  ControlSet s;
  s.shape_ = Shape::kBall;
  s.dim_ = dimension;
  s.radius_ = radius;
  const std::size_t n = std::max<std::size_t>(points_per_axis, 1);
  auto axis = [&](std::size_t k) {
    return n == 1 ? 0.0 : -radius + 2.0 * radius * static_cast<double>(k) / static_cast<double>(n - 1);
  };
  for (std::size_t j = 0; j < (dimension == 2 ? n : 1); ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      SVec u(dimension);
      u(0) = axis(i);
      if (dimension == 2) u(1) = axis(j);
      if (u.norm() <= radius * (1.0 + 1e-14)) s.points_.push_back(u);
    }
  }
  s.finish();
  return s;
}

void ControlSet::finish() {
  const SVec origin = project(SVec::Zero(dim_));
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < points_.size(); ++j) {
    const double d = (points_[j] - origin).norm();
    if (d < best - 1e-15) {
      best = d;
      default_index_ = j;
    }
  }
}

void ControlSet::set_default_index(std::size_t j) {
  if (j >= points_.size()) throw ValidationError("default control index out of range");
  default_index_ = j;
}

bool ControlSet::contains(const SVec& u, double tol) const {
  if (u.size() != dim_) return false;
  if (shape_ == Shape::kBall) return u.norm() <= radius_ + tol;
  for (int m = 0; m < dim_; ++m) {
    if (u(m) < lo_[static_cast<std::size_t>(m)] - tol || u(m) > hi_[static_cast<std::size_t>(m)] + tol) return false;
  }
  return true;
}

SVec ControlSet::project(const SVec& u) const {
  SVec p = u;
  if (shape_ == Shape::kBall) {
    const double n = u.norm();
    if (n > radius_) p *= radius_ / n;
    return p;
  }
  for (int m = 0; m < dim_; ++m) p(m) = std::clamp(u(m), lo_[static_cast<std::size_t>(m)], hi_[static_cast<std::size_t>(m)]);
  return p;
}

double ControlSet::max_drift(const SMat& q, int row) const {
  if (shape_ == Shape::kBall) return radius_ * q.row(row).norm();
  double total = 0.0;
  for (int m = 0; m < dim_; ++m) {
    const auto mm = static_cast<std::size_t>(m);
    total += std::abs(q(row, m)) * std::max(std::abs(lo_[mm]), std::abs(hi_[mm]));
  }
  return total;
}

ControlField::ControlField(StateGrid grid, TimeGrid times, int control_dim, std::vector<double> values)
    : grid_(grid), times_(times), control_dim_(control_dim), values_(std::move(values)) {
  if (control_dim < 1 || control_dim > 2) throw DimensionError("control dimension must be 1 or 2");
  if (values_.size() != times_.steps() * grid_.size() * static_cast<std::size_t>(control_dim)) {
    throw DimensionError("control field needs K x n^d x d1 values");
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw ValidationError("control field values must be finite");
  }
}

ControlField ControlField::constant(const StateGrid& grid, const TimeGrid& times, const SVec& u) {
  const auto d1 = static_cast<std::size_t>(u.size());
  std::vector<double> v(times.steps() * grid.size() * d1);
  for (std::size_t c = 0; c < times.steps() * grid.size(); ++c) {
    for (std::size_t m = 0; m < d1; ++m) v[c * d1 + m] = u(static_cast<Eigen::Index>(m));
  }
  return ControlField(grid, times, static_cast<int>(d1), std::move(v));
}

SVec ControlField::at(std::size_t k, std::size_t i) const {
  const auto d1 = static_cast<std::size_t>(control_dim_);
  const std::size_t base = (k * grid_.size() + i) * d1;
  SVec u(control_dim_);
  for (std::size_t m = 0; m < d1; ++m) u(static_cast<Eigen::Index>(m)) = values_[base + m];
  return u;
}

void ControlField::set(std::size_t k, std::size_t i, const SVec& u) {
  const auto d1 = static_cast<std::size_t>(control_dim_);
  const std::size_t base = (k * grid_.size() + i) * d1;
  for (std::size_t m = 0; m < d1; ++m) values_[base + m] = u(static_cast<Eigen::Index>(m));
}

void ControlField::require_in(const ControlSet& u_set) const {
  if (u_set.dim() != control_dim_) throw DimensionError("control field and control set dimensions differ");
  for (std::size_t k = 0; k < times_.steps(); ++k) {
    for (std::size_t i = 0; i < grid_.size(); ++i) {
      if (!u_set.contains(at(k, i))) throw ValidationError("control value outside U");
    }
  }
}

double ControlField::sup_norm() const {
  double s = 0.0;
  for (std::size_t k = 0; k < times_.steps(); ++k) {
    for (std::size_t i = 0; i < grid_.size(); ++i) s = std::max(s, at(k, i).norm());
  }
  return s;
}

}  // namespace mfg
