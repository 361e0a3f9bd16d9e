#pragma once

#include "mfg/grid.hpp"

#include <vector>

namespace mfg {

// Convex closed control set U (box or centered ball) with a finite grid of points in U.
class ControlSet {
 public:
  enum class Shape { kBox, kBall };

  static ControlSet box(std::vector<double> lo, std::vector<double> hi, std::size_t points_per_axis);
  static ControlSet ball(int dimension, double radius, std::size_t points_per_axis);

  int dim() const { return dim_; }
  Shape shape() const { return shape_; }
  const std::vector<SVec>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }

  bool contains(const SVec& u, double tol = tol::kMembership) const;
  // Euclidean projection onto U.
  SVec project(const SVec& u) const;
  // max over u in U of |(Q u)_row|.
  double max_drift(const SMat& q, int row) const;

  // Index of the default control u0 (grid point nearest to the projection of the origin).
  std::size_t default_index() const { return default_index_; }
  void set_default_index(std::size_t j);

 private:
  ControlSet() = default;
  void finish();

  Shape shape_ = Shape::kBox;
  int dim_ = 1;
  std::vector<double> lo_, hi_;
  double radius_ = 0.0;
  std::vector<SVec> points_;
  std::size_t default_index_ = 0;
};

// Feedback control u(k, i) per time step k < K and state node i.
class ControlField {
 public:
  ControlField(StateGrid grid, TimeGrid times, int control_dim, std::vector<double> values);
  static ControlField constant(const StateGrid& grid, const TimeGrid& times, const SVec& u);

  const StateGrid& grid() const { return grid_; }
  const TimeGrid& times() const { return times_; }
  int control_dim() const { return control_dim_; }
  SVec at(std::size_t k, std::size_t i) const;
  void set(std::size_t k, std::size_t i, const SVec& u);
  const std::vector<double>& data() const { return values_; }

  // Throws ValidationError when some value lies outside U.
  void require_in(const ControlSet& u_set) const;
  double sup_norm() const;

 private:
  StateGrid grid_;
  TimeGrid times_;
  int control_dim_;
  std::vector<double> values_;
};

}  // namespace mfg
