#pragma once

#include "mfg/grid.hpp"

#include <functional>
#include <span>
#include <vector>

namespace mfg {

struct PlanEntry {
  std::size_t from;
  std::size_t to;
  double weight;
};

// Sparse coupling between two probability vectors on a common grid.
struct TransportPlan {
  std::vector<double> source;
  std::vector<double> target;
  std::vector<PlanEntry> coupling;
  double cost = 0.0;

  // Largest deviation of the plan's marginals from source/target.
  double marginal_error() const;
};

struct WassersteinResult {
  double value = 0.0;  // p-th root of the optimal cost
  TransportPlan plan;
};

// Kantorovich-Rubinshtein (bounded-Lipschitz) distance, computed as optimal
// transport with ground cost min(|x - y|, 2). Value in [0, 2].
double kr_distance(std::span<const double> a, std::span<const double> b, const StateGrid& grid);

// W_p for p in {1, 2}. In 1D the monotone coupling is used; in 2D a transport LP.
WassersteinResult wasserstein_p(std::span<const double> a, std::span<const double> b, const StateGrid& grid, int p);

// Optimal plan for the truncated cost min(|x - y|, 1).
TransportPlan min_cost_plan(std::span<const double> a, std::span<const double> b, const StateGrid& grid);

using GroundCost = std::function<double(const SVec&, const SVec&)>;

// Transport LP over the supports of a and b. When `metric` is set the common
// mass min(a, b) is left in place first, which is optimal for metric costs.
TransportPlan solve_transport_lp(std::span<const double> a, std::span<const double> b, const StateGrid& grid,
                                 const GroundCost& cost, bool metric);

// W_1 for 1D grids through the CDF formula; used on large grids where the LP is too big.
double wasserstein1_1d(std::span<const double> a, std::span<const double> b, const StateGrid& grid);

}  // namespace mfg
