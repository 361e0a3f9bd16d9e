#include "mfg/transport.hpp"

#include "mfg/measure_curve.hpp"
#include "mfg/simplex.hpp"

#include <algorithm>
#include <cmath>

namespace mfg {

namespace {

void check_pair(std::span<const double> a, std::span<const double> b, const StateGrid& grid) {
  if (a.size() != grid.size() || b.size() != grid.size()) {
    throw DimensionError("transport: weight vectors do not match the grid");
  }
  require_probability(a, "transport source");
  require_probability(b, "transport target");
}

double distance(const SVec& x, const SVec& y) { return (x - y).norm(); }

// Distances are evaluated on a canonically ordered pair so that d(a, b) and d(b, a)
// are bitwise equal.
bool swapped(std::span<const double> a, std::span<const double> b) {
  return std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end());
}

void transpose(TransportPlan& plan) {
  std::swap(plan.source, plan.target);
  for (auto& e : plan.coupling) std::swap(e.from, e.to);
  std::sort(plan.coupling.begin(), plan.coupling.end(),
            [](const PlanEntry& l, const PlanEntry& r) { return l.from != r.from ? l.from < r.from : l.to < r.to; });
}

}  // namespace

double TransportPlan::marginal_error() const {
  std::vector<double> row(source.size(), 0.0), col(target.size(), 0.0);
  for (const auto& e : coupling) {
    row[e.from] += e.weight;
    col[e.to] += e.weight;
  }
  double err = 0.0;
  for (std::size_t i = 0; i < row.size(); ++i) err = std::max(err, std::abs(row[i] - source[i]));
  for (std::size_t j = 0; j < col.size(); ++j) err = std::max(err, std::abs(col[j] - target[j]));
  return err;
}

TransportPlan solve_transport_lp(std::span<const double> a, std::span<const double> b, const StateGrid& grid,
                                 const GroundCost& cost, bool metric) {
  check_pair(a, b, grid);
  TransportPlan plan;
  plan.source.assign(a.begin(), a.end());
  plan.target.assign(b.begin(), b.end());

  std::vector<double> ra(a.begin(), a.end()), rb(b.begin(), b.end());
  for (auto& v : ra) v = std::max(v, 0.0);
  for (auto& v : rb) v = std::max(v, 0.0);
  if (metric) {
    for (std::size_t i = 0; i < ra.size(); ++i) {
      const double common = std::min(ra[i], rb[i]);
      if (common > 0.0) plan.coupling.push_back({i, i, common});
      ra[i] -= common;
      rb[i] -= common;
    }
  }
  std::vector<std::size_t> sa, sb;
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    if (ra[i] > 0.0) {
      sa.push_back(i);
      ma += ra[i];
    }
    if (rb[i] > 0.0) {
      sb.push_back(i);
      mb += rb[i];
    }
  }
  if (sa.empty() || sb.empty() || ma <= 1e-15 || mb <= 1e-15) {
    plan.cost = 0.0;
    for (const auto& e : plan.coupling) plan.cost += e.weight * cost(grid.node(e.from), grid.node(e.to));
    return plan;
  }
  // Equalize residual totals so the equality system is consistent to rounding.
  for (std::size_t j : sb) rb[j] *= ma / mb;

  lp::Problem prob;
  for (std::size_t i : sa) {
    const SVec xi = grid.node(i);
    for (std::size_t j : sb) prob.add_var(cost(xi, grid.node(j)));
  }
  const std::size_t nb = sb.size();
  for (std::size_t r = 0; r < sa.size(); ++r) {
    std::vector<lp::Term> terms;
    for (std::size_t c = 0; c < nb; ++c) terms.push_back({r * nb + c, 1.0});
    prob.add_row(std::move(terms), lp::Sense::kEqual, ra[sa[r]]);
  }
  for (std::size_t c = 0; c < nb; ++c) {
    std::vector<lp::Term> terms;
    for (std::size_t r = 0; r < sa.size(); ++r) terms.push_back({r * nb + c, 1.0});
    prob.add_row(std::move(terms), lp::Sense::kEqual, rb[sb[c]]);
  }
  const lp::Solution sol = lp::solve(prob);
  if (sol.status != lp::Status::kOptimal) {
    throw NumericalError("transport LP failed: " + lp::to_string(sol.status));
  }
  for (std::size_t r = 0; r < sa.size(); ++r) {
    for (std::size_t c = 0; c < nb; ++c) {
      const double w = sol.x[r * nb + c];
      if (w > 0.0) plan.coupling.push_back({sa[r], sb[c], w});
    }
  }
  std::sort(plan.coupling.begin(), plan.coupling.end(),
            [](const PlanEntry& l, const PlanEntry& r) { return l.from != r.from ? l.from < r.from : l.to < r.to; });
  plan.cost = 0.0;
  for (const auto& e : plan.coupling) plan.cost += e.weight * cost(grid.node(e.from), grid.node(e.to));
  return plan;
}

double kr_distance(std::span<const double> a, std::span<const double> b, const StateGrid& grid) {
  check_pair(a, b, grid);
  if (std::equal(a.begin(), a.end(), b.begin())) return 0.0;
  if (swapped(a, b)) std::swap(a, b);
  const TransportPlan plan = solve_transport_lp(
      a, b, grid, [](const SVec& x, const SVec& y) { return std::min(distance(x, y), 2.0); }, true);
  return std::clamp(plan.cost, 0.0, 2.0);
}

TransportPlan min_cost_plan(std::span<const double> a, std::span<const double> b, const StateGrid& grid) {
  return solve_transport_lp(
      a, b, grid, [](const SVec& x, const SVec& y) { return std::min(distance(x, y), 1.0); }, true);
}

double wasserstein1_1d(std::span<const double> a, std::span<const double> b, const StateGrid& grid) {
  if (grid.dim() != 1) throw DimensionError("wasserstein1_1d needs a 1D grid");
  if (a.size() != grid.size() || b.size() != grid.size()) throw DimensionError("wasserstein1_1d: size mismatch");
  double cdf = 0.0, total = 0.0;
  for (std::size_t i = 0; i + 1 < a.size(); ++i) {
    cdf += a[i] - b[i];
    total += std::abs(cdf);
  }
  return total * grid.spacing();
}

WassersteinResult wasserstein_p(std::span<const double> a, std::span<const double> b, const StateGrid& grid, int p) {
  if (p != 1 && p != 2) throw ValidationError("wasserstein_p supports p in {1, 2}");
  check_pair(a, b, grid);
  if (swapped(a, b)) {
    WassersteinResult r = wasserstein_p(b, a, grid, p);
    transpose(r.plan);
    return r;
  }
  const double pd = static_cast<double>(p);
  auto cost = [pd](const SVec& x, const SVec& y) { return std::pow(distance(x, y), pd); };
  WassersteinResult out;
  if (std::equal(a.begin(), a.end(), b.begin())) {
    out.plan.source.assign(a.begin(), a.end());
    out.plan.target.assign(b.begin(), b.end());
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i] > 0.0) out.plan.coupling.push_back({i, i, a[i]});
    }
    return out;
  }
  if (grid.dim() == 1) {
    // North-west corner rule on the ordered line: the monotone coupling is optimal
    // for every convex cost of |x - y|.
    TransportPlan& plan = out.plan;
    plan.source.assign(a.begin(), a.end());
    plan.target.assign(b.begin(), b.end());
    std::size_t i = 0, j = 0;
    double ra = std::max(a[0], 0.0), rb = std::max(b[0], 0.0);
    const std::size_t n = a.size();
    while (i < n && j < n) {
      if (ra <= 0.0) {
        if (++i < n) ra = std::max(a[i], 0.0);
        continue;
      }
      if (rb <= 0.0) {
        if (++j < n) rb = std::max(b[j], 0.0);
        continue;
      }
      const double w = std::min(ra, rb);
      plan.coupling.push_back({i, j, w});
      plan.cost += w * cost(grid.node(i), grid.node(j));
      ra -= w;
      rb -= w;
      // Rounding residue below 1e-15 is absorbed instead of being carried forward.
      if (ra <= 1e-15) ra = 0.0;
      if (rb <= 1e-15) rb = 0.0;
    }
  } else {
    out.plan = solve_transport_lp(a, b, grid, cost, p == 1);
  }
  out.value = std::pow(std::max(out.plan.cost, 0.0), 1.0 / pd);
  return out;
}

}  // namespace mfg
