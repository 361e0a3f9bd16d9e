#include "mfg/measures.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mfg {

double moment(const MeasureCurve& curve, std::span<const double> phi, std::size_t k) {
  if (phi.size() != curve.grid().size()) throw DimensionError("moment: field does not match the grid");
  const auto w = curve.at(k);
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!std::isfinite(phi[i])) throw ValidationError("moment: field is not finite");
    s += phi[i] * w[i];
  }
  return s;
}

std::vector<double> sample_field(const StateGrid& grid, const std::function<double(const SVec&)>& f) {
  std::vector<double> out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) out[i] = f(grid.node(i));
  return out;
}

std::vector<double> v_weak_gap(const std::vector<MeasureCurve>& curves, const MeasureCurve& limit,
                               std::span<const double> zeta, std::span<const double> v) {
  const StateGrid& g = limit.grid();
  if (zeta.size() != g.size() || v.size() != g.size()) throw DimensionError("v_weak_gap: field size mismatch");
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (zeta[i] != 0.0 && !(v[i] > 0.0)) throw ValidationError("v_weak_gap: zeta / V is unbounded");
  }
  std::vector<double> base(limit.times().nodes());
  for (std::size_t k = 0; k < base.size(); ++k) base[k] = moment(limit, zeta, k);
  std::vector<double> gaps;
  gaps.reserve(curves.size());
  for (const auto& c : curves) {
    if (!(c.grid() == g) || !(c.times() == limit.times())) throw DimensionError("v_weak_gap: grids differ");
    double gap = 0.0;
    for (std::size_t k = 0; k < base.size(); ++k) gap = std::max(gap, std::abs(moment(c, zeta, k) - base[k]));
    gaps.push_back(gap);
  }
  return gaps;
}

namespace {

// Column-normalized bump kernel: entry (y, z) = omega(y - z) / sum_y' omega(y' - z).
std::vector<std::vector<std::pair<std::size_t, double>>> bump_columns(const StateGrid& g, double eps) {
  std::vector<std::vector<std::pair<std::size_t, double>>> cols(g.size());
  const auto reach = static_cast<long>(std::floor(eps / g.spacing()));
  const long n = static_cast<long>(g.points_per_axis());
  for (std::size_t z = 0; z < g.size(); ++z) {
    const auto mz = g.multi_index(z);
    const SVec xz = g.node(z);
    double total = 0.0;
    auto& col = cols[z];
    for (long dj = (g.dim() == 2 ? -reach : 0); dj <= (g.dim() == 2 ? reach : 0); ++dj) {
      for (long di = -reach; di <= reach; ++di) {
        const long i = static_cast<long>(mz[0]) + di;
        const long j = static_cast<long>(mz[1]) + dj;
        if (i < 0 || i >= n || j < 0 || (g.dim() == 2 && j >= n)) continue;
        const std::size_t y = g.flat_index(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
        const double r2 = (g.node(y) - xz).squaredNorm() / (eps * eps);
        if (r2 >= 1.0) continue;
        const double w = std::pow(1.0 - r2, 3);
        col.emplace_back(y, w);
        total += w;
      }
    }
    for (auto& e : col) e.second /= total;
  }
  return cols;
}

}  // namespace

MollifiedCurve mollify_curve(const MeasureCurve& curve, std::span<const double> payload, double eps) {
  if (!(eps > 0.0 && eps < 0.5)) throw ValidationError("mollify_curve: eps must lie in (0, 1/2)");
  const StateGrid& g = curve.grid();
  const TimeGrid& tg = curve.times();
  const std::size_t n = g.size(), steps = tg.steps();
  if (payload.size() != steps * n) throw DimensionError("mollify_curve: payload must have K x n^d values");
  if (eps > tg.horizon()) throw ValidationError("mollify_curve: eps exceeds the horizon");

  const auto kernel = bump_columns(g, eps);
  const std::vector<double> phi = discrete_gaussian(g, SVec::Zero(g.dim()), 1.0);
  if (*std::min_element(phi.begin(), phi.end()) <= 0.0) {
    throw ValidationError("mollify_curve: the Gaussian floor underflows on this grid");
  }
  const double dt = tg.dt();
  MollifiedCurve out;
  for (std::size_t k = 0; k < tg.nodes(); ++k) {
    const double t0 = tg.time(k), t1 = t0 + eps;
    if (t1 > tg.horizon() * (1.0 + 1e-12)) break;
    // Overlap of [t0, t1] with [t_s, t_{s+1}), normalized to unit total.
    std::vector<std::pair<std::size_t, double>> tw;
    double ttot = 0.0;
    for (std::size_t s = k; s < steps; ++s) {
      const double lo = std::max(t0, tg.time(s)), hi = std::min(t1, tg.time(s) + dt);
      if (hi <= lo) break;
      tw.emplace_back(s, hi - lo);
      ttot += hi - lo;
    }
    std::vector<double> smooth(n, 0.0), flux(n, 0.0);
    for (const auto& [s, w] : tw) {
      const double ws = (1.0 - eps) * w / ttot;
      const auto mu = curve.at(s);
      for (std::size_t z = 0; z < n; ++z) {
        if (mu[z] == 0.0) continue;
        const double mass = ws * mu[z];
        const double carried = mass * payload[s * n + z];
        for (const auto& [y, ky] : kernel[z]) {
          smooth[y] += ky * mass;
          flux[y] += ky * carried;
        }
      }
    }
    std::vector<double> dens(n), u(n);
    for (std::size_t y = 0; y < n; ++y) {
      dens[y] = eps * phi[y] + smooth[y];
      u[y] = flux[y] / dens[y];
    }
    out.time_index.push_back(k);
    out.density.push_back(std::move(dens));
    out.payload.push_back(std::move(u));
  }
  if (out.time_index.empty()) throw ValidationError("mollify_curve: no time node admits the window");
  return out;
}

bool subprob_jensen_check(const std::function<double(double)>& phi, std::span<const double> xi,
                          std::span<const double> omega) {
  if (xi.size() != omega.size()) throw DimensionError("subprob_jensen_check: size mismatch");
  double mass = 0.0, mean = 0.0, rhs = 0.0;
  for (std::size_t i = 0; i < xi.size(); ++i) {
    if (!(omega[i] >= 0.0)) throw ValidationError("subprob_jensen_check: negative weight");
    if (!(xi[i] >= 0.0)) throw ValidationError("subprob_jensen_check: samples must be nonnegative");
    mass += omega[i];
    mean += omega[i] * xi[i];
    rhs += omega[i] * phi(xi[i]);
  }
  if (mass > 1.0 + tol::kJensen) throw ValidationError("subprob_jensen_check: weights exceed a sub-probability");
  return phi(mean) <= rhs + tol::kJensen * (1.0 + std::abs(rhs));
}

}  // namespace mfg
