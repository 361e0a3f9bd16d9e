#include "mfg/particles.hpp"

#include "mfg/transport.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>

namespace mfg {

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> c, std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    c = {hi1 ^ c[1] ^ key[0], lo1, hi0 ^ c[3] ^ key[1], lo0};
    key[0] += kW0;
    key[1] += kW1;
  }
  return c;
}

namespace {

// 53-bit uniform in (0, 1) from two words.
double to_unit(std::uint32_t a, std::uint32_t b) {
  const std::uint64_t bits = (static_cast<std::uint64_t>(a >> 5) << 26) | (b >> 6);
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

constexpr std::uint32_t kInitialStep = 0xFFFFFFFFu;

void reflect(SVec& x, double half_width) {
  for (Eigen::Index c = 0; c < x.size(); ++c) {
    if (!std::isfinite(x(c)) || std::abs(x(c)) > 10.0 * half_width) {
      throw NumericalError("particle diverged: |x| exceeds 10 L");
    }
    for (int pass = 0; pass < 64 && std::abs(x(c)) > half_width; ++pass) {
      x(c) = x(c) > half_width ? 2.0 * half_width - x(c) : -2.0 * half_width - x(c);
    }
  }
}

}  // namespace

CounterDraw counter_draw(std::uint64_t seed, std::uint64_t stream, std::uint32_t step) {
  const auto r = philox4x32({static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32), step, 0u},
                            {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
  CounterDraw d;
  d.uniform = {to_unit(r[0], r[1]), to_unit(r[2], r[3])};
  const double rad = std::sqrt(-2.0 * std::log(d.uniform[0]));
  const double ang = 2.0 * std::numbers::pi * d.uniform[1];
  d.normal = {rad * std::cos(ang), rad * std::sin(ang)};
  return d;
}

SVec ParticleEnsemble::position(std::size_t particle, std::size_t k) const {
  if (paths.empty()) throw ValidationError("ensemble has no stored paths (simulate with keep_paths)");
  const int d = grid.dim();
  const std::size_t base = (particle * times.nodes() + k) * static_cast<std::size_t>(d);
  SVec x(d);
  for (int c = 0; c < d; ++c) x(c) = paths.at(base + static_cast<std::size_t>(c));
  return x;
}

ParticleEnsemble simulate(const CoefficientSet& coeffs, const MeasureCurve& mu, const ControlField& u,
                          std::span<const double> nu, const ParticleOptions& opts) {
  const StateGrid& g = mu.grid();
  const TimeGrid& t = mu.times();
  if (opts.count == 0) throw ValidationError("particle count must be positive");
  if (nu.size() != g.size()) throw DimensionError("initial weights do not match the grid");
  require_probability(nu, "initial distribution");
  if (!(u.grid() == g) || !(u.times() == t) || u.control_dim() != coeffs.control_dim()) {
    throw DimensionError("control field does not match the curve or the control set");
  }
  u.require_in(coeffs.controls());
  const auto fc = coeffs.freeze(mu);
  const int d = g.dim();
  const std::size_t nodes = t.nodes(), n = g.size();
  const double dt = t.dt(), sdt = std::sqrt(dt), lw = g.half_width();

  std::vector<double> cdf(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) cdf[i] = (acc += std::max(nu[i], 0.0));

  ParticleEnsemble ens{g, t, opts.count, opts.seed, {}, {}, {}, {}, {}};
  ens.binned.assign(nodes, std::vector<double>(n, 0.0));
  ens.cost.resize(opts.count);
  if (opts.keep_paths) ens.paths.resize(opts.count * nodes * static_cast<std::size_t>(d));
  std::vector<SVec> sum(nodes, SVec::Zero(d));
  std::vector<double> sum_sq(nodes, 0.0);
  const double unit = 1.0 / static_cast<double>(opts.count);

  for (std::size_t p = 0; p < opts.count; ++p) {
    const double draw = counter_draw(opts.seed, p, kInitialStep).uniform[0] * acc;
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), draw);
    SVec x = g.node(std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), n - 1));
    double cost = 0.0;
    for (std::size_t k = 0; k < nodes; ++k) {
      const std::size_t near = g.nearest(x);
      ens.binned[k][near] += unit;
      sum[k] += x;
      sum_sq[k] += x.squaredNorm();
      if (opts.keep_paths) {
        for (int c = 0; c < d; ++c) ens.paths[(p * nodes + k) * static_cast<std::size_t>(d) + static_cast<std::size_t>(c)] = x(c);
      }
      if (k + 1 == nodes) break;
      const SVec uk = u.at(k, near);
      cost += dt * fc.f(uk, x, k);
      const SVec drift = fc.b(x, k) + fc.q(x, k) * uk;
      const SMat a = fc.a(x, k);
      const CounterDraw z = counter_draw(opts.seed, p, static_cast<std::uint32_t>(k));
      SVec noise(d);
      for (int c = 0; c < d; ++c) noise(c) = z.normal[static_cast<std::size_t>(c)];
      const SMat root = psd_sqrt(2.0 * a);
      x += drift * dt + sdt * (root * noise);
      reflect(x, lw);
    }
    ens.cost[p] = cost + fc.g(x);
  }
  for (std::size_t k = 0; k < nodes; ++k) {
    const SVec m = sum[k] * unit;
    ens.mean.push_back(m);
    ens.variance.push_back(std::max(0.0, sum_sq[k] * unit - m.squaredNorm()));
  }
  return ens;
}

std::vector<double> superposition_gap(const ParticleEnsemble& ensemble, const MeasureCurve& grid_solution) {
  const StateGrid& g = grid_solution.grid();
  if (!(ensemble.grid == g) || !(ensemble.times == grid_solution.times())) {
    throw DimensionError("superposition_gap: ensemble and curve grids differ");
  }
  if (g.dim() == 2 && g.size() > 225) {
    throw ValidationError("superposition_gap: 2D transport LP is limited to grids of at most 15 x 15 nodes");
  }
  std::vector<double> gaps;
  for (std::size_t k = 0; k < ensemble.times.nodes(); ++k) {
    const auto& emp = ensemble.binned[k];
    const auto sol = grid_solution.at(k);
    gaps.push_back(g.dim() == 1 ? wasserstein1_1d(emp, sol, g) : wasserstein_p(emp, sol, g, 1).value);
  }
  return gaps;
}

namespace {

CostEstimate summarize(const std::vector<double>& samples) {
  CostEstimate ce;
  const double n = static_cast<double>(samples.size());
  double mean = 0.0;
  for (double c : samples) mean += c;
  mean /= n;
  double ss = 0.0;
  for (double c : samples) ss += (c - mean) * (c - mean);
  ce.mean = mean;
  ce.standard_error = samples.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
  return ce;
}

}  // namespace

CostEstimate cost_estimate(const ParticleEnsemble& ensemble) { return summarize(ensemble.cost); }

CostEstimate cost_estimate(const ParticleEnsemble& ensemble, const CoefficientSet& coeffs, const MeasureCurve& mu,
                           const ControlField& u) {
  if (ensemble.paths.empty()) throw ValidationError("cost_estimate: ensemble has no stored paths");
  if (!(u.grid() == ensemble.grid) || !(u.times() == ensemble.times)) {
    throw DimensionError("cost_estimate: control field grids differ from the ensemble's");
  }
  const auto fc = coeffs.freeze(mu);
  const TimeGrid& t = ensemble.times;
  std::vector<double> samples(ensemble.count);
  for (std::size_t p = 0; p < ensemble.count; ++p) {
    double c = 0.0;
    for (std::size_t k = 0; k < t.steps(); ++k) {
      const SVec x = ensemble.position(p, k);
      c += t.dt() * fc.f(u.at(k, ensemble.grid.nearest(x)), x, k);
    }
    samples[p] = c + fc.g(ensemble.position(p, t.steps()));
  }
  return summarize(samples);
}

void write_ensemble_csv(std::ostream& os, const ParticleEnsemble& ensemble, std::span<const double> gaps) {
  const bool two = ensemble.grid.dim() == 2;
  os << (two ? "t,mean,mean2,var,w1_gap\n" : "t,mean,var,w1_gap\n");
  os << std::setprecision(17);
  for (std::size_t k = 0; k < ensemble.times.nodes(); ++k) {
    os << ensemble.times.time(k) << "," << ensemble.mean[k](0);
    if (two) os << "," << ensemble.mean[k](1);
    os << "," << ensemble.variance[k] << "," << (k < gaps.size() ? gaps[k] : 0.0) << "\n";
  }
}

void write_paths_binary(std::ostream& os, const ParticleEnsemble& ensemble) {
  if (ensemble.paths.empty()) throw ValidationError("write_paths_binary: ensemble has no stored paths");
  const int d = ensemble.grid.dim();
  for (std::size_t p = 0; p < ensemble.count; ++p) {
    for (std::size_t k = 0; k < ensemble.times.nodes(); ++k) {
      double row[4] = {static_cast<double>(p), ensemble.times.time(k), 0.0, 0.0};
      const SVec x = ensemble.position(p, k);
      for (int c = 0; c < d; ++c) row[2 + c] = x(c);
      os.write(reinterpret_cast<const char*>(row), static_cast<std::streamsize>(sizeof(double) * (2 + d)));
    }
  }
}

}  // namespace mfg
