#include "mfg/fpk.hpp"
#include "mfg/particles.hpp"
#include "mfg/transport.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

using namespace mfg;

namespace {

SVec vec(double x) {
  SVec v(1);
  v(0) = x;
  return v;
}

SMat mat(double x) {
  SMat m(1, 1);
  m(0, 0) = x;
  return m;
}

LyapunovData quadratic_lyapunov() {
  LyapunovData ly;
  ly.v = [](const SVec& x) { return 1.0 + x.squaredNorm(); };
  ly.grad_v = [](const SVec& x) -> SVec { return 2.0 * x; };
  ly.hess_v = [](const SVec& x) -> SMat { return 2.0 * SMat::Identity(x.size(), x.size()); };
  ly.w = [](const SVec& x) { return x.norm(); };
  ly.h = [](double v) { return v * v; };
  return ly;
}

CoefficientSet make_1d(double a, std::function<double(double)> b, double fval = 0.0, double gval = 0.0) {
  CoefficientRules r;
  r.a = [a](const SVec&, std::size_t, const Environment&) { return mat(a); };
  r.b = [b](const SVec& x, std::size_t, const Environment&) { return vec(b(x(0))); };
  r.q = [](const SVec&, std::size_t, const Environment&) { return mat(1.0); };
  r.f = [fval](const SVec&, const SVec&, std::size_t, const Environment&) { return fval; };
  r.g = [gval](const SVec&, const Environment&) { return gval; };
  return CoefficientSet("particles", 1, r, ControlSet::box({-1.0}, {1.0}, 3), quadratic_lyapunov(),
                        DependenceMode::kNone);
}

MeasureCurve env(const StateGrid& g, const TimeGrid& t) {
  return MeasureCurve::constant(g, t, point_mass(g, SVec::Zero(g.dim())));
}

ControlField zero(const StateGrid& g, const TimeGrid& t) { return ControlField::constant(g, t, SVec::Zero(1)); }

// Empirical law of `count` independent draws from w (inverse CDF on the same counter stream
// family), the sampling floor a perfect particle method cannot beat.
std::vector<double> resample(std::span<const double> w, std::size_t count, std::uint64_t seed) {
  std::vector<double> cdf(w.size()), out(w.size(), 0.0);
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) cdf[i] = (acc += w[i]);
  for (std::size_t p = 0; p < count; ++p) {
    const double u = counter_draw(seed, p, 7u).uniform[1] * acc;
    const auto i = std::min<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin(), w.size() - 1);
    out[i] += 1.0 / static_cast<double>(count);
  }
  return out;
}

}  // namespace

TEST(Philox, KnownAnswer) {
  const auto r = philox4x32({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(r[0], 0x6627e8d5u);
  EXPECT_EQ(r[1], 0xe169c58du);
  EXPECT_EQ(r[2], 0xbc57ac4cu);
  EXPECT_EQ(r[3], 0x9b00dbd8u);
  const auto s = philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
  EXPECT_EQ(s[0], 0x408f276du);
  EXPECT_EQ(s[1], 0x41c83b0eu);
  EXPECT_EQ(s[2], 0xa20bc7c6u);
  EXPECT_EQ(s[3], 0x6d5451fdu);
}

TEST(Philox, NormalMoments) {
  double m = 0.0, m2 = 0.0, u = 0.0;
  const int n = 200000;
  for (int p = 0; p < n / 2; ++p) {
    const auto d = counter_draw(42, static_cast<std::uint64_t>(p), 3);
    for (double z : d.normal) {
      m += z;
      m2 += z * z;
    }
    u += d.uniform[0] + d.uniform[1];
  }
  EXPECT_NEAR(m / n, 0.0, 4.0 / std::sqrt(n));
  EXPECT_NEAR(m2 / n, 1.0, 4.0 * std::sqrt(2.0 / n));
  EXPECT_NEAR(u / n, 0.5, 4.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST(Particles, DeterministicTransport) {
  const StateGrid g(1, 3.0, 61);
  const TimeGrid t(1.0, 10);
  const auto cs = make_1d(0.0, [](double) { return 1.0; });
  const auto p0 = point_mass(g, vec(0.0));
  ParticleOptions o;
  o.count = 50;
  o.keep_paths = true;
  const auto ens = simulate(cs, env(g, t), zero(g, t), p0, o);
  for (std::size_t p = 0; p < o.count; ++p) {
    for (std::size_t k = 0; k < t.nodes(); ++k) EXPECT_NEAR(ens.position(p, k)(0), t.time(k), 1e-12);
  }
  EXPECT_NEAR(ens.variance.back(), 0.0, 1e-14);
}

TEST(Particles, ReflectsAtBoundary) {
  const StateGrid g(1, 1.0, 21);
  const TimeGrid t(1.5, 15);
  const auto cs = make_1d(0.0, [](double) { return 1.0; });
  ParticleOptions o;
  o.count = 3;
  o.keep_paths = true;
  const auto ens = simulate(cs, env(g, t), zero(g, t), point_mass(g, vec(0.0)), o);
  // Constant outward drift pins the reflected path within one step of the wall.
  for (std::size_t k = 10; k < t.nodes(); ++k) {
    EXPECT_LE(ens.position(0, k)(0), 1.0);
    EXPECT_GE(ens.position(0, k)(0), 1.0 - t.dt() - 1e-12);
  }
}

TEST(Particles, DivergenceAborts) {
  const StateGrid g(1, 1.0, 21);
  const TimeGrid t(1.0, 2);
  const auto cs = make_1d(0.0, [](double) { return 100.0; });
  ParticleOptions o;
  o.count = 1;
  EXPECT_THROW(simulate(cs, env(g, t), zero(g, t), point_mass(g, vec(0.0)), o), NumericalError);
}

TEST(Particles, HeatVarianceWithinThreeStandardErrors) {
  const StateGrid g(1, 6.0, 241);
  const TimeGrid t(1.0, 50);
  const auto cs = make_1d(0.5, [](double) { return 0.0; });
  ParticleOptions o;
  o.count = 100000;
  o.seed = 11;
  const auto ens = simulate(cs, env(g, t), zero(g, t), point_mass(g, vec(0.0)), o);
  for (std::size_t k : {10u, 25u, 50u}) {
    const double exact = 2.0 * 0.5 * t.time(k);
    const double se = std::sqrt(2.0) * exact / std::sqrt(static_cast<double>(o.count));
    EXPECT_NEAR(ens.variance[k], exact, 3.0 * se) << "k=" << k;
  }
}

TEST(Particles, SameSeedBitwiseIdentical) {
  const StateGrid g(1, 3.0, 61);
  const TimeGrid t(0.5, 20);
  const auto cs = make_1d(0.3, [](double x) { return -x; }, 1.0, 0.0);
  const auto nu = discrete_gaussian(g, vec(0.5), 0.2);
  ParticleOptions o;
  o.count = 2000;
  o.seed = 99;
  o.keep_paths = true;
  const auto a = simulate(cs, env(g, t), zero(g, t), nu, o);
  const auto b = simulate(cs, env(g, t), zero(g, t), nu, o);
  EXPECT_EQ(a.paths, b.paths);
  EXPECT_EQ(a.binned, b.binned);
  EXPECT_EQ(a.variance, b.variance);
  EXPECT_EQ(a.cost, b.cost);
  o.seed = 100;
  const auto c = simulate(cs, env(g, t), zero(g, t), nu, o);
  EXPECT_NE(a.paths, c.paths);
}

TEST(Particles, GapNearSamplingFloor) {
  const StateGrid g(1, 3.0, 121);
  const TimeGrid t(0.2, 200);
  const auto cs = make_1d(0.5, [](double) { return 0.0; });
  const auto nu = point_mass(g, vec(0.0));
  const auto mu = env(g, t);
  const auto grid = solve_fpk(cs, mu, zero(g, t), nu, FpkOptions{});
  ParticleOptions o;
  o.count = 20000;
  o.seed = 5;
  const auto ens = simulate(cs, mu, zero(g, t), nu, o);
  const auto gaps = superposition_gap(ens, grid.solution);
  const std::size_t k = t.steps();
  const auto floor_law = resample(grid.solution.at(k), o.count, 77);
  const double floor = wasserstein1_1d(floor_law, grid.solution.at(k), g);
  // Binning to nearest nodes adds at most dx / 2.
  EXPECT_LE(gaps[k], 3.0 * floor + 0.5 * g.spacing());
  EXPECT_NEAR(gaps[0], 0.0, 1e-12);
}

TEST(Particles, MismatchedDriftIsDetected) {
  const StateGrid g(1, 3.0, 121);
  const TimeGrid t(0.5, 200);
  const auto mu = env(g, t);
  const auto nu = point_mass(g, vec(0.0));
  const auto grid = solve_fpk(make_1d(0.2, [](double) { return 0.0; }), mu, zero(g, t), nu, FpkOptions{});
  ParticleOptions o;
  o.count = 5000;
  const auto ens = simulate(make_1d(0.2, [](double) { return 1.0; }), mu, zero(g, t), nu, o);
  const auto gaps = superposition_gap(ens, grid.solution);
  EXPECT_GT(gaps.back(), 0.4);
}

TEST(Particles, CostOfConstants) {
  const StateGrid g(1, 2.0, 41);
  const TimeGrid t(0.7, 7);
  const auto nu = discrete_gaussian(g, vec(0.0), 0.3);
  ParticleOptions o;
  o.count = 100;
  o.keep_paths = true;
  const auto terminal = simulate(make_1d(0.2, [](double) { return 0.0; }, 0.0, 1.0), env(g, t), zero(g, t), nu, o);
  EXPECT_NEAR(cost_estimate(terminal).mean, 1.0, 1e-12);
  EXPECT_NEAR(cost_estimate(terminal).standard_error, 0.0, 1e-12);
  const auto running = simulate(make_1d(0.2, [](double) { return 0.0; }, 1.0, 0.0), env(g, t), zero(g, t), nu, o);
  EXPECT_NEAR(cost_estimate(running).mean, 0.7, 1e-12);
  // Re-evaluating stored paths under the other cost swaps the answers.
  EXPECT_NEAR(cost_estimate(terminal, make_1d(0.2, [](double) { return 0.0; }, 1.0, 0.0), env(g, t), zero(g, t)).mean,
              0.7, 1e-12);
}

TEST(Particles, OrnsteinUhlenbeckMeanWeakOrder) {
  // Euler-Maruyama mean is exactly (1 - dt)^K x0 in expectation; halving dt moves it toward e^{-T}.
  const StateGrid g(1, 4.0, 161);
  const auto nu = point_mass(g, vec(1.0));
  const auto cs = make_1d(0.1, [](double x) { return -x; });
  ParticleOptions o;
  o.count = 40000;
  double errs[2];
  for (int level = 0; level < 2; ++level) {
    const TimeGrid t(1.0, level == 0 ? 4 : 8);
    const auto ens = simulate(cs, env(g, t), zero(g, t), nu, o);
    const double se = std::sqrt(ens.variance.back() / static_cast<double>(o.count));
    const double em = std::pow(1.0 - t.dt(), static_cast<double>(t.steps()));
    EXPECT_NEAR(ens.mean.back()(0), em, 4.0 * se);
    errs[level] = std::abs(em - std::exp(-1.0));
  }
  EXPECT_NEAR(errs[0] / errs[1], 2.0, 0.3);
}

TEST(Particles, InputValidation) {
  const StateGrid g(1, 1.0, 11);
  const TimeGrid t(1.0, 4);
  const auto cs = make_1d(0.1, [](double) { return 0.0; });
  ParticleOptions o;
  o.count = 0;
  EXPECT_THROW(simulate(cs, env(g, t), zero(g, t), point_mass(g, vec(0.0)), o), ValidationError);
  o.count = 10;
  std::vector<double> short_nu(5, 0.2);
  EXPECT_THROW(simulate(cs, env(g, t), zero(g, t), short_nu, o), DimensionError);
  EXPECT_THROW(simulate(cs, env(g, t), ControlField::constant(g, t, vec(3.0)), point_mass(g, vec(0.0)), o),
               ValidationError);
  const auto ens = simulate(cs, env(g, t), zero(g, t), point_mass(g, vec(0.0)), o);
  EXPECT_THROW(ens.position(0, 0), ValidationError);
  std::ostringstream os;
  EXPECT_THROW(write_paths_binary(os, ens), ValidationError);
}

TEST(Particles, CsvAndBinaryWriters) {
  const StateGrid g(1, 1.0, 11);
  const TimeGrid t(1.0, 4);
  ParticleOptions o;
  o.count = 3;
  o.keep_paths = true;
  const auto ens = simulate(make_1d(0.1, [](double) { return 0.0; }), env(g, t), zero(g, t),
                            point_mass(g, vec(0.0)), o);
  std::ostringstream csv;
  write_ensemble_csv(csv, ens, std::vector<double>(t.nodes(), 0.0));
  const std::string text = csv.str();
  EXPECT_EQ(text.substr(0, 18), "t,mean,var,w1_gap\n");
  EXPECT_EQ(std::ranges::count(text, '\n'), 6);
  std::ostringstream bin;
  write_paths_binary(bin, ens);
  EXPECT_EQ(bin.str().size(), 3u * 5u * 3u * sizeof(double));
}
