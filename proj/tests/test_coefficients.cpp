#include "mfg/catalog.hpp"
#include "mfg/coefficients.hpp"
#include "mfg/hypotheses.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace mfg;

namespace {

SVec scalar(double x) {
  SVec v(1);
  v(0) = x;
  return v;
}

SMat mat1(double x) {
  SMat m(1, 1);
  m(0, 0) = x;
  return m;
}

// V = 1 + x^2, W = |x|, h = v^2 in 1D with user-supplied rules.
LyapunovData quadratic_lyapunov(double c_l) {
  LyapunovData ly;
  ly.v = [](const SVec& x) { return 1.0 + x.squaredNorm(); };
  ly.grad_v = [](const SVec& x) -> SVec { return 2.0 * x; };
  ly.hess_v = [](const SVec& x) -> SMat { return 2.0 * SMat::Identity(x.size(), x.size()); };
  ly.w = [](const SVec& x) { return x.norm(); };
  ly.h = [](double v) { return v * v; };
  ly.c_l = c_l;
  return ly;
}

CoefficientRules zero_rules() {
  CoefficientRules r;
  r.a = [](const SVec&, std::size_t, const Environment&) { return mat1(0.0); };
  r.b = [](const SVec&, std::size_t, const Environment&) { return scalar(0.0); };
  r.q = [](const SVec&, std::size_t, const Environment&) { return mat1(0.0); };
  r.f = [](const SVec& u, const SVec&, std::size_t, const Environment&) { return u.squaredNorm(); };
  r.g = [](const SVec&, const Environment&) { return 0.0; };
  return r;
}

ControlSet unit_controls(int dim = 1) {
  return dim == 1 ? ControlSet::box({-1.0}, {1.0}, 11) : ControlSet::ball(2, 1.0, 9);
}

MeasureCurve gaussian_curve(const StateGrid& g, const TimeGrid& t) {
  return MeasureCurve::constant(g, t, discrete_gaussian(g, SVec::Zero(g.dim()), 0.5));
}

const InequalityCheck& find_check(const HypothesisReport& rep, const std::string& prefix) {
  for (const auto& c : rep.checks) {
    if (c.name.rfind(prefix, 0) == 0) return c;
  }
  throw std::runtime_error("no check named " + prefix);
}

}  // namespace

TEST(Legendre, QuadraticClosedForm) {
  const auto h = [](double v) { return 2.0 * v * v; };
  EXPECT_NEAR(legendre(h, 1.0, 16.0), 0.125, 1e-12);
  for (double p : {0.3, 1.7, 5.0, 11.0}) EXPECT_NEAR(legendre(h, p, 16.0), p * p / 8.0, 1e-10 * (1 + p * p));
}

TEST(Legendre, ZeroSlope) {
  EXPECT_EQ(legendre([](double v) { return v * v; }, 0.0, 1.0), 0.0);
  EXPECT_EQ(legendre([](double v) { return std::exp(v) - 1.0 - v; }, 0.0, 5.0), 0.0);
}

TEST(Legendre, QuarticAgainstDenseGrid) {
  const auto h = [](double v) { return v * v * v * v; };
  double oracle = 0.0;
  for (int i = 0; i <= 2000000; ++i) {
    const double v = 2.0 * i / 2000000.0;
    oracle = std::max(oracle, 2.0 * v - h(v));
  }
  EXPECT_NEAR(legendre(h, 2.0, 4.0), oracle, 1e-10);
  EXPECT_NEAR(oracle, 1.5 * std::pow(0.5, 1.0 / 3.0), 1e-10);  // maximizer v = (1/2)^{1/3}
}

TEST(Legendre, BoundTooSmall) {
  EXPECT_THROW(legendre([](double v) { return v * v; }, 10.0, 1.0), BoundTooSmallError);
  EXPECT_THROW(legendre([](double v) { return 1.0 + v * v; }, 1.0, 1.0), ValidationError);
}

TEST(Legendre, MonotoneAndConvexInP) {
  const auto h = [](double v) { return std::cosh(v) - 1.0; };
  std::vector<double> vals;
  for (int i = 0; i <= 200; ++i) vals.push_back(legendre(h, 0.05 * i, 64.0));
  for (std::size_t i = 1; i < vals.size(); ++i) EXPECT_GE(vals[i], vals[i - 1]);
  for (std::size_t i = 1; i + 1 < vals.size(); ++i) EXPECT_LE(vals[i], 0.5 * (vals[i - 1] + vals[i + 1]) + 1e-12);
}

TEST(Legendre, BiconjugateRecoversQuadratic) {
  const double c = 1.0;
  const auto h = [c](double v) { return c * v * v; };
  std::vector<double> ps, hs;
  for (int i = 0; i <= 2500; ++i) {
    ps.push_back(0.01 * i);
    hs.push_back(legendre(h, ps.back(), 64.0));
  }
  for (int i = 0; i <= 100; ++i) {
    const double v = 0.1 * i;
    double best = -1e300;
    for (std::size_t j = 0; j < ps.size(); ++j) best = std::max(best, ps[j] * v - hs[j]);
    EXPECT_NEAR(best, h(v), 1e-4) << "v = " << v;
  }
}

TEST(Lyapunov, HStarGrowsSearchBound) {
  LyapunovData ly = quadratic_lyapunov(1.0);
  ly.h_search_bound = 0.5;
  EXPECT_NEAR(ly.h_star(100.0), 2500.0, 1e-6);
}

TEST(Lyapunov, DerivedConstants) {
  LyapunovData ly = quadratic_lyapunov(0.7);
  EXPECT_DOUBLE_EQ(ly.big_m(), 3.5);
  EXPECT_DOUBLE_EQ(ly.gamma(2.0), 0.25 * std::exp(-1.4));
}

TEST(Lyapunov, ValidateRejectsBadData) {
  const StateGrid g(1, 2.0, 21);
  EXPECT_NO_THROW(quadratic_lyapunov(1.0).validate(g));
  auto big_w = quadratic_lyapunov(1.0);
  big_w.w = [](const SVec& x) { return 2.0 + x.squaredNorm(); };
  EXPECT_THROW(big_w.validate(g), ValidationError);
  auto concave = quadratic_lyapunov(1.0);
  concave.h = [](double v) { return std::sqrt(v); };
  EXPECT_THROW(concave.validate(g), ValidationError);
  auto ch = quadratic_lyapunov(1.0);
  ch.c_h = 1.0;
  EXPECT_THROW(ch.validate(g), ValidationError);
}

TEST(HInverse, Examples) {
  const auto sq = [](double v) { return v * v; };
  EXPECT_NEAR(h_inverse(sq, 4.0), 2.0, 1e-12);
  EXPECT_EQ(h_inverse(sq, 0.0), 0.0);
  const auto quad = [](double v) { return v * v + v; };
  EXPECT_NEAR(h_inverse(quad, 6.0), 2.0, 1e-12);
  EXPECT_THROW(h_inverse(sq, -1.0), ValidationError);
}

TEST(HInverse, RoundTrip) {
  const auto h = [](double v) { return std::exp(v) - 1.0; };
  for (double y : {1e-6, 0.5, 3.0, 1e3, 1e8}) EXPECT_NEAR(h(h_inverse(h, y)), y, 1e-10 * (1.0 + y));
}

namespace {

// Best mixture of at most two grid points: sup of R^{-1} sum W eta over eta with sum V eta <= R.
double beta_pairs_oracle(const std::vector<double>& v, const std::vector<double>& w, double r) {
  double best = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] <= r) best = std::max(best, w[i]);
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (v[i] > r || v[j] <= r) continue;
      const double lam = (v[j] - r) / (v[j] - v[i]);  // weight on i so that the budget binds
      best = std::max(best, lam * w[i] + (1.0 - lam) * w[j]);
    }
  }
  return best / r;
}

}  // namespace

TEST(BetaVW, ZeroW) {
  const std::vector<double> v{1.0, 2.0, 5.0}, w{0.0, 0.0, 0.0};
  EXPECT_EQ(beta_vw(v, w, 3.0), 0.0);
}

TEST(BetaVW, QuadraticLyapunovAtFive) {
  const StateGrid g(1, 10.0, 201);  // x = 2 is a node
  const auto v = std::vector<double>([&] {
    std::vector<double> o;
    for (std::size_t i = 0; i < g.size(); ++i) o.push_back(1.0 + g.node(i).squaredNorm());
    return o;
  }());
  std::vector<double> w;
  for (std::size_t i = 0; i < g.size(); ++i) w.push_back(g.node(i).norm());
  EXPECT_NEAR(beta_vw(v, w, 5.0), 0.4, 1e-12);
  EXPECT_NEAR(beta_vw(v, w, 5.0), beta_pairs_oracle(v, w, 5.0), 1e-12);
}

TEST(BetaVW, RandomAgainstPairsOracle) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> v(12), w(12);
    for (std::size_t i = 0; i < v.size(); ++i) {
      v[i] = 0.5 + 10.0 * u(rng);
      w[i] = v[i] * u(rng);
    }
    const double vmin = *std::min_element(v.begin(), v.end());
    const double r = vmin + 8.0 * u(rng);
    EXPECT_NEAR(beta_vw(v, w, r), beta_pairs_oracle(v, w, r), 1e-9);
  }
}

TEST(BetaVW, EqualFieldsGiveOneAtANode) {
  const std::vector<double> v{1.0, 3.0, 7.0};
  EXPECT_NEAR(beta_vw(v, v, 3.0), 1.0, 1e-12);
  EXPECT_NEAR(beta_vw(v, v, 5.0), beta_pairs_oracle(v, v, 5.0), 1e-12);
}

TEST(BetaVW, NonincreasingLadderForQuadratic) {
  // On [-10, 10] the largest W is 10, so beta(256) = 10/256 once R exceeds max V.
  const StateGrid g(1, 10.0, 201);
  std::vector<double> v, w;
  for (std::size_t i = 0; i < g.size(); ++i) {
    v.push_back(1.0 + g.node(i).squaredNorm());
    w.push_back(g.node(i).norm());
  }
  std::vector<double> ladder;
  for (double r = 2.0; r <= 256.0; r *= 2.0) ladder.push_back(beta_vw(v, w, r));
  for (std::size_t i = 1; i < ladder.size(); ++i) EXPECT_LE(ladder[i], ladder[i - 1] + 1e-12);
  EXPECT_NEAR(ladder.front(), 0.5, 1e-12);
  EXPECT_NEAR(ladder.back(), 10.0 / 256.0, 1e-12);
  EXPECT_LT(ladder.back(), ladder.front() / 10.0);
}

TEST(BetaVW, Errors) {
  const std::vector<double> v{1.0, 2.0}, w{0.5, 3.0};
  EXPECT_THROW(beta_vw(v, w, 2.0), ValidationError);
  const std::vector<double> w_ok{0.5, 1.0};
  EXPECT_THROW(beta_vw(v, w_ok, 0.5), ValidationError);
  EXPECT_THROW(beta_vw(v, std::vector<double>{0.5}, 2.0), DimensionError);
}

TEST(PsdSqrt, SquaresBackAndClamps) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    SMat b(2, 2);
    b << n(rng), n(rng), n(rng), n(rng);
    const SMat a = b * b.transpose();
    const SMat s = psd_sqrt(a);
    EXPECT_LT((s * s - a).cwiseAbs().maxCoeff(), 1e-10 * (1.0 + a.norm()));
    EXPECT_LT((s - s.transpose()).cwiseAbs().maxCoeff(), 1e-12);
  }
  SMat tiny(2, 2);
  tiny << 1.0, 0.0, 0.0, -1e-13;
  EXPECT_NEAR(psd_sqrt(tiny)(1, 1), 0.0, 1e-15);
  SMat neg(2, 2);
  neg << 1.0, 0.0, 0.0, -1e-3;
  EXPECT_THROW(psd_sqrt(neg), ValidationError);
  SMat asym(2, 2);
  asym << 1.0, 0.5, 0.0, 1.0;
  EXPECT_THROW(psd_sqrt(asym), ValidationError);
  EXPECT_THROW(psd_sqrt(mat1(-1.0)), ValidationError);
  EXPECT_DOUBLE_EQ(psd_sqrt(mat1(4.0))(0, 0), 2.0);
}

TEST(OperatorNorm, Examples) {
  SMat m(2, 2);
  m << 3.0, 0.0, 0.0, -4.0;
  EXPECT_NEAR(operator_norm(m), 4.0, 1e-12);
  SMat col(2, 1);
  col << 3.0, 4.0;
  EXPECT_NEAR(operator_norm(col), 5.0, 1e-12);
}

class HypothesisTest : public ::testing::Test {
 protected:
  StateGrid g{1, 4.0, 41};
  TimeGrid t{1.0, 4};
  MeasureCurve mu = gaussian_curve(g, t);
};

TEST_F(HypothesisTest, ZeroDynamicsPassH21) {
  const CoefficientSet cs("zero", 1, zero_rules(), unit_controls(), quadratic_lyapunov(0.01), DependenceMode::kNone);
  const auto rep = check_h2_1(cs, mu, default_sample(cs, mu));
  EXPECT_TRUE(rep.pass()) << rep.text();
  EXPECT_EQ(rep.checks[0].smallest_constant, 0.0);
}

TEST_F(HypothesisTest, CubicDriftFailsH21AtTheBoundary) {
  auto rules = zero_rules();
  rules.b = [](const SVec& x, std::size_t, const Environment&) { return scalar(std::pow(x(0), 3)); };
  const CoefficientSet cs("cubic", 1, rules, unit_controls(), quadratic_lyapunov(1.0), DependenceMode::kNone);
  const auto rep = check_h2_1(cs, mu, default_sample(cs, mu));
  EXPECT_FALSE(rep.pass());
  EXPECT_NE(rep.checks[0].worst_where.find("4) k="), std::string::npos) << rep.checks[0].worst_where;
  // 2 x^4 at x = 4 against 1 + 16 + int V + sup int W
  EXPECT_GT(rep.checks[0].worst_excess, 400.0);
  EXPECT_FALSE(rep.csv().empty());
}

TEST_F(HypothesisTest, ConstantCoefficientsPassH22H23) {
  auto rules = zero_rules();
  rules.a = [](const SVec&, std::size_t, const Environment&) { return mat1(0.3); };
  rules.b = [](const SVec&, std::size_t, const Environment&) { return scalar(0.2); };
  rules.q = [](const SVec&, std::size_t, const Environment&) { return mat1(1.0); };
  auto ly = quadratic_lyapunov(1.0);
  ly.c1 = [](const MeasureCurve&) { return 0.01; };
  ly.c2 = [](const MeasureCurve&) { return 0.3 + 0.2 + 0.25; };
  const CoefficientSet cs("const", 1, rules, unit_controls(), ly, DependenceMode::kNone);
  const auto rep = check_h2_2_h2_3(cs, mu, default_sample(cs, mu));
  EXPECT_TRUE(rep.pass()) << rep.text();
  EXPECT_EQ(find_check(rep, "tr(").smallest_constant, 0.0);
}

TEST_F(HypothesisTest, QuadraticDiffusionPairBound) {
  // A = x^2: trace((|x| - |y|)^2) <= |x - y|^2 and 1 + V(x) + V(y) >= 3, so C1 = 1/3 suffices.
  auto rules = zero_rules();
  rules.a = [](const SVec& x, std::size_t, const Environment&) { return mat1(x(0) * x(0)); };
  auto ly = quadratic_lyapunov(1.0);
  ly.c1 = [](const MeasureCurve&) { return 1.0; };
  ly.c2 = [](const MeasureCurve&) { return 1.0; };
  const CoefficientSet cs("xsq", 1, rules, unit_controls(), ly, DependenceMode::kNone);
  const auto sample = default_sample(cs, mu);
  const auto rep = check_h2_2_h2_3(cs, mu, sample);
  const auto& mono = find_check(rep, "tr(");
  EXPECT_TRUE(mono.pass);
  double oracle = 0.0;
  for (std::size_t s : sample.nodes) {
    for (std::size_t r : sample.nodes) {
      const double x = g.node(s)(0), y = g.node(r)(0);
      if (x == y) continue;
      const double lhs = std::pow(std::abs(x) - std::abs(y), 2);
      oracle = std::max(oracle, lhs / ((3.0 + x * x + y * y) * (x - y) * (x - y)));
    }
  }
  EXPECT_NEAR(mono.smallest_constant, oracle, 1e-12);
  EXPECT_LE(oracle, 1.0 / 3.0 + 1e-12);
}

TEST_F(HypothesisTest, NonPsdDiffusionIsRejected) {
  auto rules = zero_rules();
  rules.a = [](const SVec&, std::size_t, const Environment&) { return mat1(-0.5); };
  const CoefficientSet cs("neg", 1, rules, unit_controls(), quadratic_lyapunov(1.0), DependenceMode::kNone);
  EXPECT_THROW(check_h2_2_h2_3(cs, mu, default_sample(cs, mu)), ValidationError);
  EXPECT_FALSE(check_h1(cs, mu, default_sample(cs, mu)).pass());
}

TEST_F(HypothesisTest, PureControlCostPassesH3) {
  auto ly = quadratic_lyapunov(1.0);
  ly.c_h = 1.0 + 1e-6;
  ly.c_f = 1e-3;
  ly.c_g = 1e-3;
  const CoefficientSet cs("hcost", 1, zero_rules(), unit_controls(), ly, DependenceMode::kNone);
  const auto rep = check_h3(cs, mu, default_sample(cs, mu));
  EXPECT_TRUE(rep.pass()) << rep.text();
}

TEST_F(HypothesisTest, ConcaveCostFailsConvexity) {
  auto rules = zero_rules();
  rules.f = [](const SVec& u, const SVec&, std::size_t, const Environment&) { return -u.squaredNorm(); };
  const CoefficientSet cs("concave", 1, rules, unit_controls(), quadratic_lyapunov(1.0), DependenceMode::kNone);
  const auto rep = check_h3(cs, mu, default_sample(cs, mu));
  EXPECT_FALSE(rep.pass());
  bool convexity_failed = false;
  for (const auto& c : rep.checks) {
    if (c.name.find("convex") != std::string::npos) convexity_failed = !c.pass;
  }
  EXPECT_TRUE(convexity_failed) << rep.text();
}

TEST_F(HypothesisTest, ReportText) {
  const CoefficientSet cs("zero", 1, zero_rules(), unit_controls(), quadratic_lyapunov(1.0), DependenceMode::kNone);
  const auto reports = check_all(cs, mu, default_sample(cs, mu));
  ASSERT_EQ(reports.size(), 4u);
  for (const auto& r : reports) EXPECT_NE(r.text().find("not a proof"), std::string::npos);
}

namespace {

struct CatalogCase {
  std::string name;
  int dim;
  Params params;
};

std::vector<CatalogCase> catalog_cases() {
  return {{"ex2.1", 1, {}},
          {"ex2.1", 2, {}},
          {"ex2.1", 1, {{"kappa", "0.5"}, {"theta", "1"}}},
          {"ex2.1", 1, {{"a", "1"}, {"beta", "1"}, {"q", "1"}, {"cost", "1"}}},
          {"ex2.2", 1, {}},
          {"ex2.2", 1, {{"m", "3"}, {"p", "2"}}},
          {"ex2.2", 2, {}},
          {"ex2.3", 1, {}},
          {"ex2.3", 2, {{"p", "1.5"}}},
          {"ex2.4", 1, {}},
          {"ex2.4", 1, {{"phi", "identity"}, {"zeta", "one"}}},
          {"ex2.4", 2, {{"zeta", "abs"}}}};
}

}  // namespace

TEST(Catalog, EveryEntryPassesItsOwnChecks) {
  for (const auto& c : catalog_cases()) {
    const StateGrid g(c.dim, 3.0, c.dim == 1 ? 61 : 21);
    const TimeGrid t(1.0, 5);
    const auto mu = gaussian_curve(g, t);
    const auto cs = example_catalog(c.name, c.params, c.dim, unit_controls(c.dim));
    for (const auto& rep : check_all(cs, mu, default_sample(cs, mu))) {
      EXPECT_TRUE(rep.pass()) << c.name << " d=" << c.dim << "\n" << rep.text();
    }
  }
}

TEST(Catalog, ChecksHoldOnShiftedCurves) {
  // Coupled entries are checked against a curve that drifts away from the origin.
  const StateGrid g(1, 4.0, 81);
  const TimeGrid t(1.0, 4);
  std::vector<double> data;
  for (std::size_t k = 0; k < t.nodes(); ++k) {
    const auto w = discrete_gaussian(g, scalar(0.5 * static_cast<double>(k)), 0.3);
    data.insert(data.end(), w.begin(), w.end());
  }
  const MeasureCurve mu(g, t, data);
  for (const auto& c : catalog_cases()) {
    if (c.dim != 1) continue;
    const auto cs = example_catalog(c.name, c.params, 1, unit_controls());
    for (const auto& rep : check_all(cs, mu, default_sample(cs, mu))) {
      EXPECT_TRUE(rep.pass()) << c.name << "\n" << rep.text();
    }
  }
}

TEST(Catalog, Example21ConstantIsFinite) {
  const auto cs = example_catalog("ex2.1", {}, 1, unit_controls());
  const auto& ly = cs.lyapunov();
  EXPECT_GT(ly.c_l, 0.0);
  EXPECT_DOUBLE_EQ(ly.big_m(), 5.0 * ly.c_l);
  EXPECT_NEAR(ly.h_star(1.0), 0.25, 1e-12);  // h = v^2 with cost 1
}

TEST(Catalog, Example22BoundedRightSide) {
  // With m = 2 the left side of the Lyapunov inequality is bounded above on the whole line.
  const auto cs = example_catalog("ex2.2", {{"m", "2"}, {"p", "1"}}, 1, unit_controls());
  const StateGrid g(1, 30.0, 601);
  const TimeGrid t(1.0, 2);
  const auto mu = gaussian_curve(g, t);
  const auto fc = cs.freeze(mu);
  const auto& ly = cs.lyapunov();
  double sup = -1e300;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const SVec x = g.node(i);
    const double lhs = (fc.a(x, 0) * ly.hess_v(x)).trace() + fc.b(x, 0).dot(ly.grad_v(x)) +
                       ly.h_star((fc.q(x, 0).transpose() * ly.grad_v(x)).norm());
    sup = std::max(sup, lhs);
  }
  EXPECT_LT(sup, 10.0);
  EXPECT_TRUE(check_h2_1(cs, mu, default_sample(cs, mu)).pass());
}

TEST(Catalog, ParameterErrors) {
  const auto u = unit_controls();
  EXPECT_THROW(example_catalog("ex2.9", {}, 1, u), ValidationError);
  EXPECT_THROW(example_catalog("ex2.1", {{"nope", "1"}}, 1, u), ValidationError);
  EXPECT_THROW(example_catalog("ex2.1", {{"cost", "0"}}, 1, u), ValidationError);
  EXPECT_THROW(example_catalog("ex2.2", {{"m", "1.5"}}, 1, u), ValidationError);
  EXPECT_THROW(example_catalog("ex2.2", {{"p", "2"}}, 1, u), ValidationError);
  EXPECT_THROW(example_catalog("ex2.2", {{"eps", "0.25"}}, 1, u), ValidationError);
  EXPECT_NO_THROW(example_catalog("ex2.2", {{"eps", "0.25"}, {"q", "0"}}, 1, u));
  EXPECT_THROW(example_catalog("ex2.3", {{"s", "3"}}, 1, u), ValidationError);
  EXPECT_THROW(example_catalog("ex2.4", {{"phi", "identity"}}, 1, u), ValidationError);
  EXPECT_THROW(example_catalog("ex2.1", {{"c_h", "1"}}, 1, u), ValidationError);
  EXPECT_THROW(example_catalog("ex2.1", {}, 3, u), DimensionError);
  for (const auto& name : catalog_names()) EXPECT_FALSE(catalog_defaults(name).empty());
}

TEST(Catalog, IdentityFunctionalOfOneIsTheHorizon) {
  const Params p{{"phi", "identity"}, {"zeta", "one"}, {"horizon", "2"}, {"kappa", "0.5"}, {"beta", "1"}};
  const auto cs = example_catalog("ex2.4", p, 1, unit_controls());
  EXPECT_EQ(cs.mode(), DependenceMode::kWholeCurve);
  const StateGrid g(1, 3.0, 31);
  const TimeGrid t(2.0, 7);
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> data;
    for (std::size_t k = 0; k < t.nodes(); ++k) {
      std::vector<double> w(g.size());
      double s = 0.0;
      for (auto& x : w) s += (x = ud(rng));
      for (auto& x : w) data.push_back(x / s);
    }
    const auto fc = cs.freeze(MeasureCurve(g, t, data));
    EXPECT_NEAR(fc.environment().scalars[0], 2.0, 1e-12);
    EXPECT_NEAR(fc.b(scalar(1.0), 3)(0), -1.0 + 0.5 * 2.0, 1e-12);
  }
}

TEST(Catalog, MarginalModeIgnoresOtherTimes) {
  const auto cs = example_catalog("ex2.3", {{"crowd", "0.5"}}, 1, unit_controls());
  ASSERT_EQ(cs.mode(), DependenceMode::kMarginal);
  const StateGrid g(1, 3.0, 31);
  const TimeGrid t(1.0, 4);
  std::vector<double> a, b;
  for (std::size_t k = 0; k < t.nodes(); ++k) {
    const auto wa = discrete_gaussian(g, scalar(0.3 * static_cast<double>(k)), 0.4);
    const auto wb = k == 2 ? wa : discrete_gaussian(g, scalar(-1.0), 0.2);
    a.insert(a.end(), wa.begin(), wa.end());
    b.insert(b.end(), wb.begin(), wb.end());
  }
  const MeasureCurve ma(g, t, a), mb(g, t, b);
  const auto fa = cs.freeze(ma), fb = cs.freeze(mb);
  SVec u = scalar(0.4);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const SVec x = g.node(i);
    EXPECT_EQ(fa.f(u, x, 2), fb.f(u, x, 2));
    EXPECT_EQ(fa.b(x, 2)(0), fb.b(x, 2)(0));
  }
  bool differs = false;
  for (std::size_t i = 0; i < g.size(); ++i) differs = differs || fa.f(u, g.node(i), 1) != fb.f(u, g.node(i), 1);
  EXPECT_TRUE(differs);
}

TEST(Catalog, WholeCurveModeIgnoresTimeReordering) {
  const auto cs = example_catalog("ex2.4", {{"zeta", "x"}}, 1, unit_controls());
  ASSERT_EQ(cs.mode(), DependenceMode::kWholeCurve);
  const StateGrid g(1, 3.0, 31);
  const TimeGrid t(1.0, 5);
  std::vector<std::vector<double>> slices;
  for (std::size_t k = 0; k < t.nodes(); ++k) slices.push_back(discrete_gaussian(g, scalar(0.2 * k), 0.3));
  auto flatten = [](const std::vector<std::vector<double>>& s) {
    std::vector<double> out;
    for (const auto& w : s) out.insert(out.end(), w.begin(), w.end());
    return out;
  };
  // Interior nodes share the same trapezoid weight, so permuting them keeps the functional.
  auto permuted = slices;
  std::swap(permuted[1], permuted[4]);
  std::swap(permuted[2], permuted[3]);
  const auto fa = cs.freeze(MeasureCurve(g, t, flatten(slices)));
  const auto fb = cs.freeze(MeasureCurve(g, t, flatten(permuted)));
  EXPECT_NEAR(fa.environment().scalars[1], fb.environment().scalars[1], 1e-14);
  for (std::size_t i = 0; i < g.size(); i += 3) {
    const SVec x = g.node(i);
    for (std::size_t k = 0; k < t.steps(); ++k) {
      EXPECT_NEAR(fa.b(x, k)(0), fb.b(x, k)(0), 1e-14);
      EXPECT_NEAR(fa.f(scalar(0.3), x, k), fb.f(scalar(0.3), x, k), 1e-14);
    }
  }
  auto endpoint = slices;
  std::swap(endpoint[0], endpoint[3]);
  const auto fc = cs.freeze(MeasureCurve(g, t, flatten(endpoint)));
  EXPECT_GT(std::abs(fa.environment().scalars[1] - fc.environment().scalars[1]), 1e-6);
}

TEST(Catalog, RadialSup) {
  EXPECT_NEAR(radial_sup([](double r) { return r * std::exp(-r); }), std::exp(-1.0), 1e-8);
  EXPECT_NEAR(radial_sup([](double r) { return std::min(r, 50.0); }, 100.0), 50.0, 1e-12);
}
