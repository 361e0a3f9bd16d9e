#include "mfg/measures.hpp"
#include "mfg/occupation.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace mfg;

namespace {

StateGrid line(double half_width, std::size_t n) { return StateGrid(1, half_width, n); }

SVec scalar(double x) {
  SVec v(1);
  v(0) = x;
  return v;
}

std::vector<double> random_probability(std::mt19937_64& rng, std::size_t n, double zero_fraction = 0.0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> w(n);
  double s = 0.0;
  for (auto& x : w) {
    x = u(rng) < zero_fraction ? 0.0 : u(rng);
    s += x;
  }
  if (s == 0.0) {
    w[0] = 1.0;
    s = 1.0;
  }
  for (auto& x : w) x /= s;
  return w;
}

MeasureCurve random_curve(std::mt19937_64& rng, const StateGrid& g, const TimeGrid& t) {
  std::vector<double> data;
  for (std::size_t k = 0; k < t.nodes(); ++k) {
    const auto w = random_probability(rng, g.size());
    data.insert(data.end(), w.begin(), w.end());
  }
  return MeasureCurve(g, t, data);
}

}  // namespace

TEST(Moment, ConstantFieldGivesOne) {
  const StateGrid g = line(2.0, 21);
  const TimeGrid t(1.0, 4);
  std::mt19937_64 rng(1);
  const auto c = random_curve(rng, g, t);
  const std::vector<double> one(g.size(), 1.0);
  for (std::size_t k = 0; k < t.nodes(); ++k) EXPECT_NEAR(moment(c, one, k), 1.0, 1e-12);
}

TEST(Moment, LyapunovAtOrigin) {
  const StateGrid g = line(2.0, 21);
  const TimeGrid t(1.0, 3);
  const auto c = MeasureCurve::constant(g, t, point_mass(g, scalar(0.0)));
  const auto v = sample_field(g, [](const SVec& x) { return 1.0 + x.squaredNorm(); });
  for (std::size_t k = 0; k < t.nodes(); ++k) EXPECT_DOUBLE_EQ(moment(c, v, k), 1.0);
}

TEST(Moment, SampledGaussianVariance) {
  const StateGrid g = line(4.0, 801);
  const TimeGrid t(1.0, 1);
  const auto c = MeasureCurve::constant(g, t, discrete_gaussian(g, scalar(0.0), 0.25));
  const auto x2 = sample_field(g, [](const SVec& x) { return x.squaredNorm(); });
  EXPECT_NEAR(moment(c, x2, 0), 0.25, 1e-6);
}

TEST(Moment, RejectsMismatchedField) {
  const StateGrid g = line(1.0, 5);
  const TimeGrid t(1.0, 1);
  const auto c = MeasureCurve::constant(g, t, point_mass(g, scalar(0.0)));
  const std::vector<double> bad(4, 1.0);
  EXPECT_THROW(moment(c, bad, 0), DimensionError);
}

TEST(VWeakGap, IdenticalCurvesGiveZero) {
  const StateGrid g = line(2.0, 11);
  const TimeGrid t(1.0, 3);
  std::mt19937_64 rng(2);
  const auto c = random_curve(rng, g, t);
  const auto zeta = sample_field(g, [](const SVec& x) { return x(0); });
  const auto v = sample_field(g, [](const SVec& x) { return 1.0 + x.squaredNorm(); });
  for (double gap : v_weak_gap({c, c, c}, c, zeta, v)) EXPECT_EQ(gap, 0.0);
}

TEST(VWeakGap, VanishingSatelliteMass) {
  const StateGrid g = line(2.0, 5);  // nodes -2, -1, 0, 1, 2
  const TimeGrid t(1.0, 2);
  const auto limit = MeasureCurve::constant(g, t, point_mass(g, scalar(0.0)));
  std::vector<MeasureCurve> seq;
  for (int n = 1; n <= 8; ++n) {
    std::vector<double> w(5, 0.0);
    w[2] = 1.0 - 1.0 / n;
    w[3] = 1.0 / n;
    seq.push_back(MeasureCurve::constant(g, t, w));
  }
  const auto zeta = sample_field(g, [](const SVec& x) { return x(0); });
  const auto v = sample_field(g, [](const SVec& x) { return 1.0 + x.squaredNorm(); });
  const auto gaps = v_weak_gap(seq, limit, zeta, v);
  for (int n = 1; n <= 8; ++n) EXPECT_NEAR(gaps[n - 1], 1.0 / n, 1e-15);
}

TEST(VWeakGap, ShiftedCurvesKeepConstantGap) {
  const StateGrid g = line(2.0, 5);
  const TimeGrid t(1.0, 2);
  const auto limit = MeasureCurve::constant(g, t, point_mass(g, scalar(0.0)));
  const auto shifted = MeasureCurve::constant(g, t, point_mass(g, scalar(1.0)));
  const auto zeta = sample_field(g, [](const SVec& x) { return x(0); });
  const auto v = sample_field(g, [](const SVec& x) { return 1.0 + x.squaredNorm(); });
  const auto gaps = v_weak_gap({shifted, shifted, shifted}, limit, zeta, v);
  for (double gap : gaps) EXPECT_DOUBLE_EQ(gap, 1.0);
}

TEST(VWeakGap, RejectsUnboundedRatio) {
  const StateGrid g = line(2.0, 5);
  const TimeGrid t(1.0, 1);
  const auto c = MeasureCurve::constant(g, t, point_mass(g, scalar(0.0)));
  const auto zeta = sample_field(g, [](const SVec& x) { return x(0); });
  auto v_bad = sample_field(g, [](const SVec& x) { return 1.0 + x.squaredNorm(); });
  v_bad[3] = 0.0;  // zeta(1) = 1 with V(1) = 0
  EXPECT_THROW(v_weak_gap({c}, c, zeta, v_bad), ValidationError);
}

class MollifyTest : public ::testing::Test {
 protected:
  StateGrid g = line(3.0, 61);
  TimeGrid t{1.0, 10};
};

TEST_F(MollifyTest, RejectsBandwidthOutOfRange) {
  const auto c = MeasureCurve::constant(g, t, point_mass(g, scalar(0.0)));
  const std::vector<double> u(t.steps() * g.size(), 0.0);
  EXPECT_THROW(mollify_curve(c, u, 0.0), ValidationError);
  EXPECT_THROW(mollify_curve(c, u, 0.5), ValidationError);
  EXPECT_THROW(mollify_curve(c, u, -0.1), ValidationError);
}

TEST_F(MollifyTest, MassPositivityAndZeroPayload) {
  std::mt19937_64 rng(3);
  const auto c = random_curve(rng, g, t);
  const std::vector<double> u(t.steps() * g.size(), 0.0);
  const auto m = mollify_curve(c, u, 0.25);
  ASSERT_FALSE(m.time_index.empty());
  for (std::size_t r = 0; r < m.time_index.size(); ++r) {
    EXPECT_LE(t.time(m.time_index[r]) + 0.25, t.horizon() + 1e-12);
    double mass = 0.0;
    for (std::size_t y = 0; y < g.size(); ++y) {
      EXPECT_GT(m.density[r][y], 0.0);
      EXPECT_EQ(m.payload[r][y], 0.0);
      mass += m.density[r][y];
    }
    EXPECT_NEAR(mass, 1.0, 1e-8);
  }
}

TEST_F(MollifyTest, ConstantPayloadFormula) {
  std::mt19937_64 rng(4);
  const auto c = random_curve(rng, g, t);
  const double cval = -1.7, eps = 0.3;
  const std::vector<double> u(t.steps() * g.size(), cval);
  const auto m = mollify_curve(c, u, eps);
  const auto phi = discrete_gaussian(g, SVec::Zero(1), 1.0);
  for (std::size_t r = 0; r < m.time_index.size(); ++r) {
    for (std::size_t y = 0; y < g.size(); ++y) {
      EXPECT_LE(std::abs(m.payload[r][y]), std::abs(cval) + 1e-12);
      EXPECT_NEAR(m.payload[r][y], cval * (1.0 - eps * phi[y] / m.density[r][y]), 1e-12);
    }
  }
}

TEST_F(MollifyTest, PayloadSupBoundOnRandomData) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ud(-2.0, 2.0);
  for (int trial = 0; trial < 10; ++trial) {
    const auto c = random_curve(rng, g, t);
    std::vector<double> u(t.steps() * g.size());
    double sup = 0.0;
    for (auto& x : u) {
      x = ud(rng);
      sup = std::max(sup, std::abs(x));
    }
    const auto m = mollify_curve(c, u, 0.2);
    for (const auto& row : m.payload) {
      for (double x : row) EXPECT_LE(std::abs(x), sup + 1e-12);
    }
  }
}

// sum_y h(|u_eps|) mu_eps <= (1 - eps) * (time average over the window of sum_z h(|u_s|) mu_s),
// since for each y the weights of u_eps form a sub-probability.
TEST_F(MollifyTest, JensenBoundOnRandomPayloads) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> ud(-3.0, 3.0);
  const auto h = [](double v) { return 2.0 * v * v + v; };
  const double eps = 0.25, dt = t.dt();
  for (int trial = 0; trial < 10; ++trial) {
    const auto c = random_curve(rng, g, t);
    std::vector<double> u(t.steps() * g.size());
    for (auto& x : u) x = ud(rng);
    const auto m = mollify_curve(c, u, eps);
    for (std::size_t r = 0; r < m.time_index.size(); ++r) {
      double lhs = 0.0;
      for (std::size_t y = 0; y < g.size(); ++y) lhs += h(std::abs(m.payload[r][y])) * m.density[r][y];
      const double t0 = t.time(m.time_index[r]), t1 = t0 + eps;
      double rhs = 0.0;
      for (std::size_t s = 0; s < t.steps(); ++s) {
        const double overlap = std::min(t1, t.time(s) + dt) - std::max(t0, t.time(s));
        if (overlap <= 0.0) continue;
        double layer = 0.0;
        for (std::size_t z = 0; z < g.size(); ++z) layer += h(std::abs(u[s * g.size() + z])) * c.weight(s, z);
        rhs += overlap / eps * layer;
      }
      EXPECT_LE(lhs, (1.0 - eps) * rhs + 1e-12 * (1.0 + rhs));
    }
  }
}

TEST(SubprobJensen, ZeroWeights) {
  const std::vector<double> xi{1.0, 2.0}, w{0.0, 0.0};
  EXPECT_TRUE(subprob_jensen_check([](double v) { return v * v; }, xi, w));
}

TEST(SubprobJensen, HalfMassOnOnes) {
  const std::vector<double> xi{1.0, 1.0}, w{0.25, 0.25};
  EXPECT_TRUE(subprob_jensen_check([](double v) { return v * v; }, xi, w));
}

TEST(SubprobJensen, TwoPointSpread) {
  const std::vector<double> xi{0.0, 2.0}, w{0.25, 0.25};
  EXPECT_TRUE(subprob_jensen_check([](double v) { return v * v; }, xi, w));
}

TEST(SubprobJensen, ConcaveFunctionCanFail) {
  // sqrt is not convex: sqrt(mean) > mean of sqrt for a spread sample.
  const std::vector<double> xi{0.0, 4.0}, w{0.5, 0.5};
  EXPECT_FALSE(subprob_jensen_check([](double v) { return std::sqrt(v); }, xi, w));
}

TEST(SubprobJensen, RandomConvexSamplesHold) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  const auto phi = [](double v) { return v * v * v + std::exp(v) - 1.0; };
  for (int trial = 0; trial < 200; ++trial) {
    auto w = random_probability(rng, 6);
    const double mass = u(rng) / 5.0;
    for (auto& x : w) x *= mass;
    std::vector<double> xi(6);
    for (auto& x : xi) x = u(rng);
    EXPECT_TRUE(subprob_jensen_check(phi, xi, w));
  }
}

TEST(SubprobJensen, Errors) {
  const auto phi = [](double v) { return v * v; };
  EXPECT_THROW(subprob_jensen_check(phi, std::vector<double>{1.0}, std::vector<double>{-0.1}), ValidationError);
  EXPECT_THROW(subprob_jensen_check(phi, std::vector<double>{1.0, 1.0}, std::vector<double>{0.7, 0.7}),
               ValidationError);
  EXPECT_THROW(subprob_jensen_check(phi, std::vector<double>{1.0}, std::vector<double>{0.5, 0.5}), DimensionError);
}

class ConditionalTest : public ::testing::Test {
 protected:
  StateGrid g = line(1.0, 5);
  TimeGrid t{1.0, 3};
  std::vector<SVec> controls{scalar(-1.0), scalar(0.0), scalar(1.0)};
};

TEST_F(ConditionalTest, MarkovianGivesDiracCells) {
  std::mt19937_64 rng(8);
  std::vector<double> marg;
  for (std::size_t k = 0; k < t.steps(); ++k) {
    const auto w = random_probability(rng, g.size(), 0.4);
    marg.insert(marg.end(), w.begin(), w.end());
  }
  const std::vector<std::size_t> idx(t.steps() * g.size(), 2);
  const auto pi = OccupationMeasure::markovian(g, t, controls, idx, marg);
  const auto fam = conditional_family(pi);
  for (std::size_t k = 0; k < t.steps(); ++k) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      EXPECT_EQ(fam.defined(k, i), marg[k * g.size() + i] > 0.0);
      if (!fam.defined(k, i)) {
        EXPECT_THROW(fam.cell(k, i), ValidationError);
        continue;
      }
      const auto cell = fam.cell(k, i);
      EXPECT_DOUBLE_EQ(cell[2], 1.0);
      EXPECT_DOUBLE_EQ(cell[0] + cell[1], 0.0);
      EXPECT_DOUBLE_EQ(fam.mean(k, i)(0), 1.0);
    }
  }
}

TEST_F(ConditionalTest, HalfSplitCell) {
  std::vector<double> w(t.steps() * controls.size() * g.size(), 0.0);
  OccupationMeasure shape(g, t, controls, std::vector<double>(w.size(), 1.0 / (controls.size() * g.size())));
  for (std::size_t k = 0; k < t.steps(); ++k) {
    w[shape.offset(k, 0, 2)] = 0.5;
    w[shape.offset(k, 2, 2)] = 0.5;
  }
  const OccupationMeasure pi(g, t, controls, w);
  const auto fam = conditional_family(pi);
  const auto cell = fam.cell(1, 2);
  EXPECT_DOUBLE_EQ(cell[0], 0.5);
  EXPECT_DOUBLE_EQ(cell[1], 0.0);
  EXPECT_DOUBLE_EQ(cell[2], 0.5);
  EXPECT_DOUBLE_EQ(fam.mean(1, 2)(0), 0.0);
  EXPECT_FALSE(fam.defined(1, 0));
}

TEST_F(ConditionalTest, RecompositionIsIdentity) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> w;
    for (std::size_t k = 0; k < t.steps(); ++k) {
      const auto slice = random_probability(rng, controls.size() * g.size(), 0.5);
      w.insert(w.end(), slice.begin(), slice.end());
    }
    const OccupationMeasure pi(g, t, controls, w);
    const auto back = conditional_family(pi).recompose();
    for (std::size_t q = 0; q < w.size(); ++q) EXPECT_NEAR(back.data()[q], w[q], tol::kRecompose);
  }
}

TEST_F(ConditionalTest, OccupationValidation) {
  const std::size_t size = t.steps() * controls.size() * g.size();
  std::vector<double> w(size, 1.0 / (controls.size() * g.size()));
  EXPECT_NO_THROW(OccupationMeasure(g, t, controls, w));
  auto neg = w;
  neg[0] = -0.1;
  neg[1] += 0.1;
  EXPECT_THROW(OccupationMeasure(g, t, controls, neg), ValidationError);
  auto heavy = w;
  heavy[0] += 0.1;
  EXPECT_THROW(OccupationMeasure(g, t, controls, heavy), ValidationError);
  w.pop_back();
  EXPECT_THROW(OccupationMeasure(g, t, controls, w), DimensionError);
}

TEST_F(ConditionalTest, MarginalAndBlend) {
  std::mt19937_64 rng(10);
  std::vector<double> a, b;
  for (std::size_t k = 0; k < t.steps(); ++k) {
    const auto sa = random_probability(rng, controls.size() * g.size());
    const auto sb = random_probability(rng, controls.size() * g.size());
    a.insert(a.end(), sa.begin(), sa.end());
    b.insert(b.end(), sb.begin(), sb.end());
  }
  const OccupationMeasure pa(g, t, controls, a), pb(g, t, controls, b);
  const auto mix = pa.blend(pb, 0.3);
  for (std::size_t k = 0; k < t.steps(); ++k) {
    const auto ma = pa.marginal(k), mb = pb.marginal(k), mm = mix.marginal(k);
    double total = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      EXPECT_NEAR(mm[i], 0.7 * ma[i] + 0.3 * mb[i], 1e-15);
      total += mm[i];
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}
