#include "mfg/config.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace mfg;

namespace {

Config parse(const std::string& text) {
  std::istringstream is(text);
  return Config::parse(is, "test");
}

}  // namespace

TEST(Config, ParsesCommentsAndDefaults) {
  const auto c = parse("# header\n\ngrid.n = 15   # trailing\nmodel.crowd = 2\n");
  EXPECT_EQ(c.count("grid.n"), 15u);
  EXPECT_EQ(c.str("model.crowd"), "2");
  EXPECT_EQ(c.str("fixed_point.mode"), "damped-picard");
  EXPECT_TRUE(c.flag("best_response.enforce_apriori"));
}

TEST(Config, RejectsMalformedInput) {
  EXPECT_THROW(parse("grid.n = 3\ngrid.n = 4\n"), ValidationError);
  EXPECT_THROW(parse("grid.nn = 3\n"), ValidationError);
  EXPECT_THROW(parse("lyapunov.c_z = 3\n"), ValidationError);
  EXPECT_THROW(parse("grid.n 3\n"), ValidationError);
  EXPECT_THROW(parse("grid.n = 3.5\n").count("grid.n"), ValidationError);
  EXPECT_THROW(parse("grid.n = -1\n").count("grid.n"), ValidationError);
  EXPECT_THROW(parse("time.T = 1x\n").num("time.T"), ValidationError);
  EXPECT_THROW(parse("solver.renormalize = maybe\n").flag("solver.renormalize"), ValidationError);
  try {
    parse("\ngrid.nn = 3\n");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("test:2"), std::string::npos);
  }
}

TEST(Config, OverridesApplyLastAndAreLogged) {
  auto c = parse("grid.n = 15\n");
  c.apply_override("grid.n=21");
  c.apply_override("grid.n = 25");
  EXPECT_EQ(c.count("grid.n"), 25u);
  ASSERT_EQ(c.overrides().size(), 2u);
  const std::string snap = c.snapshot();
  EXPECT_EQ(snap.rfind("# override: grid.n = 21\n# override: grid.n = 25\n", 0), 0u);
  EXPECT_THROW(c.apply_override("grid.n"), ValidationError);
  EXPECT_THROW(c.apply_override("nope=1"), ValidationError);
}

TEST(Config, SnapshotRoundTrips) {
  auto c = parse("model.name = ex2.3\nmodel.crowd = 2\ngrid.n = 15\n");
  c.apply_override("seed=9");
  const auto again = parse(c.snapshot());
  for (const auto& [k, v] : config_defaults()) EXPECT_EQ(again.str(k), c.str(k)) << k;
  EXPECT_EQ(again.str("model.crowd"), "2");
}

TEST(Config, BuildsScenario) {
  auto c = parse(
      "grid.dim = 2\ngrid.n = 9\ntime.K = 30\ncontrols.dim = 2\ncontrols.points = 3\n"
      "initial.mean = 0.5, -0.5\nlyapunov.c_l = 4\nfixed_point.mode = fictitious-play\ncertify.tolerance = 0.01\n");
  const Scenario s = build_scenario(c);
  EXPECT_EQ(s.grid.size(), 81u);
  EXPECT_EQ(s.coeffs.controls().size(), 9u);
  EXPECT_DOUBLE_EQ(s.coeffs.lyapunov().c_l, 4.0);
  EXPECT_EQ(s.fixed_point.mode, Averaging::kFictitiousPlay);
  EXPECT_DOUBLE_EQ(s.certify_tolerance, 0.01);
  double mass = 0.0, mx = 0.0;
  for (std::size_t i = 0; i < s.nu.size(); ++i) {
    mass += s.nu[i];
    mx += s.nu[i] * s.grid.node(i)(0);
  }
  EXPECT_NEAR(mass, 1.0, 1e-14);
  EXPECT_GT(mx, 0.3);
}

TEST(Config, ScenarioValidation) {
  EXPECT_THROW(build_scenario(parse("initial.mean = 1, 2\n")), DimensionError);
  EXPECT_THROW(build_scenario(parse("controls.shape = star\n")), ValidationError);
  EXPECT_THROW(build_scenario(parse("initial.kind = file\ninitial.file = /no/such.csv\n")), ValidationError);
  EXPECT_THROW(build_scenario(parse("model.name = ex2.9\n")), ValidationError);
  EXPECT_THROW(build_scenario(parse("model.zzz = 1\n")), ValidationError);
  EXPECT_THROW(build_scenario(parse("fixed_point.damping = 0\n")), ValidationError);
  EXPECT_EQ(build_scenario(parse("certify.tolerance = auto\n")).certify_tolerance, -1.0);
}
