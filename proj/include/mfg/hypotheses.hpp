#pragma once

#include "mfg/coefficients.hpp"

#include <limits>
#include <string>
#include <vector>

namespace mfg {

// Points at which the hypotheses are evaluated. Checks are sampled: a pass means
// no violation was found on the sample, not a proof.
struct HypothesisSample {
  std::vector<std::size_t> nodes;
  std::vector<std::size_t> times;
  std::vector<SVec> controls;
};

// Evenly strided nodes and time nodes of mu's grids plus the control grid of U.
HypothesisSample default_sample(const CoefficientSet& coeffs, const MeasureCurve& mu, std::size_t max_nodes = 81,
                                std::size_t max_times = 6);

struct Violation {
  std::string where;
  double lhs = 0.0;
  double rhs = 0.0;
};

struct InequalityCheck {
  InequalityCheck(std::string n = {}) : name(std::move(n)) {}

  std::string name;
  bool pass = true;
  double worst_excess = -std::numeric_limits<double>::infinity();  // max of lhs - rhs
  std::string worst_where;
  double smallest_constant = 0.0;  // smallest constant that passes on the sample
  std::size_t evaluations = 0;
  std::vector<Violation> violations;  // first 100

  void record(double lhs, double rhs, const std::string& where);
};

struct HypothesisReport {
  std::string hypothesis;
  std::vector<InequalityCheck> checks;

  bool pass() const;
  std::string text() const;
  // hypothesis,inequality,where,lhs,rhs,excess (one row per recorded violation)
  std::string csv() const;
};

HypothesisReport check_h1(const CoefficientSet& coeffs, const MeasureCurve& mu, const HypothesisSample& sample);
HypothesisReport check_h2_1(const CoefficientSet& coeffs, const MeasureCurve& mu, const HypothesisSample& sample);
HypothesisReport check_h2_2_h2_3(const CoefficientSet& coeffs, const MeasureCurve& mu,
                                 const HypothesisSample& sample);
HypothesisReport check_h3(const CoefficientSet& coeffs, const MeasureCurve& mu, const HypothesisSample& sample);

std::vector<HypothesisReport> check_all(const CoefficientSet& coeffs, const MeasureCurve& mu,
                                        const HypothesisSample& sample);

}  // namespace mfg
