#pragma once

#include "mfg/best_response.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mfg {

enum class Averaging { kDampedPicard, kFictitiousPlay };

std::string to_string(Averaging a);
Averaging parse_averaging(const std::string& s);

struct FixedPointConfig {
  double damping = 0.5;  // lambda for damped Picard
  std::size_t max_iterations = 200;
  double tolerance = 1e-3;  // on max_t KR(Phi(sigma)_t, sigma_t)
  Averaging mode = Averaging::kDampedPicard;
  std::uint64_t seed = 1;
  bool check_hypotheses = true;
  BestResponseOptions best_response;

  void validate() const;
};

struct IterationRecord {
  std::size_t iter = 0;
  double kr_gap = 0.0;  // max_t KR(best-response marginal, sigma^iter)
  double relaxed_cost = 0.0;
  double projected_cost = 0.0;
};

struct CertificateReport {
  std::vector<double> costs;  // J_mu(v, sigma_v) per challenger
  std::vector<double> gaps;   // J_mu(u*, mu^u*) - J_mu(v, sigma_v)
  double candidate_cost = 0.0;
  double exploitability = 0.0;
  double tolerance = 0.0;
  double fpk_residual = 0.0;       // weak residual of the candidate's own flow
  double consistency_gap = 0.0;    // max_t KR(candidate flow, mu)
  bool pass = false;
};

struct EquilibriumResult {
  MeasureCurve mu;             // environment at the returned iterate
  MeasureCurve player_curve;   // FPK flow of u under mu
  ControlField control;        // projected best response to mu
  std::vector<IterationRecord> history;
  std::size_t best_iter = 0;
  double best_gap = 0.0;
  bool converged = false;
  double r = 0.0;
  std::vector<std::string> warnings;
  std::optional<CertificateReport> certificate;
  std::optional<AprioriResult> apriori;
};

// sigma^0 is the FPK flow of the default control (frozen at the constant curve nu);
// sigma^{k+1} = (1 - lambda_k) sigma^k + lambda_k Phi(sigma^k) with lambda_0 = 1.
// Returns the iterate with the smallest gap; hitting the cap is reported as not converged.
EquilibriumResult iterate(const CoefficientSet& coeffs, const StateGrid& grid, const TimeGrid& times,
                          std::span<const double> nu, const FixedPointConfig& config);

// Random piecewise-constant fields, perturbations of u, and single-step greedy deviations.
std::vector<ControlField> make_challengers(const CoefficientSet& coeffs, const MeasureCurve& mu,
                                           const ControlField& u, std::size_t count, std::uint64_t seed);

// tolerance < 0 selects 1e-3 (1 + |J(u*)|).
CertificateReport certify(const CoefficientSet& coeffs, const MeasureCurve& mu, const ControlField& u,
                          const std::vector<ControlField>& challengers, std::span<const double> nu,
                          double tolerance = -1.0);

struct ModulusResult {
  bool pass = true;
  double worst_ratio = 0.0;  // max |int psi d(mu_t - mu_s)| / omega(|t - s|)
  std::size_t worst_s = 0, worst_t = 0;
};

// Largest |(G_base psi)_i| and |(G_u psi)_i - (G_base psi)_i| / |u| over steps and nodes.
double modulus_constant(const DiscreteGenerator& gen, std::span<const double> psi);

// Checks |int psi d mu_t - int psi d mu_s| <= C v + C v h^{-1}(gamma R / v), v = |t - s|.
ModulusResult modulus_diagnostic(const MeasureCurve& mu, std::span<const double> psi, double c, double r,
                                 const LyapunovData& lyap);

struct SweepRow {
  double r = 0.0;
  bool witness_pass = false;
  bool responses_pass = false;
  double worst_envelope_ratio = 0.0;  // max_t int V d mu_t / (R e^{M t}) over all checked flows
  double worst_budget_ratio = 0.0;    // max control cost / (gamma R)
  bool pass() const { return witness_pass && responses_pass; }
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::optional<double> empirical_r0;  // smallest passing ladder value
  bool monotone = true;
};

// Checks the default-control witness and `responses` unconstrained best responses
// (full steps from sigma^0) against both a-priori bounds for each R of an increasing ladder.
SweepResult apriori_sweep(const CoefficientSet& coeffs, const StateGrid& grid, const TimeGrid& times,
                          std::span<const double> nu, const std::vector<double>& ladder, std::size_t responses = 2,
                          const BestResponseOptions& br = {});

// history.csv, certificate.csv, mu_star.csv, u_star.csv, config.txt and summary.txt.
void write_run_directory(const std::filesystem::path& dir, const EquilibriumResult& res, const std::string& config_text);

}  // namespace mfg
