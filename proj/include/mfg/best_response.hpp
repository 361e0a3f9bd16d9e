#pragma once

#include "mfg/fpk.hpp"
#include "mfg/occupation.hpp"
#include "mfg/simplex.hpp"

#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace mfg {

// Explicit one-step transition of control point j at step k: T_j = I + dt G_{k,j}.
// Throws StepSizeError when some control point breaks the CFL bound.
void check_control_cfl(const DiscreteGenerator& gen, std::span<const SVec> controls, double cfl_max);

// Player curve carried by an occupation measure: m_k = sum_j pi(k, j, .) for k < K and
// m_K = sum_j T_j^T pi(K-1, j, .).
MeasureCurve occupation_curve(const DiscreteGenerator& gen, const OccupationMeasure& pi);

// Occupation measure generated from nu by a randomized feedback policy:
// pi(k, j, i) = m_k(i) * policy[(k * n + i) * J + j].
OccupationMeasure occupation_from_policy(const DiscreteGenerator& gen, std::vector<SVec> controls,
                                         std::span<const double> nu, std::span<const double> policy);

// dt sum f(u_j, x_i, k) pi(k, j, i) + sum g(x_i) m_K(i). Linear in pi.
double evaluate_cost(const CoefficientSet& coeffs, const MeasureCurve& sigma, const OccupationMeasure& pi);
double evaluate_cost(const DiscreteGenerator& gen, const FrozenCoefficients& fc, const OccupationMeasure& pi);

// Same for a feedback control u whose FPK solution is mu.
double evaluate_cost(const CoefficientSet& coeffs, const MeasureCurve& sigma, const ControlField& u,
                     const MeasureCurve& mu);
double evaluate_cost(const FrozenCoefficients& fc, const ControlField& u, const MeasureCurve& mu);

// R = 4 (1 + C_L T + C_f T + C_g + C_f + int V d nu) e^{C_L T}.
double default_radius(const CoefficientSet& coeffs, std::span<const double> nu, const StateGrid& grid, double horizon);

struct BestResponseOptions {
  double r = 0.0;               // 0 selects default_radius
  bool enforce_apriori = true;  // add the V-envelope and control-budget rows
  double cfl_max = 0.9;
  StencilOptions stencil;
  lp::Options lp;
};

struct ConstraintActivity {
  double fpk_residual = 0.0;             // max |m_{k+1} - sum_j T_j^T pi(k, j, .)|
  std::vector<double> v_moment;          // per time node
  std::vector<double> v_bound;           // R e^{M t_k}
  double control_cost = 0.0;             // dt sum h(|u_j|) pi
  double control_budget = 0.0;           // gamma R
  bool v_active = false;                 // some envelope row within 1e-8 of its bound
  bool h_active = false;
  bool in_budget = true;                 // all side constraints hold within 1e-8
};

ConstraintActivity constraint_activity(const DiscreteGenerator& gen, const LyapunovData& lyap,
                                       const OccupationMeasure& pi, double r);

struct BestResponseResult {
  OccupationMeasure pi;
  MeasureCurve relaxed_curve;     // occupation_curve(pi)
  ControlField control;           // Markovian projection
  MeasureCurve projected_curve;   // FPK solution under the projected control
  double relaxed_cost = 0.0;
  double projected_cost = 0.0;
  double r = 0.0;
  bool deterministic = false;     // every charged cell uses a single control point
  ConstraintActivity activity;
  lp::Basis basis;
  std::size_t pivots = 0;
};

// Minimizes the cost over occupation measures of the controlled FPK chain frozen at sigma.
// Before solving, the constant default control is checked as a feasibility witness;
// InfeasibleError reports which side constraint it breaks.
BestResponseResult solve_lp(const CoefficientSet& coeffs, const MeasureCurve& sigma, std::span<const double> nu,
                            const BestResponseOptions& opts = {}, const lp::Basis* warm_start = nullptr);

// Conditional mean of the control in every charged cell, the default control elsewhere.
ControlField project_markovian(const OccupationMeasure& pi, const ControlSet& controls);

struct ResolveResult {
  ControlField control;
  SolveReport report;
  double relaxed_cost = 0.0;
  double projected_cost = 0.0;
};

ResolveResult resolve_and_compare(const CoefficientSet& coeffs, const MeasureCurve& sigma, std::span<const double> nu,
                                  const OccupationMeasure& pi, double cfl_max = 0.9);

// k,j,i,weight
void write_occupation_csv(std::ostream& os, const OccupationMeasure& pi);
// Flat key = value summary with both costs and constraint activity.
void write_best_response_summary(std::ostream& os, const BestResponseResult& res);

}  // namespace mfg
