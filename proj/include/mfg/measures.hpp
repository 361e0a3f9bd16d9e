#pragma once

#include "mfg/measure_curve.hpp"

#include <functional>
#include <span>
#include <vector>

namespace mfg {

// Integral of a grid field against the time-k slice.
double moment(const MeasureCurve& curve, std::span<const double> phi, std::size_t k);

// Field sampled at the grid nodes.
std::vector<double> sample_field(const StateGrid& grid, const std::function<double(const SVec&)>& f);

// For each curve n: max over time nodes of |int zeta d mu^n_t - int zeta d mu_t|.
// v is used only to check that zeta / v is bounded on the grid.
std::vector<double> v_weak_gap(const std::vector<MeasureCurve>& curves, const MeasureCurve& limit,
                               std::span<const double> zeta, std::span<const double> v);

struct MollifiedCurve {
  std::vector<std::size_t> time_index;        // time nodes k with t_k + eps <= T
  std::vector<std::vector<double>> density;   // mu^eps at those nodes, all entries > 0
  std::vector<std::vector<double>> payload;   // u_eps at those nodes
};

// Time-and-space smoothing of a curve with a scalar payload u(k, i), k < K:
//   mu^eps_t = eps * phi + ((1 - eps) / eps) int_t^{t+eps} omega_eps * mu_s ds
//   u_eps    = ((1 - eps) / eps) int_t^{t+eps} omega_eps * (u_s mu_s) ds / mu^eps_t
// with phi the discrete standard Gaussian, omega_eps a polynomial bump of radius eps
// normalized per source node, and mu_s, u_s piecewise constant on [t_k, t_{k+1}).
MollifiedCurve mollify_curve(const MeasureCurve& curve, std::span<const double> payload, double eps);

// Phi(int xi d omega) <= int Phi(xi) d omega (slack tol::kJensen) for sub-probability omega.
bool subprob_jensen_check(const std::function<double(double)>& phi, std::span<const double> xi,
                          std::span<const double> omega);

}  // namespace mfg
