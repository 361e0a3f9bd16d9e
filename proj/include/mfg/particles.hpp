#pragma once

#include "mfg/coefficients.hpp"

#include <array>
#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

namespace mfg {

// Philox4x32-10 counter-based generator: the output depends only on (key, counter),
// so particle batches reproduce regardless of evaluation order.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

// Two independent standard normals and two uniforms in (0, 1) for (seed, stream, step).
struct CounterDraw {
  std::array<double, 2> normal;
  std::array<double, 2> uniform;
};
CounterDraw counter_draw(std::uint64_t seed, std::uint64_t stream, std::uint32_t step);

struct ParticleOptions {
  std::size_t count = 100000;
  std::uint64_t seed = 1;
  bool keep_paths = false;
};

// Euler-Maruyama ensemble of dX = sqrt(2A) dW + (b + Q u) dt on the curve's time grid,
// reflected at the box boundary.
struct ParticleEnsemble {
  StateGrid grid;
  TimeGrid times;
  std::size_t count = 0;
  std::uint64_t seed = 0;
  std::vector<std::vector<double>> binned;  // per time node: empirical law at nearest nodes
  std::vector<SVec> mean;                   // per time node
  std::vector<double> variance;             // per time node: trace of the covariance
  std::vector<double> cost;                 // per particle: dt sum f(u, X_k, k) + g(X_K)
  std::vector<double> paths;                // optional: count x (K+1) x d, particle-major

  SVec position(std::size_t particle, std::size_t k) const;
};

// Aborts with NumericalError once a particle leaves |x| <= 10 L (before reflection).
ParticleEnsemble simulate(const CoefficientSet& coeffs, const MeasureCurve& mu, const ControlField& u,
                          std::span<const double> nu, const ParticleOptions& opts);

// Per time node W_1 distance between the binned ensemble and the grid curve.
// 1D uses the CDF formula; 2D solves a transport LP and is limited to small grids.
std::vector<double> superposition_gap(const ParticleEnsemble& ensemble, const MeasureCurve& grid_solution);

struct CostEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
};

// Monte-Carlo cost from the per-particle samples recorded by simulate.
CostEstimate cost_estimate(const ParticleEnsemble& ensemble);

// Recomputes the cost along stored paths (requires keep_paths) for other coefficients or controls.
CostEstimate cost_estimate(const ParticleEnsemble& ensemble, const CoefficientSet& coeffs, const MeasureCurve& mu,
                           const ControlField& u);

// t,mean[,mean2],var,w1_gap
void write_ensemble_csv(std::ostream& os, const ParticleEnsemble& ensemble, std::span<const double> gaps);

// float64 rows (particle, t, x1[, x2]); requires keep_paths.
void write_paths_binary(std::ostream& os, const ParticleEnsemble& ensemble);

}  // namespace mfg
