#pragma once

#include "mfg/coefficients.hpp"

#include <Eigen/SparseCore>

#include <array>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace mfg {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// One jump of the Markov chain: rate to node `to` from the owning row is
// base + <per_u, u> for the control value u used at that row.
struct Jump {
  std::uint32_t to = 0;
  double base = 0.0;
  std::array<double, 2> per_u{0.0, 0.0};

  double rate(const SVec& u) const {
    double r = base;
    for (Eigen::Index c = 0; c < u.size(); ++c) r += per_u[static_cast<std::size_t>(c)] * u(c);
    return r;
  }
};

// Rate matrix of one time step, affine in the control value at each row.
// Diffusion uses node values of A split into nonnegative lattice directions,
// b is upwinded, and Q u uses centered differences plus the smallest extra
// diffusion that keeps every rate nonnegative for all u in U. Jumps that
// would leave the box are dropped, so every row sums to zero.
struct GeneratorStep {
  std::vector<std::size_t> row_start;  // size n^d + 1
  std::vector<Jump> jumps;

  std::size_t rows() const { return row_start.size() - 1; }
  // Total outflow rate -G_ii under control u at row i.
  double outflow(std::size_t i, const SVec& u) const;
  SparseMatrix matrix(const ControlField& u, std::size_t k) const;
  SparseMatrix matrix(const SVec& u) const;
  // (G psi)_i and (G^T sigma)_i for a per-row control.
  std::vector<double> apply(const ControlField& u, std::size_t k, std::span<const double> psi) const;
  std::vector<double> apply_adjoint(const ControlField& u, std::size_t k, std::span<const double> sigma) const;
};

struct StencilOptions {
  // Permit the (2,1)-type lattice directions when the 9-point split of A fails.
  bool allow_wide_stencil = true;
};

// Generators G_k, k < K, for coefficients frozen at the environment curve mu.
class DiscreteGenerator {
 public:
  DiscreteGenerator(const CoefficientSet& coeffs, const MeasureCurve& mu, StencilOptions opts = {});

  const StateGrid& grid() const { return grid_; }
  const TimeGrid& times() const { return times_; }
  const GeneratorStep& step(std::size_t k) const { return steps_.at(k); }
  std::size_t steps() const { return steps_.size(); }

 private:
  StateGrid grid_;
  TimeGrid times_;
  std::vector<GeneratorStep> steps_;
};

// Assembles the generator of step k alone (no caching).
GeneratorStep assemble_step(const FrozenCoefficients& fc, const ControlSet& controls, const StateGrid& grid,
                            std::size_t k, StencilOptions opts = {});

// Nonnegative weights w_e with A = sum_e w_e e e^T over integer lattice directions e.
// Tries the 9-point directions first, then wider ones. Throws SchemeError when none fits.
std::vector<std::pair<std::array<int, 2>, double>> split_diffusion(const SMat& a, bool allow_wide = true);

enum class Scheme { kExplicit, kImplicit };

std::string to_string(Scheme s);
Scheme parse_scheme(const std::string& s);

struct FpkOptions {
  Scheme scheme = Scheme::kExplicit;
  double cfl_max = 0.9;
  bool renormalize = false;  // rescale each slice to unit mass (logged per step)
  StencilOptions stencil;
};

struct SolveReport {
  MeasureCurve solution;
  std::vector<double> mass_defect;    // per step: |mass_{k+1} - mass_k|
  std::vector<double> v_moment;       // per time node: int V d sigma_t
  std::vector<double> boundary_mass;  // per time node: weight on boundary nodes
  std::vector<double> renormalized;   // per step: applied factor - 1 (0 when off)
  double leakage = 0.0;               // mass removed at the boundary (0 for the no-flux scheme)
  double cfl_margin = 0.0;            // cfl_max - max_k dt * max_i |G_ii| (explicit)
  double min_weight = 0.0;
  Scheme scheme = Scheme::kExplicit;
};

// sigma_{k+1} = sigma_k + dt G_k^T sigma_k (explicit) or (I - dt G_k^T) sigma_{k+1} = sigma_k.
// G_k uses the coefficients at time node k, frozen at mu, and the control u(k, .).
SolveReport solve_fpk(const CoefficientSet& coeffs, const MeasureCurve& mu, const ControlField& u,
                      std::span<const double> nu, const FpkOptions& opts = {});

// Same with a prebuilt generator.
SolveReport solve_fpk(const DiscreteGenerator& gen, const LyapunovData& lyap, const ControlField& u,
                      std::span<const double> nu, const FpkOptions& opts = {});

// max over time nodes of |sum psi sigma_k - sum psi nu - dt sum_s (G_s psi) sigma_s| where
// s runs over [0, k) (explicit) or (0, k] (implicit).
double weak_residual(const DiscreteGenerator& gen, const ControlField& u, const MeasureCurve& sigma,
                     std::span<const double> psi, Scheme scheme);

struct MonitorResult {
  bool pass = true;
  std::vector<double> bound;   // per time node
  std::vector<double> margin;  // bound - value per time node
  long first_violation = -1;   // time node index, -1 if none
};

// int V d sigma_t <= (int V d nu + int_0^t e^{-C s} int W_s d sigma_s ds) e^{C t},
// with the s-integral taken as a left Riemann sum. `w` holds (K+1) x n^d values.
MonitorResult gronwall_monitor(const SolveReport& report, double c, std::span<const double> w);

struct AprioriResult {
  bool pass = true;
  MonitorResult envelope;   // int V d sigma_t <= R e^{M t}
  double control_cost = 0;  // dt sum_k sum_i h(|u(k,i)|) sigma_k(i)
  double control_budget = 0;  // gamma R
};

AprioriResult apriori_monitor(const SolveReport& report, const LyapunovData& lyap, double r, const ControlField& u);

// Lyapunov moments of a curve: int V d sigma_t per time node.
std::vector<double> v_moments(const MeasureCurve& curve, const LyapunovData& lyap);

// t,mass_defect,leakage,V_moment (one row per time node; defect and leakage of the step ending there).
void write_report_csv(std::ostream& os, const SolveReport& report);

}  // namespace mfg
