#pragma once

#include "mfg/controls.hpp"
#include "mfg/measure_curve.hpp"

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace mfg {

using ScalarFn = std::function<double(double)>;
using FieldFn = std::function<double(const SVec&)>;

// h*(p) = sup_{0 <= v <= v_max} (p v - h(v)) by golden-section search.
// Throws BoundTooSmallError when the maximizer sits at v_max.
double legendre(const ScalarFn& h, double p, double v_max);

// Inverse of an increasing h by bisection: h(v) = y within 1e-10.
double h_inverse(const ScalarFn& h, double y);

// sup over probability weights eta with sum V eta <= R of R^{-1} sum W eta.
double beta_vw(std::span<const double> v, std::span<const double> w, double r);

struct LyapunovData {
  FieldFn v;
  std::function<SVec(const SVec&)> grad_v;
  std::function<SMat(const SVec&)> hess_v;
  FieldFn w;
  ScalarFn h;
  double c_l = 1.0;
  double c_g = 1.0;
  double c_h = 2.0;
  double c_f = 1.0;
  std::function<double(const MeasureCurve&)> c1 = [](const MeasureCurve&) { return 1.0; };
  std::function<double(const MeasureCurve&)> c2 = [](const MeasureCurve&) { return 1.0; };
  std::function<double(const SVec&, std::size_t)> theta = [](const SVec&, std::size_t) { return 0.0; };
  double h_search_bound = 16.0;  // initial v_max for h*, doubled as needed

  double big_m() const { return 5.0 * c_l; }
  double gamma(double horizon) const;
  double h_star(double p) const;

  // V >= 0, W >= 0, W <= V on the nodes; h(0) = 0, h increasing and convex on a sample.
  void validate(const StateGrid& grid) const;
};

enum class DependenceMode { kNone, kMarginal, kWholeCurve };

std::string to_string(DependenceMode m);

// Per-curve features the coefficient rules read (means, smoothed densities, scalar
// functionals). Computed once per environment curve.
struct Environment {
  StateGrid grid;
  TimeGrid times;
  std::vector<SVec> mean;                   // per time node
  std::vector<std::vector<double>> field;   // per time node grid field
  std::vector<double> scalars;              // curve-wide functionals
  std::vector<double> sup_w;                // [0]: sup_t int W d mu_t

  // Linear interpolation of field[k] at x (clamped to the box).
  double field_at(std::size_t k, const SVec& x) const;
};

struct CoefficientRules {
  std::function<SMat(const SVec&, std::size_t, const Environment&)> a;
  std::function<SVec(const SVec&, std::size_t, const Environment&)> b;
  std::function<SMat(const SVec&, std::size_t, const Environment&)> q;
  std::function<double(const SVec&, const SVec&, std::size_t, const Environment&)> f;  // (u, x, k)
  std::function<double(const SVec&, const Environment&)> g;
  // Fills the curve-dependent parts of an environment (grid, times and sup_w are set already).
  std::function<void(const MeasureCurve&, Environment&)> features = [](const MeasureCurve&, Environment&) {};
};

class FrozenCoefficients;

class CoefficientSet {
 public:
  CoefficientSet(std::string name, int state_dim, CoefficientRules rules, ControlSet controls, LyapunovData lyap,
                 DependenceMode mode);

  const std::string& name() const { return name_; }
  int state_dim() const { return state_dim_; }
  int control_dim() const { return controls_.dim(); }
  const ControlSet& controls() const { return controls_; }
  ControlSet& controls() { return controls_; }
  const LyapunovData& lyapunov() const { return lyap_; }
  LyapunovData& lyapunov() { return lyap_; }
  DependenceMode mode() const { return mode_; }

  // Coefficients with the measure argument fixed to mu.
  FrozenCoefficients freeze(const MeasureCurve& mu) const;

 private:
  std::string name_;
  int state_dim_;
  std::shared_ptr<const CoefficientRules> rules_;
  ControlSet controls_;
  LyapunovData lyap_;
  DependenceMode mode_;
};

class FrozenCoefficients {
 public:
  SMat a(const SVec& x, std::size_t k) const { return rules_->a(x, k, env_); }
  SVec b(const SVec& x, std::size_t k) const { return rules_->b(x, k, env_); }
  SMat q(const SVec& x, std::size_t k) const { return rules_->q(x, k, env_); }
  double f(const SVec& u, const SVec& x, std::size_t k) const { return rules_->f(u, x, k, env_); }
  double g(const SVec& x) const { return rules_->g(x, env_); }
  const Environment& environment() const { return env_; }

 private:
  friend class CoefficientSet;
  FrozenCoefficients(std::shared_ptr<const CoefficientRules> rules, Environment env)
      : rules_(std::move(rules)), env_(std::move(env)) {}
  std::shared_ptr<const CoefficientRules> rules_;
  Environment env_;
};

// Symmetric PSD square root with eigenvalues clamped at 0 below tol::kEigenClamp.
// Throws ValidationError when A is not symmetric or has an eigenvalue below -tol::kEigenClamp.
SMat psd_sqrt(const SMat& a);

// Spectral norm of a small matrix.
double operator_norm(const SMat& m);

}  // namespace mfg
