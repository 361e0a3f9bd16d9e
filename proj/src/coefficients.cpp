#include "mfg/coefficients.hpp"

#include "mfg/simplex.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace mfg {

double legendre(const ScalarFn& h, double p, double v_max) {
  if (!(p >= 0.0)) throw ValidationError("legendre: p must be nonnegative");
  if (!(v_max > 0.0)) throw ValidationError("legendre: search bound must be positive");
  if (std::abs(h(0.0)) > 1e-14) throw ValidationError("legendre: h(0) must be 0");
  if (p == 0.0) return 0.0;
  auto obj = [&](double v) { return p * v - h(v); };
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double lo = 0.0, hi = v_max;
  double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
  double f1 = obj(x1), f2 = obj(x2);
  while (hi - lo > 1e-13 * (1.0 + v_max)) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + phi * (hi - lo);
      f2 = obj(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - phi * (hi - lo);
      f1 = obj(x1);
    }
  }
  const double v = 0.5 * (lo + hi);
  if (v >= v_max * (1.0 - 1e-9)) {
    throw BoundTooSmallError("legendre: maximizer reaches the search bound " + std::to_string(v_max));
  }
  return std::max({0.0, obj(v), obj(lo), obj(hi)});
}

double h_inverse(const ScalarFn& h, double y) {
  const double h0 = h(0.0);
  if (!(y >= h0)) throw ValidationError("h_inverse: value below h(0)");
  if (y == h0) return 0.0;
  double hi = 1.0;
  for (int i = 0; i < 2000 && h(hi) < y; ++i) hi *= 2.0;
  if (!(h(hi) >= y)) throw NumericalError("h_inverse: could not bracket the value");
  double lo = 0.0;
  for (int i = 0; i < 400; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (h(mid) < y) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return std::abs(h(lo) - y) < std::abs(h(hi) - y) ? lo : hi;
}

double beta_vw(std::span<const double> v, std::span<const double> w, double r) {
  if (v.size() != w.size() || v.empty()) throw DimensionError("beta_vw: field size mismatch");
  double vmin = v[0];
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(w[i] >= 0.0) || w[i] > v[i] * (1.0 + 1e-12)) throw ValidationError("beta_vw: need 0 <= W <= V");
    vmin = std::min(vmin, v[i]);
  }
  if (!(r > 0.0) || r < vmin) throw ValidationError("beta_vw: R below min V (infeasible)");
  lp::Problem prob;
  std::vector<lp::Term> mass, budget;
  for (std::size_t i = 0; i < v.size(); ++i) {
    prob.add_var(-w[i]);
    mass.push_back({i, 1.0});
    budget.push_back({i, v[i]});
  }
  prob.add_row(std::move(mass), lp::Sense::kEqual, 1.0);
  prob.add_row(std::move(budget), lp::Sense::kLessEqual, r);
  const auto sol = lp::solve(prob);
  if (sol.status != lp::Status::kOptimal) throw NumericalError("beta_vw: LP " + lp::to_string(sol.status));
  return std::clamp(-sol.objective / r, 0.0, 1.0);
}

double LyapunovData::gamma(double horizon) const { return 0.25 * std::exp(-c_l * horizon); }

double LyapunovData::h_star(double p) const {
  double bound = h_search_bound;
  for (int i = 0; i < 80; ++i) {
    try {
      return legendre(h, p, bound);
    } catch (const BoundTooSmallError&) {
      bound *= 2.0;
    }
  }
  throw BoundTooSmallError("h_star: h is not superlinear enough for p = " + std::to_string(p));
}

void LyapunovData::validate(const StateGrid& grid) const {
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const SVec x = grid.node(i);
    const double vv = v(x), ww = w(x);
    if (!(vv >= 0.0) || !(ww >= 0.0)) throw ValidationError("lyapunov: V and W must be nonnegative");
    if (ww > vv * (1.0 + 1e-12)) throw ValidationError("lyapunov: W exceeds V at a node");
  }
  if (std::abs(h(0.0)) > 1e-14) throw ValidationError("lyapunov: h(0) must be 0");
  double prev = h(0.0), prev_slope = -1.0;
  const double step = 0.05;
  for (int i = 1; i <= 400; ++i) {
    const double cur = h(step * i);
    const double slope = (cur - prev) / step;
    if (!(cur >= prev)) throw ValidationError("lyapunov: h must be increasing");
    if (slope < prev_slope - 1e-9 * (1.0 + std::abs(slope))) throw ValidationError("lyapunov: h must be convex");
    prev = cur;
    prev_slope = slope;
  }
  if (!(c_l > 0.0 && c_g > 0.0 && c_h > 1.0 && c_f > 0.0)) {
    throw ValidationError("lyapunov: need C_L, C_g, C_f > 0 and C_h > 1");
  }
}

std::string to_string(DependenceMode m) {
  switch (m) {
    case DependenceMode::kNone:
      return "none";
    case DependenceMode::kMarginal:
      return "marginal";
    case DependenceMode::kWholeCurve:
      return "whole-curve";
  }
  return "unknown";
}

double Environment::field_at(std::size_t k, const SVec& x) const {
  const auto& fk = field.at(k);
  const double dx = grid.spacing(), lw = grid.half_width();
  const auto n = grid.points_per_axis();
  auto locate = [&](double c, std::size_t& i0, double& t) {
    const double s = std::clamp((c + lw) / dx, 0.0, static_cast<double>(n - 1));
    i0 = std::min(static_cast<std::size_t>(s), n - 2);
    t = s - static_cast<double>(i0);
  };
  std::size_t i0 = 0;
  double tx = 0.0;
  locate(x(0), i0, tx);
  if (grid.dim() == 1) return (1.0 - tx) * fk[i0] + tx * fk[i0 + 1];
  std::size_t j0 = 0;
  double ty = 0.0;
  locate(x(1), j0, ty);
  auto at = [&](std::size_t i, std::size_t j) { return fk[grid.flat_index(i, j)]; };
  return (1.0 - tx) * (1.0 - ty) * at(i0, j0) + tx * (1.0 - ty) * at(i0 + 1, j0) + (1.0 - tx) * ty * at(i0, j0 + 1) +
         tx * ty * at(i0 + 1, j0 + 1);
}

CoefficientSet::CoefficientSet(std::string name, int state_dim, CoefficientRules rules, ControlSet controls,
                               LyapunovData lyap, DependenceMode mode)
    : name_(std::move(name)),
      state_dim_(state_dim),
      rules_(std::make_shared<const CoefficientRules>(std::move(rules))),
      controls_(std::move(controls)),
      lyap_(std::move(lyap)),
      mode_(mode) {
  if (state_dim != 1 && state_dim != 2) throw DimensionError("coefficient set: state dimension must be 1 or 2");
  if (!rules_->a || !rules_->b || !rules_->q || !rules_->f || !rules_->g) {
    throw ValidationError("coefficient set: every evaluator must be provided");
  }
}

FrozenCoefficients CoefficientSet::freeze(const MeasureCurve& mu) const {
  if (mu.grid().dim() != state_dim_) throw DimensionError("coefficient set and curve dimensions differ");
  Environment env{mu.grid(), mu.times(), {}, {}, {}, {}};
  const StateGrid& g = mu.grid();
  std::vector<double> wn(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) wn[i] = lyap_.w(g.node(i));
  double sup_w = 0.0;
  for (std::size_t k = 0; k < mu.times().nodes(); ++k) {
    const auto s = mu.at(k);
    double m = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) m += wn[i] * s[i];
    sup_w = std::max(sup_w, m);
  }
  env.sup_w = {sup_w};
  rules_->features(mu, env);
  return FrozenCoefficients(rules_, std::move(env));
}

SMat psd_sqrt(const SMat& a) {
  if (a.rows() != a.cols()) throw DimensionError("psd_sqrt: matrix is not square");
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + a.cwiseAbs().maxCoeff())) {
    throw ValidationError("psd_sqrt: matrix is not symmetric");
  }
  if (a.rows() == 1) {
    if (a(0, 0) < -tol::kEigenClamp) throw ValidationError("psd_sqrt: negative eigenvalue");
    SMat r(1, 1);
    r(0, 0) = std::sqrt(std::max(a(0, 0), 0.0));
    return r;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es{Eigen::Matrix2d(a)};
  Eigen::Vector2d ev = es.eigenvalues();
  for (int i = 0; i < 2; ++i) {
    if (ev(i) < -tol::kEigenClamp) throw ValidationError("psd_sqrt: negative eigenvalue");
    ev(i) = ev(i) < tol::kEigenClamp ? 0.0 : std::sqrt(ev(i));
  }
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

double operator_norm(const SMat& m) {
  if (m.size() == 0) return 0.0;
  if (m.rows() == 1 || m.cols() == 1) return m.norm();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd{Eigen::MatrixXd(m)};
  return svd.singularValues()(0);
}

}  // namespace mfg
