#include "mfg/hypotheses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace mfg {

namespace {

std::vector<std::size_t> strided(std::size_t count, std::size_t max_count) {
  std::vector<std::size_t> out;
  if (count <= max_count) {
    for (std::size_t i = 0; i < count; ++i) out.push_back(i);
    return out;
  }
  for (std::size_t s = 0; s < max_count; ++s) {
    out.push_back(static_cast<std::size_t>(std::llround(static_cast<double>(s) * static_cast<double>(count - 1) /
                                                        static_cast<double>(max_count - 1))));
  }
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::string at(const StateGrid& g, std::size_t i, std::size_t k) {
  std::ostringstream os;
  os << "x=(" << g.node(i)(0);
  if (g.dim() == 2) os << "," << g.node(i)(1);
  os << ") k=" << k;
  return os.str();
}

double tolerance(double rhs) { return 1e-8 * (1.0 + std::abs(rhs)); }

double ratio(double num, double den) {
  if (num <= 0.0) return 0.0;
  if (den <= 0.0) return std::numeric_limits<double>::infinity();
  return num / den;
}

std::vector<double> moments(const MeasureCurve& mu, const FieldFn& f) {
  const StateGrid& g = mu.grid();
  std::vector<double> fn(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) fn[i] = f(g.node(i));
  std::vector<double> out(mu.times().nodes(), 0.0);
  for (std::size_t k = 0; k < out.size(); ++k) {
    const auto s = mu.at(k);
    for (std::size_t i = 0; i < g.size(); ++i) out[k] += fn[i] * s[i];
  }
  return out;
}

}  // namespace

void InequalityCheck::record(double lhs, double rhs, const std::string& where) {
  ++evaluations;
  const double excess = lhs - rhs;
  if (excess > worst_excess) {
    worst_excess = excess;
    worst_where = where;
  }
  if (!(excess <= tolerance(rhs))) {
    pass = false;
    if (violations.size() < 100) violations.push_back({where, lhs, rhs});
  }
}

bool HypothesisReport::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const InequalityCheck& c) { return c.pass; });
}

std::string HypothesisReport::text() const {
  std::ostringstream os;
  os << hypothesis << ": " << (pass() ? "PASS" : "FAIL") << " (sampled; no violation found is not a proof)\n";
  for (const auto& c : checks) {
    os << "  " << c.name << ": " << (c.pass ? "pass" : "FAIL") << ", " << c.evaluations
       << " evaluations, worst lhs-rhs = " << c.worst_excess;
    if (!c.worst_where.empty()) os << " at " << c.worst_where;
    os << ", smallest sampled-feasible constant = " << c.smallest_constant << "\n";
  }
  return os.str();
}

std::string HypothesisReport::csv() const {
  std::ostringstream os;
  os.precision(17);
  for (const auto& c : checks) {
    for (const auto& v : c.violations) {
      os << hypothesis << "," << c.name << ",\"" << v.where << "\"," << v.lhs << "," << v.rhs << ","
         << (v.lhs - v.rhs) << "\n";
    }
  }
  return os.str();
}

HypothesisSample default_sample(const CoefficientSet& coeffs, const MeasureCurve& mu, std::size_t max_nodes,
                                std::size_t max_times) {
  HypothesisSample s;
  s.nodes = strided(mu.grid().size(), max_nodes);
  s.times = strided(mu.times().nodes(), max_times);
  const auto& pts = coeffs.controls().points();
  for (std::size_t j : strided(pts.size(), 11)) s.controls.push_back(pts[j]);
  return s;
}

HypothesisReport check_h1(const CoefficientSet& coeffs, const MeasureCurve& mu, const HypothesisSample& sample) {
  const auto fc = coeffs.freeze(mu);
  const StateGrid& g = mu.grid();
  HypothesisReport rep{"H1", {}};
  InequalityCheck finite{"coefficients finite"}, psd{"A symmetric nonnegative definite"};
  for (std::size_t k : sample.times) {
    for (std::size_t i : sample.nodes) {
      const SVec x = g.node(i);
      const SMat a = fc.a(x, k);
      const SVec b = fc.b(x, k);
      const SMat q = fc.q(x, k);
      bool ok = a.allFinite() && b.allFinite() && q.allFinite() && std::isfinite(fc.g(x));
      for (const auto& u : sample.controls) ok = ok && std::isfinite(fc.f(u, x, k));
      finite.record(ok ? 0.0 : 1.0, 0.0, at(g, i, k));
      double min_eig = 0.0;
      const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
      if (a.rows() == 1) {
        min_eig = a(0, 0);
      } else {
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es{Eigen::Matrix2d(0.5 * (a + a.transpose()))};
        min_eig = es.eigenvalues().minCoeff();
      }
      psd.record(std::max(asym, -min_eig), tol::kEigenClamp, at(g, i, k));
    }
  }
  InequalityCheck lyap{"0 <= W <= V, h(0) = 0, h convex increasing"};
  try {
    coeffs.lyapunov().validate(g);
    lyap.record(0.0, 0.0, "grid");
  } catch (const ValidationError& e) {
    lyap.record(1.0, 0.0, e.what());
  }
  rep.checks = {finite, psd, lyap};
  return rep;
}

HypothesisReport check_h2_1(const CoefficientSet& coeffs, const MeasureCurve& mu, const HypothesisSample& sample) {
  const auto fc = coeffs.freeze(mu);
  const auto& ly = coeffs.lyapunov();
  const StateGrid& g = mu.grid();
  const auto vmom = moments(mu, ly.v);
  const auto wmom = moments(mu, ly.w);
  const double sup_w = *std::max_element(wmom.begin(), wmom.end());
  InequalityCheck c{"L V + h*(|Q^T grad V|) <= C_L (V + int V + sup int W)"};
  double smallest = 0.0;
  for (std::size_t k : sample.times) {
    for (std::size_t i : sample.nodes) {
      const SVec x = g.node(i);
      const SMat a = fc.a(x, k);
      const SVec grad = ly.grad_v(x);
      const double lv = (a * ly.hess_v(x)).trace() + fc.b(x, k).dot(grad);
      const double lhs = lv + ly.h_star((fc.q(x, k).transpose() * grad).norm());
      const double base = ly.v(x) + vmom[k] + sup_w;
      c.record(lhs, ly.c_l * base, at(g, i, k));
      smallest = std::max(smallest, ratio(lhs, base));
    }
  }
  c.smallest_constant = smallest;
  return {"H2.1", {c}};
}

HypothesisReport check_h2_2_h2_3(const CoefficientSet& coeffs, const MeasureCurve& mu,
                                 const HypothesisSample& sample) {
  const auto fc = coeffs.freeze(mu);
  const auto& ly = coeffs.lyapunov();
  const StateGrid& g = mu.grid();
  const double c1 = ly.c1(mu), c2 = ly.c2(mu);
  InequalityCheck mono{"tr((sqrt A(x) - sqrt A(y))^2) + <b(x) - b(y), x - y> <= C1 (1 + V(x) + V(y)) |x - y|^2"};
  InequalityCheck qlip{"|Q(x) - Q(y)| <= (Theta(x) + Theta(y)) |x - y|"};
  InequalityCheck growth{"|A| + |b| + h*(|Q|) + h*(Theta) <= C2 V"};
  double s_mono = 0.0, s_q = 0.0, s_growth = 0.0;
  const std::size_t ns = sample.nodes.size();
  for (std::size_t k : sample.times) {
    std::vector<SMat> sq(ns), qs(ns);
    std::vector<SVec> bs(ns), xs(ns);
    std::vector<double> vs(ns), th(ns);
    for (std::size_t s = 0; s < ns; ++s) {
      const std::size_t i = sample.nodes[s];
      xs[s] = g.node(i);
      const SMat a = fc.a(xs[s], k);
      sq[s] = psd_sqrt(a);
      bs[s] = fc.b(xs[s], k);
      qs[s] = fc.q(xs[s], k);
      vs[s] = ly.v(xs[s]);
      th[s] = ly.theta(xs[s], k);
      const double lhs = operator_norm(a) + bs[s].norm() + ly.h_star(operator_norm(qs[s])) + ly.h_star(th[s]);
      growth.record(lhs, c2 * vs[s], at(g, i, k));
      s_growth = std::max(s_growth, ratio(lhs, vs[s]));
    }
    for (std::size_t s = 0; s < ns; ++s) {
      for (std::size_t r = s + 1; r < ns; ++r) {
        const SVec dx = xs[s] - xs[r];
        const double d2 = dx.squaredNorm();
        const SMat ds = sq[s] - sq[r];
        const double lhs = (ds * ds).trace() + (bs[s] - bs[r]).dot(dx);
        const double base = (1.0 + vs[s] + vs[r]) * d2;
        const std::string where = at(g, sample.nodes[s], k) + " y=" + at(g, sample.nodes[r], k);
        mono.record(lhs, c1 * base, where);
        s_mono = std::max(s_mono, ratio(lhs, base));
        const double dq = operator_norm(qs[s] - qs[r]);
        const double qb = (th[s] + th[r]) * std::sqrt(d2);
        qlip.record(dq, qb, where);
        s_q = std::max(s_q, ratio(dq, qb));
      }
    }
  }
  mono.smallest_constant = s_mono;
  qlip.smallest_constant = s_q;
  growth.smallest_constant = s_growth;
  return {"H2.2-H2.3", {mono, qlip, growth}};
}

HypothesisReport check_h3(const CoefficientSet& coeffs, const MeasureCurve& mu, const HypothesisSample& sample) {
  const auto fc = coeffs.freeze(mu);
  const auto& ly = coeffs.lyapunov();
  const StateGrid& g = mu.grid();
  const auto wmom = moments(mu, ly.w);
  const double sup_w = *std::max_element(wmom.begin(), wmom.end());
  InequalityCheck gb{"|g| <= C_g (W + sup int W)"};
  InequalityCheck lower{"h(|u|) - C_f (W + sup int W) <= f"};
  InequalityCheck upper{"f <= C_h h(|u|) + C_f (W + sup int W)"};
  InequalityCheck ch{"C_h > 1"};
  InequalityCheck convex{"f convex in u (midpoints)"};
  ch.record(ly.c_h > 1.0 ? 0.0 : 1.0, 0.0, "constants");
  double s_g = 0.0, s_f = 0.0;
  for (std::size_t i : sample.nodes) {
    const SVec x = g.node(i);
    const double base = ly.w(x) + sup_w;
    const double gx = std::abs(fc.g(x));
    gb.record(gx, ly.c_g * base, at(g, i, mu.times().steps()));
    s_g = std::max(s_g, ratio(gx, base));
    for (std::size_t k : sample.times) {
      if (k >= mu.times().steps()) continue;
      std::vector<double> fu(sample.controls.size());
      for (std::size_t j = 0; j < sample.controls.size(); ++j) {
        const SVec& u = sample.controls[j];
        const double hu = ly.h(u.norm());
        fu[j] = fc.f(u, x, k);
        lower.record(hu - ly.c_f * base, fu[j], at(g, i, k));
        upper.record(fu[j], ly.c_h * hu + ly.c_f * base, at(g, i, k));
        s_f = std::max({s_f, ratio(hu - fu[j], base), ratio(fu[j] - ly.c_h * hu, base)});
      }
      for (std::size_t j = 0; j < sample.controls.size(); ++j) {
        for (std::size_t l = j + 1; l < sample.controls.size(); ++l) {
          const SVec mid = 0.5 * (sample.controls[j] + sample.controls[l]);
          convex.record(fc.f(mid, x, k), 0.5 * (fu[j] + fu[l]), at(g, i, k));
        }
      }
    }
  }
  gb.smallest_constant = s_g;
  lower.smallest_constant = s_f;
  upper.smallest_constant = s_f;
  return {"H3", {gb, lower, upper, ch, convex}};
}

std::vector<HypothesisReport> check_all(const CoefficientSet& coeffs, const MeasureCurve& mu,
                                        const HypothesisSample& sample) {
  return {check_h1(coeffs, mu, sample), check_h2_1(coeffs, mu, sample), check_h2_2_h2_3(coeffs, mu, sample),
          check_h3(coeffs, mu, sample)};
}

}  // namespace mfg
