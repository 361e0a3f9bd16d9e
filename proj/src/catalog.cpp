#include "mfg/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

namespace mfg {

namespace {

class ParamReader {
 public:
  ParamReader(const std::string& name, const Params& given) : name_(name), given_(given) {
    defaults_ = catalog_defaults(name);
    for (const auto& [k, v] : given_) {
      if (!defaults_.count(k)) throw ValidationError(name_ + ": unknown parameter '" + k + "'");
    }
  }

  double num(const std::string& key) const {
    const std::string& s = text(key);
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ValidationError(name_ + ": parameter '" + key + "' is not a finite number: " + s);
    }
  }

  const std::string& text(const std::string& key) const {
    auto it = given_.find(key);
    return it != given_.end() ? it->second : defaults_.at(key);
  }

  void require(bool ok, const std::string& what) const {
    if (!ok) throw ValidationError(name_ + ": " + what);
  }

 private:
  std::string name_;
  const Params& given_;
  Params defaults_;
};

SMat eye(int rows, int cols, double s) {
  SMat m = SMat::Zero(rows, cols);
  for (int i = 0; i < std::min(rows, cols); ++i) m(i, i) = s;
  return m;
}

SVec unit(int d) {
  SVec e = SVec::Zero(d);
  e(0) = 1.0;
  return e;
}

void fill_means(const MeasureCurve& mu, Environment& env) {
  const StateGrid& g = mu.grid();
  env.mean.assign(mu.times().nodes(), SVec::Zero(g.dim()));
  for (std::size_t k = 0; k < mu.times().nodes(); ++k) {
    const auto s = mu.at(k);
    for (std::size_t i = 0; i < g.size(); ++i) env.mean[k] += s[i] * g.node(i);
  }
}

// V = (1 + |x|^2)^{s/2} and W = (1 + |x|^2)^{p/2}.
LyapunovData power_lyapunov(double s, double p, double cost) {
  LyapunovData ly;
  ly.v = [s](const SVec& x) { return std::pow(1.0 + x.squaredNorm(), 0.5 * s); };
  ly.grad_v = [s](const SVec& x) -> SVec { return s * std::pow(1.0 + x.squaredNorm(), 0.5 * s - 1.0) * x; };
  ly.hess_v = [s](const SVec& x) -> SMat {
    const double r2 = 1.0 + x.squaredNorm();
    const int d = static_cast<int>(x.size());
    SMat h = s * std::pow(r2, 0.5 * s - 1.0) * eye(d, d, 1.0);
    h += s * (s - 2.0) * std::pow(r2, 0.5 * s - 2.0) * (x * x.transpose());
    return h;
  };
  ly.w = [p](const SVec& x) { return std::pow(1.0 + x.squaredNorm(), 0.5 * p); };
  ly.h = [cost](double v) { return cost * v * v; };
  return ly;
}

CoefficientSet make_ex21(const ParamReader& pr, int d, ControlSet controls) {
  const double a = pr.num("a"), beta = pr.num("beta"), kappa = pr.num("kappa"), q = pr.num("q");
  const double cost = pr.num("cost"), cx = pr.num("cx"), theta = pr.num("theta"), cg = pr.num("cg");
  const double ch = pr.num("c_h");
  pr.require(a >= 0.0, "a must be >= 0");
  pr.require(kappa >= 0.0 && q >= 0.0 && cx >= 0.0 && theta >= 0.0 && cg >= 0.0,
             "kappa, q, cx, theta, cg must be >= 0");
  pr.require(cost > 0.0, "cost must be > 0");
  pr.require(ch > 1.0, "c_h must be > 1");
  const int d1 = controls.dim();

  CoefficientRules r;
  r.a = [a, d](const SVec&, std::size_t, const Environment&) { return eye(d, d, a); };
  r.b = [beta, kappa](const SVec& x, std::size_t k, const Environment& env) -> SVec {
    SVec b = -beta * x;
    if (kappa != 0.0) b += kappa * env.mean[k];
    return b;
  };
  r.q = [q, d, d1](const SVec&, std::size_t, const Environment&) { return eye(d, d1, q); };
  r.f = [cost, cx, theta](const SVec& u, const SVec& x, std::size_t k, const Environment& env) {
    const SVec c = theta != 0.0 ? SVec(theta * env.mean[k]) : SVec(SVec::Zero(x.size()));
    return cost * u.squaredNorm() + cx * (x - c).norm();
  };
  r.g = [cg, theta](const SVec& x, const Environment& env) {
    const SVec c = theta != 0.0 ? SVec(theta * env.mean.back()) : SVec(SVec::Zero(x.size()));
    return cg * (x - c).norm();
  };
  const bool coupled = kappa != 0.0 || theta != 0.0;
  if (coupled) r.features = fill_means;

  LyapunovData ly;
  ly.v = [](const SVec& x) { return 1.0 + x.squaredNorm(); };
  ly.grad_v = [](const SVec& x) -> SVec { return 2.0 * x; };
  ly.hess_v = [d](const SVec&) { return eye(d, d, 2.0); };
  ly.w = [](const SVec& x) { return x.norm(); };
  ly.h = [cost](double v) { return cost * v * v; };
  ly.c_l = std::max({a * d, q * q / cost - 2.0 * beta + kappa, kappa, 0.1});
  ly.c_g = std::max(cg * std::max(1.0, theta), 0.01);
  ly.c_f = std::max(cx * std::max(1.0, theta), 0.01);
  ly.c_h = ch;
  ly.c1 = [beta](const MeasureCurve&) { return std::max(0.1, -beta); };
  ly.c2 = [a, beta, kappa, q, cost](const MeasureCurve& mu) {
    double sup_mean = 0.0;
    if (kappa != 0.0) {
      Environment env{mu.grid(), mu.times(), {}, {}, {}, {}};
      fill_means(mu, env);
      for (const auto& m : env.mean) sup_mean = std::max(sup_mean, m.norm());
    }
    return std::max(0.1, a + 0.5 * std::abs(beta) + kappa * sup_mean + q * q / (4.0 * cost));
  };
  return CoefficientSet("ex2.1", d, std::move(r), std::move(controls), std::move(ly),
                        coupled ? DependenceMode::kMarginal : DependenceMode::kNone);
}

CoefficientSet make_ex22(const ParamReader& pr, int d, ControlSet controls) {
  const double m = pr.num("m"), p = pr.num("p"), eps = pr.num("eps"), a = pr.num("a"), b0 = pr.num("b0");
  const double q = pr.num("q"), cost = pr.num("cost"), cx = pr.num("cx"), cg = pr.num("cg"), ch = pr.num("c_h");
  pr.require(m >= 2.0, "m must be >= 2");
  pr.require(p >= 1.0 && p < m, "need 1 <= p < m");
  pr.require(eps > 0.0, "eps must be > 0");
  pr.require(q == 0.0 || eps > 0.5,
             "eps must exceed 1/2 when q > 0: h*(|Q^T grad V|) grows like |x|^{2m-2eps} and must stay below the "
             "confining |x|^{2m-1} term");
  pr.require(a >= 0.0 && q >= 0.0 && cx >= 0.0 && cg >= 0.0, "a, q, cx, cg must be >= 0");
  pr.require(cost > 0.0, "cost must be > 0");
  pr.require(ch > 1.0, "c_h must be > 1");
  const int d1 = controls.dim();
  const double alpha = 0.5 * (1.0 - eps);

  CoefficientRules r;
  r.a = [a, d](const SVec&, std::size_t, const Environment&) { return eye(d, d, a); };
  r.b = [m, b0, d](const SVec& x, std::size_t, const Environment&) -> SVec {
    return -x * std::pow(x.norm(), m - 1.0) + b0 * unit(d);
  };
  r.q = [q, alpha, d, d1](const SVec& x, std::size_t, const Environment&) {
    return eye(d, d1, q * std::pow(1.0 + x.squaredNorm(), alpha));
  };
  r.f = [cost, cx, p](const SVec& u, const SVec& x, std::size_t, const Environment&) {
    return cost * u.squaredNorm() + cx * std::pow(x.norm(), p);
  };
  r.g = [cg, p](const SVec& x, const Environment&) { return cg * std::pow(x.norm(), p); };

  LyapunovData ly;
  ly.v = [m](const SVec& x) { return 1.0 + std::pow(x.norm(), m); };
  ly.grad_v = [m](const SVec& x) -> SVec {
    const double rr = x.norm();
    return rr == 0.0 ? SVec(SVec::Zero(x.size())) : SVec(m * std::pow(rr, m - 2.0) * x);
  };
  ly.hess_v = [m, d](const SVec& x) -> SMat {
    const double rr = x.norm();
    if (rr == 0.0) return eye(d, d, m == 2.0 ? 2.0 : 0.0);
    SMat h = m * std::pow(rr, m - 2.0) * eye(d, d, 1.0);
    h += m * (m - 2.0) * std::pow(rr, m - 4.0) * (x * x.transpose());
    return h;
  };
  ly.w = [p](const SVec& x) { return std::pow(x.norm(), p); };
  ly.h = [cost](double v) { return cost * v * v; };

  const double dd = d;
  // Worst case over directions of L V + h*(|Q^T grad V|) at radius r.
  auto lhs = [=](double rr) {
    const double diff = a * m * std::pow(rr, m - 2.0) * (dd + m - 2.0);
    const double drift = m * std::pow(rr, m - 2.0) * (-std::pow(rr, m + 1.0) + std::abs(b0) * rr);
    const double g = q * std::pow(1.0 + rr * rr, alpha) * m * std::pow(rr, m - 1.0);
    return diff + drift + g * g / (4.0 * cost);
  };
  ly.c_l = std::max(0.1, 1.01 * radial_sup([&](double rr) { return lhs(rr) / (2.0 + std::pow(rr, m)); }));
  // Lipschitz constant of r -> q (1 + r^2)^alpha; Theta is half of it.
  const double lip = radial_sup(
      [&](double rr) { return std::abs(q * 2.0 * alpha * rr * std::pow(1.0 + rr * rr, alpha - 1.0)); }, 1e3);
  const double theta = 0.5 * 1.01 * lip;
  ly.theta = [theta](const SVec&, std::size_t) { return theta; };
  const double c2 = std::max(0.1, 1.01 * radial_sup([&](double rr) {
                                 const double qn = q * std::pow(1.0 + rr * rr, alpha);
                                 return (a + std::pow(rr, m) + std::abs(b0) + (qn * qn + theta * theta) / (4.0 * cost)) /
                                        (1.0 + std::pow(rr, m));
                               }));
  ly.c1 = [](const MeasureCurve&) { return 0.1; };
  ly.c2 = [c2](const MeasureCurve&) { return c2; };
  ly.c_g = std::max(cg, 0.01);
  ly.c_f = std::max(cx, 0.01);
  ly.c_h = ch;
  return CoefficientSet("ex2.2", d, std::move(r), std::move(controls), std::move(ly), DependenceMode::kNone);
}

// H2.1 left side for A = aI, b = -beta x + shift (|shift| <= s0), Q = qI, V = (1 + r^2)^{s/2}, h = C v^2.
double power_lhs(double rr, double a, double beta, double shift, double q, double cost, double s, double d) {
  const double r2 = 1.0 + rr * rr;
  const double diff = a * s * std::pow(r2, 0.5 * s - 2.0) * (r2 * d + (s - 2.0) * rr * rr);
  const double drift = s * std::pow(r2, 0.5 * s - 1.0) * (-beta * rr * rr + shift * rr);
  const double g = q * s * std::pow(r2, 0.5 * s - 1.0) * rr;
  return diff + drift + g * g / (4.0 * cost);
}

CoefficientSet make_ex23(const ParamReader& pr, int d, ControlSet controls) {
  const double s = pr.num("s"), p = pr.num("p"), a = pr.num("a"), beta = pr.num("beta"), q = pr.num("q");
  const double cost = pr.num("cost"), crowd = pr.num("crowd"), bw = pr.num("bandwidth"), cx = pr.num("cx");
  const double cg = pr.num("cg"), ch = pr.num("c_h");
  pr.require(p >= 1.0 && p < s && s <= 2.0, "need 1 <= p < s <= 2");
  pr.require(a >= 0.0 && q >= 0.0 && crowd >= 0.0 && cx >= 0.0 && cg >= 0.0,
             "a, q, crowd, cx, cg must be >= 0");
  pr.require(bw > 0.0, "bandwidth must be > 0");
  pr.require(cost > 0.0, "cost must be > 0");
  pr.require(ch > 1.0, "c_h must be > 1");
  const int d1 = controls.dim();
  const double norm = std::pow(2.0 * std::numbers::pi * bw * bw, -0.5 * d);

  CoefficientRules r;
  r.a = [a, d](const SVec&, std::size_t, const Environment&) { return eye(d, d, a); };
  r.b = [beta](const SVec& x, std::size_t, const Environment&) -> SVec { return -beta * x; };
  r.q = [q, d, d1](const SVec&, std::size_t, const Environment&) { return eye(d, d1, q); };
  r.f = [cost, crowd, cx](const SVec& u, const SVec& x, std::size_t k, const Environment& env) {
    const double rho = crowd != 0.0 ? env.field_at(k, x) : 0.0;
    return cost * u.squaredNorm() + crowd * rho + cx * x.norm();
  };
  r.g = [cg](const SVec& x, const Environment&) { return cg * x.norm(); };
  if (crowd != 0.0) {
    // Gaussian-smoothed density of mu_t at the nodes.
    r.features = [bw, norm](const MeasureCurve& mu, Environment& env) {
      const StateGrid& g = mu.grid();
      const std::size_t n = g.size();
      std::vector<double> kern(n * n);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t z = 0; z < n; ++z) {
          kern[i * n + z] = norm * std::exp(-0.5 * (g.node(i) - g.node(z)).squaredNorm() / (bw * bw));
        }
      }
      env.field.assign(mu.times().nodes(), std::vector<double>(n, 0.0));
      for (std::size_t k = 0; k < mu.times().nodes(); ++k) {
        const auto w = mu.at(k);
        for (std::size_t i = 0; i < n; ++i) {
          double acc = 0.0;
          for (std::size_t z = 0; z < n; ++z) acc += kern[i * n + z] * w[z];
          env.field[k][i] = acc;
        }
      }
    };
  }

  LyapunovData ly = power_lyapunov(s, p, cost);
  const double dd = d;
  ly.c_l = std::max(
      0.1, 1.01 * radial_sup([&](double rr) {
        return power_lhs(rr, a, beta, 0.0, q, cost, s, dd) / (1.0 + std::pow(1.0 + rr * rr, 0.5 * s));
      }));
  ly.c_g = std::max(cg, 0.01);
  ly.c_f = std::max(crowd * norm + cx, 0.01);
  ly.c_h = ch;
  const double c2 = std::max(0.1, 1.01 * (a + std::abs(beta) + q * q / (4.0 * cost)));
  ly.c1 = [beta](const MeasureCurve&) { return std::max(0.1, -beta); };
  ly.c2 = [c2](const MeasureCurve&) { return c2; };
  return CoefficientSet("ex2.3", d, std::move(r), std::move(controls), std::move(ly),
                        crowd != 0.0 ? DependenceMode::kMarginal : DependenceMode::kNone);
}

CoefficientSet make_ex24(const ParamReader& pr, int d, ControlSet controls, double horizon_hint) {
  const double s = pr.num("s"), p = pr.num("p"), a = pr.num("a"), beta = pr.num("beta"), q = pr.num("q");
  const double cost = pr.num("cost"), kappa = pr.num("kappa"), theta = pr.num("theta"), cx = pr.num("cx");
  const double cg = pr.num("cg"), ch = pr.num("c_h");
  const std::string phi_name = pr.text("phi"), zeta_name = pr.text("zeta");
  pr.require(p >= 1.0 && p < s && s <= 2.0, "need 1 <= p < s <= 2");
  pr.require(phi_name == "identity" || phi_name == "tanh", "phi must be identity or tanh");
  pr.require(zeta_name == "one" || zeta_name == "x" || zeta_name == "abs", "zeta must be one, x or abs");
  pr.require(phi_name != "identity" || zeta_name == "one", "phi = identity requires zeta = one (bounded functional)");
  pr.require(a >= 0.0 && q >= 0.0 && kappa >= 0.0 && theta >= 0.0 && cx >= 0.0 && cg >= 0.0,
             "a, q, kappa, theta, cx, cg must be >= 0");
  pr.require(cost > 0.0, "cost must be > 0");
  pr.require(ch > 1.0, "c_h must be > 1");
  const int d1 = controls.dim();
  const bool identity = phi_name == "identity";
  const double phi_max = identity ? horizon_hint : 1.0;

  CoefficientRules r;
  r.a = [a, d](const SVec&, std::size_t, const Environment&) { return eye(d, d, a); };
  r.b = [beta, kappa, d](const SVec& x, std::size_t, const Environment& env) -> SVec {
    return -beta * x + kappa * env.scalars[0] * unit(d);
  };
  r.q = [q, d, d1](const SVec&, std::size_t, const Environment&) { return eye(d, d1, q); };
  r.f = [cost, cx, theta, d](const SVec& u, const SVec& x, std::size_t, const Environment& env) {
    return cost * u.squaredNorm() + cx * (x - theta * env.scalars[0] * unit(d)).norm();
  };
  r.g = [cg](const SVec& x, const Environment&) { return cg * x.norm(); };
  r.features = [identity, zeta_name](const MeasureCurve& mu, Environment& env) {
    const StateGrid& g = mu.grid();
    std::vector<double> zeta(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      const SVec x = g.node(i);
      zeta[i] = zeta_name == "one" ? 1.0 : zeta_name == "x" ? x(0) : x.norm();
    }
    // Trapezoid rule in time of int zeta d mu_t.
    const TimeGrid& tg = mu.times();
    double total = 0.0;
    for (std::size_t k = 0; k < tg.nodes(); ++k) {
      const auto w = mu.at(k);
      double m = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) m += zeta[i] * w[i];
      total += (k == 0 || k + 1 == tg.nodes() ? 0.5 : 1.0) * tg.dt() * m;
    }
    env.scalars = {identity ? total : std::tanh(total), total};
  };

  LyapunovData ly = power_lyapunov(s, p, cost);
  const double dd = d;
  ly.c_l = std::max(
      0.1, 1.01 * radial_sup([&](double rr) {
        return power_lhs(rr, a, beta, kappa * phi_max, q, cost, s, dd) / (1.0 + std::pow(1.0 + rr * rr, 0.5 * s));
      }));
  ly.c_g = std::max(cg, 0.01);
  ly.c_f = std::max(cx * (1.0 + theta * phi_max), 0.01);
  ly.c_h = ch;
  const double c2 = std::max(0.1, 1.01 * (a + std::abs(beta) + kappa * phi_max + q * q / (4.0 * cost)));
  ly.c1 = [beta](const MeasureCurve&) { return std::max(0.1, -beta); };
  ly.c2 = [c2](const MeasureCurve&) { return c2; };
  const bool coupled = kappa != 0.0 || theta != 0.0;
  return CoefficientSet("ex2.4", d, std::move(r), std::move(controls), std::move(ly),
                        coupled ? DependenceMode::kWholeCurve : DependenceMode::kNone);
}

}  // namespace

double radial_sup(const std::function<double(double)>& fn, double r_max) {
  double best = -std::numeric_limits<double>::infinity();
  const double lin_end = std::min(r_max, 20.0);
  for (int i = 0; i <= 20000; ++i) best = std::max(best, fn(lin_end * i / 20000.0));
  for (double rr = lin_end; rr <= r_max; rr *= 1.001) best = std::max(best, fn(rr));
  return best;
}

std::vector<std::string> catalog_names() { return {"ex2.1", "ex2.2", "ex2.3", "ex2.4"}; }

Params catalog_defaults(const std::string& name) {
  if (name == "ex2.1") {
    return {{"a", "0.5"},  {"beta", "1"},    {"kappa", "0"}, {"q", "1"},  {"cost", "1"},
            {"cx", "0.5"}, {"theta", "0"},   {"cg", "0.5"},  {"c_h", "2"}};
  }
  if (name == "ex2.2") {
    return {{"m", "2"}, {"p", "1"},    {"eps", "0.75"}, {"a", "0.5"}, {"b0", "0.2"},
            {"q", "1"}, {"cost", "1"}, {"cx", "0.5"},   {"cg", "0.5"}, {"c_h", "2"}};
  }
  if (name == "ex2.3") {
    return {{"s", "2"},    {"p", "1"},     {"a", "0.2"},  {"beta", "0.5"},     {"q", "1"},   {"cost", "1"},
            {"crowd", "0.2"}, {"bandwidth", "0.5"}, {"cx", "0"}, {"cg", "0.5"}, {"c_h", "2"}};
  }
  if (name == "ex2.4") {
    return {{"s", "2"},     {"p", "1"},        {"a", "0.5"},     {"beta", "1"},    {"q", "1"},    {"cost", "1"},
            {"kappa", "0.5"}, {"theta", "0.5"}, {"cx", "0.5"}, {"cg", "0.5"}, {"c_h", "2"}, {"phi", "tanh"},
            {"zeta", "x"},  {"horizon", "1"}};
  }
  throw ValidationError("unknown catalog entry '" + name + "'");
}

CoefficientSet example_catalog(const std::string& name, const Params& params, int state_dim, ControlSet controls) {
  if (state_dim != 1 && state_dim != 2) throw DimensionError("catalog: state dimension must be 1 or 2");
  const ParamReader pr(name, params);
  if (name == "ex2.1") return make_ex21(pr, state_dim, std::move(controls));
  if (name == "ex2.2") return make_ex22(pr, state_dim, std::move(controls));
  if (name == "ex2.3") return make_ex23(pr, state_dim, std::move(controls));
  const double horizon = pr.num("horizon");
  pr.require(horizon > 0.0, "horizon must be > 0");
  return make_ex24(pr, state_dim, std::move(controls), horizon);
}

}  // namespace mfg
