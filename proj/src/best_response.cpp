#include "mfg/best_response.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace mfg {

namespace {

// Calls fn(l, T(i, l)) for the explicit transition row of node i under control u.
template <class Fn>
void for_each_transition(const GeneratorStep& gs, std::size_t i, const SVec& u, double dt, Fn&& fn) {
  fn(i, 1.0 - dt * gs.outflow(i, u));
  for (std::size_t e = gs.row_start[i]; e < gs.row_start[i + 1]; ++e) {
    const Jump& jump = gs.jumps[e];
    const double r = dt * jump.rate(u);
    if (r != 0.0) fn(jump.to, r);
  }
}

void check_same_grids(const DiscreteGenerator& gen, const OccupationMeasure& pi) {
  if (!(gen.grid() == pi.grid()) || !(gen.times() == pi.times())) {
    throw DimensionError("occupation measure and generator use different grids");
  }
}

double finite_or_throw(double v, const char* what, std::size_t k, std::size_t i) {
  if (!std::isfinite(v)) {
    throw NumericalError(std::string(what) + " is not finite at step " + std::to_string(k) + ", node " +
                         std::to_string(i));
  }
  return v;
}

double terminal_cost(const FrozenCoefficients& fc, const StateGrid& g, std::span<const double> m) {
  double c = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (m[i] != 0.0) c += finite_or_throw(fc.g(g.node(i)), "g", 0, i) * m[i];
  }
  return c;
}

}  // namespace

void check_control_cfl(const DiscreteGenerator& gen, std::span<const SVec> controls, double cfl_max) {
  const double dt = gen.times().dt();
  for (std::size_t k = 0; k < gen.steps(); ++k) {
    const GeneratorStep& gs = gen.step(k);
    for (std::size_t j = 0; j < controls.size(); ++j) {
      for (std::size_t i = 0; i < gs.rows(); ++i) {
        const double out = dt * gs.outflow(i, controls[j]);
        if (out > cfl_max) {
          std::ostringstream os;
          os << "explicit step violates CFL: dt * |G_ii| = " << out << " > " << cfl_max << " at node " << i
             << ", step " << k << ", control point " << j;
          throw StepSizeError(os.str());
        }
      }
    }
  }
}

MeasureCurve occupation_curve(const DiscreteGenerator& gen, const OccupationMeasure& pi) {
  check_same_grids(gen, pi);
  const std::size_t n = pi.grid().size(), steps = pi.times().steps(), m = pi.num_controls();
  std::vector<double> data(pi.times().nodes() * n, 0.0);
  for (std::size_t k = 0; k < steps; ++k) {
    const auto mk = pi.marginal(k);
    std::copy(mk.begin(), mk.end(), data.begin() + static_cast<std::ptrdiff_t>(k * n));
  }
  const GeneratorStep& gs = gen.step(steps - 1);
  const double dt = pi.times().dt();
  double* last = data.data() + steps * n;
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      const double w = pi.weight(steps - 1, j, i);
      if (w == 0.0) continue;
      for_each_transition(gs, i, pi.controls()[j], dt, [&](std::size_t l, double t) { last[l] += t * w; });
    }
  }
  return MeasureCurve(pi.grid(), pi.times(), std::move(data));
}

OccupationMeasure occupation_from_policy(const DiscreteGenerator& gen, std::vector<SVec> controls,
                                         std::span<const double> nu, std::span<const double> policy) {
  const StateGrid& g = gen.grid();
  const TimeGrid& t = gen.times();
  const std::size_t n = g.size(), m = controls.size(), steps = t.steps();
  if (nu.size() != n) throw DimensionError("initial weights do not match the grid");
  if (policy.size() != steps * n * m) throw DimensionError("policy needs K x n^d x m probabilities");
  require_probability(nu, "initial distribution");
  std::vector<double> w(steps * m * n, 0.0), cur(nu.begin(), nu.end()), next(n);
  for (std::size_t k = 0; k < steps; ++k) {
    std::fill(next.begin(), next.end(), 0.0);
    const GeneratorStep& gs = gen.step(k);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        const double p = policy[(k * n + i) * m + j];
        if (!(p >= 0.0)) throw ValidationError("policy probabilities must be nonnegative");
        const double mass = cur[i] * p;
        w[(k * m + j) * n + i] = mass;
        if (mass == 0.0) continue;
        for_each_transition(gs, i, controls[j], t.dt(), [&](std::size_t l, double tr) { next[l] += tr * mass; });
      }
    }
    std::swap(cur, next);
  }
  return OccupationMeasure(g, t, std::move(controls), std::move(w));
}

double evaluate_cost(const DiscreteGenerator& gen, const FrozenCoefficients& fc, const OccupationMeasure& pi) {
  check_same_grids(gen, pi);
  const StateGrid& g = pi.grid();
  const TimeGrid& t = pi.times();
  double running = 0.0;
  for (std::size_t k = 0; k < t.steps(); ++k) {
    for (std::size_t j = 0; j < pi.num_controls(); ++j) {
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double w = pi.weight(k, j, i);
        if (w != 0.0) running += finite_or_throw(fc.f(pi.controls()[j], g.node(i), k), "f", k, i) * w;
      }
    }
  }
  const MeasureCurve curve = occupation_curve(gen, pi);
  return t.dt() * running + terminal_cost(fc, g, curve.at(t.steps()));
}

double evaluate_cost(const CoefficientSet& coeffs, const MeasureCurve& sigma, const OccupationMeasure& pi) {
  const DiscreteGenerator gen(coeffs, sigma);
  return evaluate_cost(gen, coeffs.freeze(sigma), pi);
}

double evaluate_cost(const FrozenCoefficients& fc, const ControlField& u, const MeasureCurve& mu) {
  const StateGrid& g = mu.grid();
  const TimeGrid& t = mu.times();
  if (!(u.grid() == g) || !(u.times() == t)) throw DimensionError("evaluate_cost: control and curve grids differ");
  double running = 0.0;
  for (std::size_t k = 0; k < t.steps(); ++k) {
    const auto mk = mu.at(k);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (mk[i] != 0.0) running += finite_or_throw(fc.f(u.at(k, i), g.node(i), k), "f", k, i) * mk[i];
    }
  }
  return t.dt() * running + terminal_cost(fc, g, mu.at(t.steps()));
}

double evaluate_cost(const CoefficientSet& coeffs, const MeasureCurve& sigma, const ControlField& u,
                     const MeasureCurve& mu) {
  return evaluate_cost(coeffs.freeze(sigma), u, mu);
}

double default_radius(const CoefficientSet& coeffs, std::span<const double> nu, const StateGrid& grid,
                      double horizon) {
  if (nu.size() != grid.size()) throw DimensionError("initial weights do not match the grid");
  const LyapunovData& ly = coeffs.lyapunov();
  double v_nu = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) v_nu += ly.v(grid.node(i)) * nu[i];
  const double theta =
      (1.0 + ly.c_l * horizon + ly.c_f * horizon + ly.c_g + ly.c_f + v_nu) * std::exp(ly.c_l * horizon);
  return 4.0 * theta;
}

ConstraintActivity constraint_activity(const DiscreteGenerator& gen, const LyapunovData& lyap,
                                       const OccupationMeasure& pi, double r) {
  check_same_grids(gen, pi);
  const StateGrid& g = pi.grid();
  const TimeGrid& t = pi.times();
  const std::size_t n = g.size();
  ConstraintActivity act;
  const MeasureCurve curve = occupation_curve(gen, pi);
  // Conservation: recompute each next slice from the transitions.
  for (std::size_t k = 0; k + 1 < t.steps(); ++k) {
    std::vector<double> next(n, 0.0);
    for (std::size_t j = 0; j < pi.num_controls(); ++j) {
      for (std::size_t i = 0; i < n; ++i) {
        const double w = pi.weight(k, j, i);
        if (w == 0.0) continue;
        for_each_transition(gen.step(k), i, pi.controls()[j], t.dt(), [&](std::size_t l, double tr) { next[l] += tr * w; });
      }
    }
    const auto mk1 = curve.at(k + 1);
    for (std::size_t l = 0; l < n; ++l) act.fpk_residual = std::max(act.fpk_residual, std::abs(mk1[l] - next[l]));
  }
  act.v_moment = v_moments(curve, lyap);
  const double m = lyap.big_m();
  const double slack = 1e-8;
  for (std::size_t k = 0; k < t.nodes(); ++k) {
    const double bound = r * std::exp(m * t.time(k));
    act.v_bound.push_back(bound);
    const double gap = bound - act.v_moment[k];
    if (gap < -slack * (1.0 + bound)) act.in_budget = false;
    if (std::abs(gap) <= slack * (1.0 + bound)) act.v_active = true;
  }
  for (std::size_t k = 0; k < t.steps(); ++k) {
    for (std::size_t j = 0; j < pi.num_controls(); ++j) {
      const double hj = lyap.h(pi.controls()[j].norm());
      for (std::size_t i = 0; i < n; ++i) act.control_cost += t.dt() * hj * pi.weight(k, j, i);
    }
  }
  act.control_budget = lyap.gamma(t.horizon()) * r;
  const double hgap = act.control_budget - act.control_cost;
  if (hgap < -slack * (1.0 + act.control_budget)) act.in_budget = false;
  if (std::abs(hgap) <= slack * (1.0 + act.control_budget)) act.h_active = true;
  return act;
}

ControlField project_markovian(const OccupationMeasure& pi, const ControlSet& controls) {
  if (controls.dim() != pi.controls().front().size()) throw DimensionError("control set dimension differs");
  const ConditionalFamily fam = conditional_family(pi);
  const StateGrid& g = pi.grid();
  const TimeGrid& t = pi.times();
  const SVec u0 = controls.points()[controls.default_index()];
  ControlField u = ControlField::constant(g, t, u0);
  for (std::size_t k = 0; k < t.steps(); ++k) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (fam.defined(k, i)) u.set(k, i, controls.project(fam.mean(k, i)));
    }
  }
  return u;
}

namespace {

std::string witness_report(const ConstraintActivity& act, double r) {
  std::ostringstream os;
  os << std::setprecision(6) << "R = " << r << " is too small: the constant default control breaks";
  bool first = true;
  for (std::size_t k = 0; k < act.v_moment.size(); ++k) {
    if (act.v_moment[k] > act.v_bound[k] * (1.0 + 1e-8) + 1e-8) {
      os << (first ? " " : ", ") << "int V d mu_" << k << " = " << act.v_moment[k] << " > " << act.v_bound[k];
      first = false;
      break;
    }
  }
  if (act.control_cost > act.control_budget * (1.0 + 1e-8) + 1e-8) {
    os << (first ? " " : ", ") << "control budget " << act.control_cost << " > gamma R = " << act.control_budget;
  }
  return os.str();
}

struct Projection {
  ControlField control;
  SolveReport report;
  double cost;
};

Projection project_and_resolve(const DiscreteGenerator& gen, const CoefficientSet& coeffs,
                               const FrozenCoefficients& fc, std::span<const double> nu,
                               const OccupationMeasure& pi, double cfl_max) {
  ControlField u = project_markovian(pi, coeffs.controls());
  FpkOptions fo;
  fo.cfl_max = cfl_max;
  SolveReport rep = solve_fpk(gen, coeffs.lyapunov(), u, nu, fo);
  const double cost = evaluate_cost(fc, u, rep.solution);
  return {std::move(u), std::move(rep), cost};
}

}  // namespace

BestResponseResult solve_lp(const CoefficientSet& coeffs, const MeasureCurve& sigma, std::span<const double> nu,
                            const BestResponseOptions& opts, const lp::Basis* warm_start) {
  const StateGrid& g = sigma.grid();
  const TimeGrid& t = sigma.times();
  const std::size_t n = g.size(), steps = t.steps();
  if (nu.size() != n) throw DimensionError("initial weights do not match the grid");
  require_probability(nu, "initial distribution");
  const DiscreteGenerator gen(coeffs, sigma, opts.stencil);
  const FrozenCoefficients fc = coeffs.freeze(sigma);
  const LyapunovData& ly = coeffs.lyapunov();
  const std::vector<SVec>& pts = coeffs.controls().points();
  const std::size_t m = pts.size();
  check_control_cfl(gen, pts, opts.cfl_max);
  const double r = opts.r > 0.0 ? opts.r : default_radius(coeffs, nu, g, t.horizon());
  const double dt = t.dt();

  // Feasibility witness: the constant default control.
  std::vector<double> witness_policy(steps * n * m, 0.0);
  for (std::size_t c = 0; c < steps * n; ++c) witness_policy[c * m + coeffs.controls().default_index()] = 1.0;
  const OccupationMeasure witness = occupation_from_policy(gen, pts, nu, witness_policy);
  if (opts.enforce_apriori) {
    const ConstraintActivity wa = constraint_activity(gen, ly, witness, r);
    if (!wa.in_budget) throw InfeasibleError(witness_report(wa, r));
  }

  lp::Problem prob;
  auto var = [&](std::size_t k, std::size_t j, std::size_t i) { return (k * m + j) * n + i; };
  prob.cost.assign(steps * m * n, 0.0);
  std::vector<double> gx(n), vx(n);
  for (std::size_t i = 0; i < n; ++i) {
    gx[i] = finite_or_throw(fc.g(g.node(i)), "g", steps, i);
    vx[i] = ly.v(g.node(i));
  }
  for (std::size_t k = 0; k < steps; ++k) {
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t i = 0; i < n; ++i) {
        double c = dt * finite_or_throw(fc.f(pts[j], g.node(i), k), "f", k, i);
        if (k + 1 == steps) {
          for_each_transition(gen.step(k), i, pts[j], dt, [&](std::size_t l, double tr) { c += tr * gx[l]; });
        }
        prob.cost[var(k, j, i)] = c;
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<lp::Term> terms;
    for (std::size_t j = 0; j < m; ++j) terms.push_back({var(0, j, i), 1.0});
    prob.add_row(std::move(terms), lp::Sense::kEqual, nu[i]);
  }
  for (std::size_t k = 1; k < steps; ++k) {
    std::vector<std::vector<lp::Term>> rows(n);
    for (std::size_t l = 0; l < n; ++l) {
      for (std::size_t j = 0; j < m; ++j) rows[l].push_back({var(k, j, l), 1.0});
    }
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t i = 0; i < n; ++i) {
        for_each_transition(gen.step(k - 1), i, pts[j], dt,
                            [&](std::size_t l, double tr) { rows[l].push_back({var(k - 1, j, i), -tr}); });
      }
    }
    for (auto& row : rows) prob.add_row(std::move(row), lp::Sense::kEqual, 0.0);
  }
  if (opts.enforce_apriori) {
    const double big_m = ly.big_m();
    for (std::size_t k = 1; k < steps; ++k) {
      std::vector<lp::Term> terms;
      for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t i = 0; i < n; ++i) terms.push_back({var(k, j, i), vx[i]});
      }
      prob.add_row(std::move(terms), lp::Sense::kLessEqual, r * std::exp(big_m * t.time(k)));
    }
    std::vector<lp::Term> last;
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t i = 0; i < n; ++i) {
        double tv = 0.0;
        for_each_transition(gen.step(steps - 1), i, pts[j], dt, [&](std::size_t l, double tr) { tv += tr * vx[l]; });
        last.push_back({var(steps - 1, j, i), tv});
      }
    }
    prob.add_row(std::move(last), lp::Sense::kLessEqual, r * std::exp(big_m * t.horizon()));
    std::vector<lp::Term> budget;
    for (std::size_t k = 0; k < steps; ++k) {
      for (std::size_t j = 0; j < m; ++j) {
        const double hj = dt * ly.h(pts[j].norm());
        if (hj == 0.0) continue;
        for (std::size_t i = 0; i < n; ++i) budget.push_back({var(k, j, i), hj});
      }
    }
    prob.add_row(std::move(budget), lp::Sense::kLessEqual, ly.gamma(t.horizon()) * r);
  }

  lp::Solution sol = lp::solve(prob, opts.lp, warm_start);
  if (sol.status != lp::Status::kOptimal && warm_start != nullptr) sol = lp::solve(prob, opts.lp, nullptr);
  if (sol.status == lp::Status::kInfeasible) {
    throw InfeasibleError("best-response LP reported infeasible although the default-control witness is feasible");
  }
  if (sol.status != lp::Status::kOptimal) throw NumericalError("best-response LP: " + lp::to_string(sol.status));

  // Rebuild the measure from the optimal policy so conservation holds to rounding.
  std::vector<double> policy(steps * n * m, 0.0);
  bool deterministic = true;
  for (std::size_t k = 0; k < steps; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      double total = 0.0, top = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        const double w = std::max(sol.x[var(k, j, i)], 0.0);
        total += w;
        top = std::max(top, w);
      }
      double* p = policy.data() + (k * n + i) * m;
      if (total > 0.0) {
        for (std::size_t j = 0; j < m; ++j) p[j] = std::max(sol.x[var(k, j, i)], 0.0) / total;
        if (total > 1e-12 && top < (1.0 - 1e-9) * total) deterministic = false;
      } else {
        p[coeffs.controls().default_index()] = 1.0;
      }
    }
  }
  OccupationMeasure pi = occupation_from_policy(gen, pts, nu, policy);
  MeasureCurve relaxed = occupation_curve(gen, pi);
  const double relaxed_cost = evaluate_cost(gen, fc, pi);
  ConstraintActivity act = constraint_activity(gen, ly, pi, r);
  Projection proj = project_and_resolve(gen, coeffs, fc, nu, pi, opts.cfl_max);
  return BestResponseResult{std::move(pi),
                            std::move(relaxed),
                            std::move(proj.control),
                            std::move(proj.report.solution),
                            relaxed_cost,
                            proj.cost,
                            r,
                            deterministic,
                            std::move(act),
                            std::move(sol.basis),
                            sol.pivots};
}

ResolveResult resolve_and_compare(const CoefficientSet& coeffs, const MeasureCurve& sigma, std::span<const double> nu,
                                  const OccupationMeasure& pi, double cfl_max) {
  const DiscreteGenerator gen(coeffs, sigma);
  const FrozenCoefficients fc = coeffs.freeze(sigma);
  check_same_grids(gen, pi);
  const double relaxed = evaluate_cost(gen, fc, pi);
  Projection proj = project_and_resolve(gen, coeffs, fc, nu, pi, cfl_max);
  return {std::move(proj.control), std::move(proj.report), relaxed, proj.cost};
}

void write_occupation_csv(std::ostream& os, const OccupationMeasure& pi) {
  os << "k,j,i,weight\n" << std::setprecision(17);
  for (std::size_t k = 0; k < pi.times().steps(); ++k) {
    for (std::size_t j = 0; j < pi.num_controls(); ++j) {
      for (std::size_t i = 0; i < pi.grid().size(); ++i) {
        const double w = pi.weight(k, j, i);
        if (w != 0.0) os << k << "," << j << "," << i << "," << w << "\n";
      }
    }
  }
}

void write_best_response_summary(std::ostream& os, const BestResponseResult& res) {
  const ConstraintActivity& a = res.activity;
  os << std::setprecision(17);
  os << "relaxed_cost = " << res.relaxed_cost << "\n";
  os << "projected_cost = " << res.projected_cost << "\n";
  os << "r = " << res.r << "\n";
  os << "deterministic = " << (res.deterministic ? "true" : "false") << "\n";
  os << "fpk_residual = " << a.fpk_residual << "\n";
  double worst = 0.0;
  for (std::size_t k = 0; k < a.v_moment.size(); ++k) worst = std::max(worst, a.v_moment[k] / a.v_bound[k]);
  os << "v_envelope_ratio = " << worst << "\n";
  os << "v_active = " << (a.v_active ? "true" : "false") << "\n";
  os << "control_cost = " << a.control_cost << "\n";
  os << "control_budget = " << a.control_budget << "\n";
  os << "h_active = " << (a.h_active ? "true" : "false") << "\n";
  os << "in_budget = " << (a.in_budget ? "true" : "false") << "\n";
  os << "lp_pivots = " << res.pivots << "\n";
}

}  // namespace mfg
