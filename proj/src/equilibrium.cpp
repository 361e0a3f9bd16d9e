#include "mfg/equilibrium.hpp"

#include "mfg/hypotheses.hpp"
#include "mfg/io.hpp"
#include "mfg/transport.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>

namespace mfg {

std::string to_string(Averaging a) { return a == Averaging::kDampedPicard ? "damped-picard" : "fictitious-play"; }

Averaging parse_averaging(const std::string& s) {
  if (s == "damped-picard") return Averaging::kDampedPicard;
  if (s == "fictitious-play") return Averaging::kFictitiousPlay;
  throw ValidationError("unknown averaging mode '" + s + "' (damped-picard or fictitious-play)");
}

void FixedPointConfig::validate() const {
  if (!(damping > 0.0 && damping <= 1.0)) throw ValidationError("damping must lie in (0, 1]");
  if (!(tolerance > 0.0)) throw ValidationError("fixed-point tolerance must be positive");
  if (max_iterations < 1) throw ValidationError("max_iterations must be at least 1");
}

namespace {

double curve_gap(const MeasureCurve& a, const MeasureCurve& b) {
  double gap = 0.0;
  for (std::size_t k = 0; k < a.times().nodes(); ++k) gap = std::max(gap, kr_distance(a.at(k), b.at(k), a.grid()));
  return gap;
}

ControlField default_control(const CoefficientSet& coeffs, const StateGrid& g, const TimeGrid& t) {
  const ControlSet& u = coeffs.controls();
  return ControlField::constant(g, t, u.points()[u.default_index()]);
}

MeasureCurve initial_curve(const CoefficientSet& coeffs, const StateGrid& g, const TimeGrid& t,
                           std::span<const double> nu, double cfl_max) {
  FpkOptions fo;
  fo.cfl_max = cfl_max;
  return solve_fpk(coeffs, MeasureCurve::constant(g, t, nu), default_control(coeffs, g, t), nu, fo).solution;
}

double control_cost(const MeasureCurve& mu, const ControlField& u, const LyapunovData& lyap) {
  const TimeGrid& t = mu.times();
  double c = 0.0;
  for (std::size_t k = 0; k < t.steps(); ++k) {
    for (std::size_t i = 0; i < mu.grid().size(); ++i) {
      const double w = mu.weight(k, i);
      if (w != 0.0) c += t.dt() * lyap.h(u.at(k, i).norm()) * w;
    }
  }
  return c;
}

}  // namespace

EquilibriumResult iterate(const CoefficientSet& coeffs, const StateGrid& grid, const TimeGrid& times,
                          std::span<const double> nu, const FixedPointConfig& config) {
  config.validate();
  if (nu.size() != grid.size()) throw DimensionError("initial weights do not match the grid");
  MeasureCurve sigma = initial_curve(coeffs, grid, times, nu, config.best_response.cfl_max);
  std::vector<std::string> warnings;
  if (config.check_hypotheses) {
    for (const auto& rep : check_all(coeffs, sigma, default_sample(coeffs, sigma))) {
      if (!rep.pass()) warnings.push_back("hypothesis " + rep.hypothesis + " fails on the default sample");
    }
  }

  std::vector<IterationRecord> history;
  std::optional<BestResponseResult> best;
  std::optional<MeasureCurve> best_sigma;
  double best_gap = std::numeric_limits<double>::infinity();
  std::size_t best_iter = 0;
  bool converged = false;
  lp::Basis basis;
  for (std::size_t it = 0; it < config.max_iterations; ++it) {
    BestResponseResult br = solve_lp(coeffs, sigma, nu, config.best_response, it == 0 ? nullptr : &basis);
    basis = br.basis;
    if (!std::isfinite(br.relaxed_cost) || !std::isfinite(br.projected_cost)) {
      throw NumericalError("non-finite best-response cost at iteration " + std::to_string(it));
    }
    const double gap = curve_gap(br.relaxed_curve, sigma);
    history.push_back({it, gap, br.relaxed_cost, br.projected_cost});
    const double lambda =
        it == 0 ? 1.0 : (config.mode == Averaging::kDampedPicard ? config.damping : 1.0 / static_cast<double>(it + 1));
    MeasureCurve next = sigma.blend(br.relaxed_curve, lambda);
    if (gap < best_gap) {
      best_gap = gap;
      best_iter = it;
      best_sigma = sigma;
      best = std::move(br);
    }
    if (gap <= config.tolerance) {
      converged = true;
      break;
    }
    sigma = std::move(next);
  }
  EquilibriumResult res{*best_sigma,         best->projected_curve, best->control, std::move(history), best_iter,
                        best_gap,            converged,             best->r,       std::move(warnings), std::nullopt,
                        std::nullopt};
  FpkOptions fo;
  fo.cfl_max = config.best_response.cfl_max;
  const SolveReport rep = solve_fpk(coeffs, res.mu, res.control, nu, fo);
  res.apriori = apriori_monitor(rep, coeffs.lyapunov(), res.r, res.control);
  return res;
}

std::vector<ControlField> make_challengers(const CoefficientSet& coeffs, const MeasureCurve& mu,
                                           const ControlField& u, std::size_t count, std::uint64_t seed) {
  const ControlSet& uset = coeffs.controls();
  const StateGrid& g = u.grid();
  const TimeGrid& t = u.times();
  const auto& pts = uset.points();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, pts.size() - 1), blocks(1, 4), step(0, t.steps() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const FrozenCoefficients fc = coeffs.freeze(mu);
  std::vector<ControlField> out;
  const std::size_t n_random = (count * 2) / 5, n_perturb = (count * 2) / 5;
  for (std::size_t c = 0; c < count; ++c) {
    ControlField v = u;
    if (c < n_random) {
      const std::size_t bt = blocks(rng), bx = blocks(rng);
      std::vector<SVec> values;
      for (std::size_t b = 0; b < bt * bx; ++b) {
        const double s = unit(rng);
        values.push_back(uset.project((1.0 - s) * pts[pick(rng)] + s * pts[pick(rng)]));
      }
      for (std::size_t k = 0; k < t.steps(); ++k) {
        const std::size_t tb = std::min(bt - 1, k * bt / t.steps());
        for (std::size_t i = 0; i < g.size(); ++i) {
          const std::size_t xb = std::min(bx - 1, g.multi_index(i)[0] * bx / g.points_per_axis());
          v.set(k, i, values[tb * bx + xb]);
        }
      }
    } else if (c < n_random + n_perturb) {
      const double scale = std::array<double, 4>{0.05, 0.1, 0.2, 0.5}[c % 4];
      for (std::size_t k = 0; k < t.steps(); ++k) {
        for (std::size_t i = 0; i < g.size(); ++i) {
          SVec p = u.at(k, i);
          for (Eigen::Index q = 0; q < p.size(); ++q) p(q) += scale * normal(rng);
          v.set(k, i, uset.project(p));
        }
      }
    } else {
      // Deviate at one step to the control minimizing the running cost at each node.
      const std::size_t k = step(rng);
      for (std::size_t i = 0; i < g.size(); ++i) {
        double lo = std::numeric_limits<double>::infinity();
        for (const SVec& p : pts) {
          const double f = fc.f(p, g.node(i), k);
          if (f < lo) {
            lo = f;
            v.set(k, i, p);
          }
        }
      }
    }
    out.push_back(std::move(v));
  }
  return out;
}

CertificateReport certify(const CoefficientSet& coeffs, const MeasureCurve& mu, const ControlField& u,
                          const std::vector<ControlField>& challengers, std::span<const double> nu,
                          double tolerance) {
  const DiscreteGenerator gen(coeffs, mu);
  const FrozenCoefficients fc = coeffs.freeze(mu);
  const StateGrid& g = mu.grid();
  u.require_in(coeffs.controls());
  CertificateReport rep;
  const SolveReport own = solve_fpk(gen, coeffs.lyapunov(), u, nu);
  rep.candidate_cost = evaluate_cost(fc, u, own.solution);
  std::vector<double> psi1(g.size()), psi2(g.size()), psi3(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const SVec x = g.node(i);
    psi1[i] = x.sum();
    psi2[i] = x.squaredNorm();
    psi3[i] = std::cos(x.sum());
  }
  for (const auto* psi : {&psi1, &psi2, &psi3}) {
    rep.fpk_residual = std::max(rep.fpk_residual, weak_residual(gen, u, own.solution, *psi, Scheme::kExplicit));
  }
  rep.consistency_gap = curve_gap(own.solution, mu);
  rep.tolerance = tolerance >= 0.0 ? tolerance : 1e-3 * (1.0 + std::abs(rep.candidate_cost));
  double best = rep.candidate_cost;
  for (const ControlField& v : challengers) {
    v.require_in(coeffs.controls());
    const SolveReport flow = solve_fpk(gen, coeffs.lyapunov(), v, nu);
    const double c = evaluate_cost(fc, v, flow.solution);
    rep.costs.push_back(c);
    rep.gaps.push_back(rep.candidate_cost - c);
    best = std::min(best, c);
  }
  rep.exploitability = std::max(0.0, rep.candidate_cost - best);
  rep.pass = rep.exploitability <= rep.tolerance && rep.fpk_residual <= 1e-8;
  return rep;
}

double modulus_constant(const DiscreteGenerator& gen, std::span<const double> psi) {
  if (psi.size() != gen.grid().size()) throw DimensionError("test field does not match the grid");
  double c = 0.0;
  for (std::size_t k = 0; k < gen.steps(); ++k) {
    const GeneratorStep& gs = gen.step(k);
    for (std::size_t i = 0; i < gs.rows(); ++i) {
      double base = 0.0;
      std::array<double, 2> per{0.0, 0.0};
      for (std::size_t e = gs.row_start[i]; e < gs.row_start[i + 1]; ++e) {
        const Jump& j = gs.jumps[e];
        const double diff = psi[j.to] - psi[i];
        base += j.base * diff;
        per[0] += j.per_u[0] * diff;
        per[1] += j.per_u[1] * diff;
      }
      c = std::max({c, std::abs(base), std::hypot(per[0], per[1])});
    }
  }
  return c;
}

ModulusResult modulus_diagnostic(const MeasureCurve& mu, std::span<const double> psi, double c, double r,
                                 const LyapunovData& lyap) {
  const StateGrid& g = mu.grid();
  const TimeGrid& t = mu.times();
  if (psi.size() != g.size()) throw DimensionError("test field does not match the grid");
  std::vector<double> moment(t.nodes(), 0.0);
  for (std::size_t k = 0; k < t.nodes(); ++k) {
    for (std::size_t i = 0; i < g.size(); ++i) moment[k] += psi[i] * mu.weight(k, i);
  }
  const double budget = lyap.gamma(t.horizon()) * r;
  ModulusResult res;
  for (std::size_t s = 0; s < t.nodes(); ++s) {
    for (std::size_t k = s + 1; k < t.nodes(); ++k) {
      const double v = t.time(k) - t.time(s);
      const double omega = c * v + c * v * h_inverse(lyap.h, budget / v);
      const double lhs = std::abs(moment[k] - moment[s]);
      const double ratio = omega > 0.0 ? lhs / omega : (lhs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
      if (ratio > res.worst_ratio) {
        res.worst_ratio = ratio;
        res.worst_s = s;
        res.worst_t = k;
      }
      if (lhs > omega * (1.0 + 1e-12) + 1e-14) res.pass = false;
    }
  }
  return res;
}

SweepResult apriori_sweep(const CoefficientSet& coeffs, const StateGrid& grid, const TimeGrid& times,
                          std::span<const double> nu, const std::vector<double>& ladder, std::size_t responses,
                          const BestResponseOptions& br) {
  if (ladder.empty()) throw ValidationError("apriori_sweep: empty ladder");
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    if (!(ladder[i] > 0.0) || (i > 0 && !(ladder[i] > ladder[i - 1]))) {
      throw ValidationError("apriori_sweep: ladder must be positive and strictly increasing");
    }
  }
  const LyapunovData& ly = coeffs.lyapunov();
  const double m = ly.big_m(), gamma = ly.gamma(times.horizon());
  struct Flow {
    std::vector<double> v;
    double h;
  };
  auto flow_of = [&](const MeasureCurve& curve, const ControlField& u) {
    return Flow{v_moments(curve, ly), control_cost(curve, u, ly)};
  };
  MeasureCurve sigma = initial_curve(coeffs, grid, times, nu, br.cfl_max);
  const Flow witness = flow_of(sigma, default_control(coeffs, grid, times));
  std::vector<Flow> flows;
  BestResponseOptions free = br;
  free.enforce_apriori = false;
  for (std::size_t s = 0; s < responses; ++s) {
    const BestResponseResult res = solve_lp(coeffs, sigma, nu, free);
    flows.push_back(flow_of(res.projected_curve, res.control));
    sigma = res.relaxed_curve;
  }
  auto ratios = [&](const Flow& f, double r) {
    double env = 0.0;
    for (std::size_t k = 0; k < times.nodes(); ++k) env = std::max(env, f.v[k] / (r * std::exp(m * times.time(k))));
    return std::pair{env, f.h / (gamma * r)};
  };
  SweepResult out;
  bool seen_pass = false;
  for (double r : ladder) {
    SweepRow row;
    row.r = r;
    const auto [we, wb] = ratios(witness, r);
    row.witness_pass = we <= 1.0 + 1e-8 && wb <= 1.0 + 1e-8;
    row.worst_envelope_ratio = we;
    row.worst_budget_ratio = wb;
    row.responses_pass = true;
    for (const Flow& f : flows) {
      const auto [e, b] = ratios(f, r);
      row.worst_envelope_ratio = std::max(row.worst_envelope_ratio, e);
      row.worst_budget_ratio = std::max(row.worst_budget_ratio, b);
      if (e > 1.0 + 1e-8 || b > 1.0 + 1e-8) row.responses_pass = false;
    }
    if (row.pass() && !out.empirical_r0) out.empirical_r0 = r;
    if (seen_pass && !row.pass()) out.monotone = false;
    seen_pass = seen_pass || row.pass();
    out.rows.push_back(row);
  }
  return out;
}

void write_run_directory(const std::filesystem::path& dir, const EquilibriumResult& res,
                         const std::string& config_text) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw ValidationError("cannot write " + (dir / name).string());
    f << std::setprecision(17);
    return f;
  };
  {
    auto f = open("history.csv");
    f << "iter,kr_gap,relaxed_cost,projected_cost\n";
    for (const auto& h : res.history) f << h.iter << "," << h.kr_gap << "," << h.relaxed_cost << "," << h.projected_cost << "\n";
  }
  if (res.certificate) {
    auto f = open("certificate.csv");
    f << "challenger_id,cost,gap\n";
    for (std::size_t i = 0; i < res.certificate->costs.size(); ++i) {
      f << i << "," << res.certificate->costs[i] << "," << res.certificate->gaps[i] << "\n";
    }
  }
  {
    auto f = open("mu_star.csv");
    write_curve_csv(f, res.mu);
  }
  {
    auto f = open("u_star.csv");
    write_control_csv(f, res.control);
  }
  {
    auto f = open("config.txt");
    f << config_text;
  }
  auto f = open("summary.txt");
  f << "converged = " << (res.converged ? "true" : "false") << "\n";
  f << "iterations = " << res.history.size() << "\n";
  f << "best_iter = " << res.best_iter << "\n";
  f << "best_gap = " << res.best_gap << "\n";
  f << "r = " << res.r << "\n";
  if (!res.history.empty()) f << "projected_cost = " << res.history[res.best_iter].projected_cost << "\n";
  if (res.apriori) {
    f << "apriori_pass = " << (res.apriori->pass ? "true" : "false") << "\n";
    f << "control_cost = " << res.apriori->control_cost << "\n";
    f << "control_budget = " << res.apriori->control_budget << "\n";
  }
  if (res.certificate) {
    f << "candidate_cost = " << res.certificate->candidate_cost << "\n";
    f << "exploitability = " << res.certificate->exploitability << "\n";
    f << "certificate_tolerance = " << res.certificate->tolerance << "\n";
    f << "certificate_pass = " << (res.certificate->pass ? "true" : "false") << "\n";
    f << "fpk_residual = " << res.certificate->fpk_residual << "\n";
    f << "consistency_gap = " << res.certificate->consistency_gap << "\n";
  }
  for (const auto& w : res.warnings) f << "warning = " << w << "\n";
}

}  // namespace mfg
