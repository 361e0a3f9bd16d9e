// mfgsolve: batch driver for the discretized mean field game solver.
//
// Exit status: 0 success, 2 a monitor failed (results are still written),
// 1 hard error (one line on stderr), 64 usage error.

#include "plots.hpp"

#include "mfg/config.hpp"
#include "mfg/hypotheses.hpp"
#include "mfg/io.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace mfg;

namespace {

constexpr int kOk = 0, kHard = 1, kMonitor = 2, kUsage = 64;

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> sets;
};

struct Run {
  Config cfg;
  Scenario s;
  fs::path dir;
};

Run load(const Common& c) {
  if (c.config.empty()) throw ValidationError("no config file given");
  Config cfg = Config::load(c.config);
  for (const auto& s : c.sets) cfg.apply_override(s);
  if (c.seed) cfg.apply_override("seed=" + std::to_string(*c.seed));
  if (!c.out.empty()) cfg.apply_override("output.dir=" + c.out);
  Scenario s = build_scenario(cfg);
  const fs::path dir = cfg.str("output.dir");
  return {std::move(cfg), std::move(s), dir};
}

std::ofstream open(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  if (!f) throw ValidationError("cannot write " + p.string());
  f << std::setprecision(17);
  return f;
}

void write_text(const fs::path& p, const std::string& text) { open(p) << text; }

MeasureCurve read_curve(const fs::path& p) {
  std::ifstream f(p);
  if (!f) throw ValidationError("cannot read " + p.string());
  return read_curve_csv(f);
}

ControlField read_control(const fs::path& p) {
  std::ifstream f(p);
  if (!f) throw ValidationError("cannot read " + p.string());
  return read_control_csv(f);
}

MeasureCurve environment(const Run& r) {
  const std::string src = r.cfg.str("fpk.environment");
  if (src == "initial") return MeasureCurve::constant(r.s.grid, r.s.times, r.s.nu);
  MeasureCurve mu = read_curve(src);
  if (!(mu.grid() == r.s.grid) || !(mu.times() == r.s.times)) throw DimensionError("fpk.environment uses different grids");
  return mu;
}

ControlField control(const Run& r) {
  const std::string src = r.cfg.str("fpk.control");
  const ControlSet& u = r.s.coeffs.controls();
  if (src == "default") return ControlField::constant(r.s.grid, r.s.times, u.points()[u.default_index()]);
  ControlField f = read_control(src);
  if (!(f.grid() == r.s.grid) || !(f.times() == r.s.times)) throw DimensionError("fpk.control uses different grids");
  f.require_in(u);
  return f;
}

double radius(const Run& r) {
  const double given = r.cfg.num("best_response.r");
  return given > 0.0 ? given : default_radius(r.s.coeffs, r.s.nu, r.s.grid, r.s.times.horizon());
}

void write_apriori(const fs::path& p, const MeasureCurve& curve, const LyapunovData& ly, double r) {
  auto f = open(p);
  const auto v = v_moments(curve, ly);
  f << "t,V_moment,bound\n";
  for (std::size_t k = 0; k < curve.times().nodes(); ++k) {
    const double t = curve.times().time(k);
    f << t << "," << v[k] << "," << r * std::exp(ly.big_m() * t) << "\n";
  }
}

int solve_fpk_cmd(const Common& c) {
  const Run r = load(c);
  const MeasureCurve mu = environment(r);
  const ControlField u = control(r);
  const SolveReport rep = solve_fpk(r.s.coeffs, mu, u, r.s.nu, r.s.fpk);
  const double rr = radius(r);
  const AprioriResult ap = apriori_monitor(rep, r.s.coeffs.lyapunov(), rr, u);
  double defect = 0.0;
  for (double d : rep.mass_defect) defect = std::max(defect, d);

  write_text(r.dir / "config.txt", r.cfg.snapshot());
  {
    auto f = open(r.dir / "sigma.csv");
    write_curve_csv(f, rep.solution);
  }
  {
    auto f = open(r.dir / "report.csv");
    write_report_csv(f, rep);
  }
  {
    auto f = open(r.dir / "control.csv");
    write_control_csv(f, u);
  }
  write_apriori(r.dir / "apriori.csv", rep.solution, r.s.coeffs.lyapunov(), rr);
  const bool positive = rep.min_weight >= -1e-12, conserved = defect <= 1e-12 * static_cast<double>(rep.mass_defect.size() + 1);
  auto f = open(r.dir / "summary.txt");
  f << "scheme = " << to_string(rep.scheme) << "\n";
  f << "max_mass_defect = " << defect << "\n";
  f << "min_weight = " << rep.min_weight << "\n";
  f << "cfl_margin = " << rep.cfl_margin << "\n";
  f << "r = " << rr << "\n";
  f << "apriori_pass = " << (ap.pass ? "true" : "false") << "\n";
  f << "control_cost = " << ap.control_cost << "\n";
  f << "control_budget = " << ap.control_budget << "\n";
  const bool pass = ap.pass && positive && conserved;
  std::cout << "solve-fpk: " << (pass ? "monitors pass" : "monitor failed") << ", output in " << r.dir.string() << "\n";
  return pass ? kOk : kMonitor;
}

int best_response_cmd(const Common& c) {
  const Run r = load(c);
  const MeasureCurve mu = environment(r);
  const BestResponseResult br = solve_lp(r.s.coeffs, mu, r.s.nu, r.s.fixed_point.best_response);
  write_text(r.dir / "config.txt", r.cfg.snapshot());
  {
    auto f = open(r.dir / "occupation.csv");
    write_occupation_csv(f, br.pi);
  }
  {
    auto f = open(r.dir / "relaxed_curve.csv");
    write_curve_csv(f, br.relaxed_curve);
  }
  {
    auto f = open(r.dir / "sigma.csv");
    write_curve_csv(f, br.projected_curve);
  }
  {
    auto f = open(r.dir / "control.csv");
    write_control_csv(f, br.control);
  }
  write_apriori(r.dir / "apriori.csv", br.relaxed_curve, r.s.coeffs.lyapunov(), br.r);
  {
    auto f = open(r.dir / "summary.txt");
    write_best_response_summary(f, br);
  }
  const bool pass = br.activity.in_budget && br.projected_cost <= br.relaxed_cost + 1e-8;
  std::cout << "best-response: relaxed cost " << br.relaxed_cost << ", projected cost " << br.projected_cost
            << (pass ? "" : " (monitor failed)") << "\n";
  return pass ? kOk : kMonitor;
}

CertificateReport run_certificate(const Run& r, const MeasureCurve& mu, const ControlField& u) {
  const auto ch = make_challengers(r.s.coeffs, mu, u, r.s.challengers, r.s.seed);
  return certify(r.s.coeffs, mu, u, ch, r.s.nu, r.s.certify_tolerance);
}

int equilibrium_cmd(const Common& c) {
  const Run r = load(c);
  EquilibriumResult res = iterate(r.s.coeffs, r.s.grid, r.s.times, r.s.nu, r.s.fixed_point);
  for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";
  if (r.s.challengers > 0) res.certificate = run_certificate(r, res.mu, res.control);
  write_run_directory(r.dir, res, r.cfg.snapshot());
  write_apriori(r.dir / "apriori.csv", res.player_curve, r.s.coeffs.lyapunov(), res.r);
  const bool pass = res.converged && (!res.apriori || res.apriori->pass) && (!res.certificate || res.certificate->pass);
  std::cout << "equilibrium: " << (res.converged ? "converged" : "not converged") << " after " << res.history.size()
            << " iterations, best gap " << res.best_gap;
  if (res.certificate) std::cout << ", exploitability " << res.certificate->exploitability;
  std::cout << "\n";
  return pass ? kOk : kMonitor;
}

int certify_cmd(const Common& c, const std::string& run_dir) {
  Run r = load(c);
  const fs::path src = run_dir.empty() ? fs::path(r.cfg.str("certify.run")) : fs::path(run_dir);
  if (src.empty()) throw ValidationError("certify needs a run directory (--run or certify.run)");
  const MeasureCurve mu = read_curve(src / "mu_star.csv");
  const ControlField u = read_control(src / "u_star.csv");
  if (!(mu.grid() == r.s.grid) || !(mu.times() == r.s.times)) throw DimensionError("run directory uses different grids");
  const CertificateReport rep = run_certificate(r, mu, u);
  write_text(r.dir / "config.txt", r.cfg.snapshot());
  {
    auto f = open(r.dir / "certificate.csv");
    f << "challenger_id,cost,gap\n";
    for (std::size_t i = 0; i < rep.costs.size(); ++i) f << i << "," << rep.costs[i] << "," << rep.gaps[i] << "\n";
  }
  {
    auto f = open(r.dir / "summary.txt");
    f << "candidate_cost = " << rep.candidate_cost << "\n";
    f << "exploitability = " << rep.exploitability << "\n";
    f << "certificate_tolerance = " << rep.tolerance << "\n";
    f << "fpk_residual = " << rep.fpk_residual << "\n";
    f << "consistency_gap = " << rep.consistency_gap << "\n";
    f << "certificate_pass = " << (rep.pass ? "true" : "false") << "\n";
  }
  std::cout << "certify: exploitability " << rep.exploitability << " (tolerance " << rep.tolerance << ") "
            << (rep.pass ? "pass" : "FAIL") << "\n";
  return rep.pass ? kOk : kMonitor;
}

int check_hypotheses_cmd(const Common& c) {
  const Run r = load(c);
  const MeasureCurve mu = environment(r);
  const auto reports = check_all(r.s.coeffs, mu, default_sample(r.s.coeffs, mu));
  write_text(r.dir / "config.txt", r.cfg.snapshot());
  auto text = open(r.dir / "hypotheses.txt");
  auto csv = open(r.dir / "hypotheses.csv");
  csv << "hypothesis,inequality,where,lhs,rhs,excess\n";
  bool pass = true;
  for (const auto& rep : reports) {
    text << rep.text();
    csv << rep.csv();
    pass = pass && rep.pass();
    std::cout << rep.hypothesis << ": " << (rep.pass() ? "pass" : "FAIL") << "\n";
  }
  return pass ? kOk : kMonitor;
}

int particle_check_cmd(const Common& c) {
  const Run r = load(c);
  const MeasureCurve mu = environment(r);
  const ControlField u = control(r);
  const SolveReport rep = solve_fpk(r.s.coeffs, mu, u, r.s.nu, r.s.fpk);
  const ParticleEnsemble ens = simulate(r.s.coeffs, mu, u, r.s.nu, r.s.particles);
  const auto gaps = superposition_gap(ens, rep.solution);
  const double worst = *std::max_element(gaps.begin(), gaps.end());
  const CostEstimate ce = cost_estimate(ens);
  const FrozenCoefficients fc = r.s.coeffs.freeze(mu);
  const double grid_cost = evaluate_cost(fc, u, rep.solution);
  write_text(r.dir / "config.txt", r.cfg.snapshot());
  {
    auto f = open(r.dir / "particles.csv");
    write_ensemble_csv(f, ens, gaps);
  }
  {
    auto f = open(r.dir / "sigma.csv");
    write_curve_csv(f, rep.solution);
  }
  write_apriori(r.dir / "apriori.csv", rep.solution, r.s.coeffs.lyapunov(), radius(r));
  const bool pass = worst <= r.s.particle_tolerance;
  auto f = open(r.dir / "summary.txt");
  f << "particles = " << ens.count << "\n";
  f << "max_w1_gap = " << worst << "\n";
  f << "tolerance = " << r.s.particle_tolerance << "\n";
  f << "particle_cost = " << ce.mean << "\n";
  f << "particle_cost_se = " << ce.standard_error << "\n";
  f << "grid_cost = " << grid_cost << "\n";
  f << "pass = " << (pass ? "true" : "false") << "\n";
  std::cout << "particle-check: max W1 gap " << worst << " (tolerance " << r.s.particle_tolerance << ") "
            << (pass ? "pass" : "FAIL") << "\n";
  return pass ? kOk : kMonitor;
}

int plot_cmd(const std::string& dir) {
  std::vector<std::string> warnings;
  const auto files = mfgsolve::emit_plots(dir, warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  for (const auto& f : files) std::cout << (fs::path(dir) / f).string() << "\n";
  return kOk;
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discretized mean field game solver: FPK flows, occupation-measure best responses, equilibria"};
  app.require_subcommand(1);
  Common common;
  std::string run_dir, plot_dir;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", common.config, "scenario config file");
    sub->add_option("--out", common.out, "output directory (overrides output.dir)");
    sub->add_option("--seed", common.seed, "RNG seed (overrides seed)");
    sub->add_option("--set", common.sets, "override, key=value (repeatable)")->allow_extra_args(false);
  };
  auto* fpk = app.add_subcommand("solve-fpk", "solve the FPK equation for a fixed control and environment");
  auto* br = app.add_subcommand("best-response", "occupation-measure LP best response to a frozen environment");
  auto* eq = app.add_subcommand("equilibrium", "damped best-response iteration plus exploitability certificate");
  auto* cert = app.add_subcommand("certify", "exploitability certificate for a stored equilibrium run");
  auto* hyp = app.add_subcommand("check-hypotheses", "sampled checks of the structural hypotheses");
  auto* part = app.add_subcommand("particle-check", "particle ensemble against the grid FPK solution");
  auto* plot = app.add_subcommand("plot", "write SVG plots for a run directory");
  for (auto* s : {fpk, br, eq, cert, hyp, part}) add_common(s);
  cert->add_option("--run", run_dir, "run directory holding mu_star.csv and u_star.csv");
  plot->add_option("run_dir", plot_dir, "run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (fpk->parsed()) return solve_fpk_cmd(common);
    if (br->parsed()) return best_response_cmd(common);
    if (eq->parsed()) return equilibrium_cmd(common);
    if (cert->parsed()) return certify_cmd(common, run_dir);
    if (hyp->parsed()) return check_hypotheses_cmd(common);
    if (part->parsed()) return particle_check_cmd(common);
    return plot_cmd(plot_dir);
  } catch (const std::exception& e) {
    std::cerr << "mfgsolve: error: " << one_line(e.what()) << "\n";
    return kHard;
  }
}
