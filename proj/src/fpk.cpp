#include "mfg/fpk.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>

namespace mfg {

namespace {

using Dir = std::array<int, 2>;

// (p^2, pq, q^2): coefficients of e e^T in (a11, a12, a22).
Eigen::Vector3d outer(const Dir& e) {
  return {static_cast<double>(e[0] * e[0]), static_cast<double>(e[0] * e[1]), static_cast<double>(e[1] * e[1])};
}

std::string node_name(const StateGrid& g, std::size_t i) {
  std::ostringstream os;
  os << "node " << i << " at x=(" << g.node(i)(0);
  if (g.dim() == 2) os << "," << g.node(i)(1);
  os << ")";
  return os.str();
}

bool on_boundary(const StateGrid& g, std::size_t i) {
  const auto m = g.multi_index(i);
  const std::size_t last = g.points_per_axis() - 1;
  if (m[0] == 0 || m[0] == last) return true;
  return g.dim() == 2 && (m[1] == 0 || m[1] == last);
}

void check_control_field(const StateGrid& g, const TimeGrid& t, const ControlField& u, int control_dim) {
  if (!(u.grid() == g) || !(u.times() == t)) throw DimensionError("control field grids differ from the solver's");
  if (u.control_dim() != control_dim) throw DimensionError("control field has the wrong control dimension");
}

}  // namespace

std::vector<std::pair<std::array<int, 2>, double>> split_diffusion(const SMat& a, bool allow_wide) {
  if (a.rows() != 2 || a.cols() != 2) throw DimensionError("split_diffusion expects a 2 x 2 matrix");
  const double a11 = a(0, 0), a12 = 0.5 * (a(0, 1) + a(1, 0)), a22 = a(1, 1);
  const double scale = std::max({std::abs(a11), std::abs(a12), std::abs(a22), 1e-300});
  const double slack = 1e-12 * scale;
  std::vector<std::pair<Dir, double>> out;
  if (std::abs(a12) <= std::min(a11, a22) + slack) {
    const double w1 = std::max(0.0, a11 - std::abs(a12)), w2 = std::max(0.0, a22 - std::abs(a12));
    if (w1 > 0.0) out.push_back({{1, 0}, w1});
    if (w2 > 0.0) out.push_back({{0, 1}, w2});
    if (a12 > 0.0) out.push_back({{1, 1}, a12});
    if (a12 < 0.0) out.push_back({{1, -1}, -a12});
    return out;
  }
  if (!allow_wide) throw SchemeError("no nonnegative 9-point split for the diffusion matrix");
  static const std::vector<Dir> dirs{{1, 0}, {0, 1}, {1, 1}, {1, -1}, {2, 1}, {2, -1}, {1, 2}, {1, -2}};
  const Eigen::Vector3d target(a11, a12, a22);
  for (std::size_t p = 0; p < dirs.size(); ++p) {
    for (std::size_t q = p + 1; q < dirs.size(); ++q) {
      for (std::size_t r = q + 1; r < dirs.size(); ++r) {
        Eigen::Matrix3d m;
        m.col(0) = outer(dirs[p]);
        m.col(1) = outer(dirs[q]);
        m.col(2) = outer(dirs[r]);
        if (std::abs(m.determinant()) < 1e-9) continue;
        const Eigen::Vector3d w = m.partialPivLu().solve(target);
        if (w.minCoeff() < -slack) continue;
        const Eigen::Vector3d wc = w.cwiseMax(0.0);
        if ((m * wc - target).cwiseAbs().maxCoeff() > 1e-10 * scale) continue;
        const Dir chosen[3] = {dirs[p], dirs[q], dirs[r]};
        for (int s = 0; s < 3; ++s) {
          if (wc(s) > 0.0) out.push_back({chosen[s], wc(s)});
        }
        return out;
      }
    }
  }
  throw SchemeError("no nonnegative lattice split for the diffusion matrix (anisotropy too strong)");
}

double GeneratorStep::outflow(std::size_t i, const SVec& u) const {
  double s = 0.0;
  for (std::size_t q = row_start[i]; q < row_start[i + 1]; ++q) s += jumps[q].rate(u);
  return s;
}

SparseMatrix GeneratorStep::matrix(const ControlField& u, std::size_t k) const {
  std::vector<Eigen::Triplet<double>> trip;
  for (std::size_t i = 0; i < rows(); ++i) {
    const SVec ui = u.at(k, i);
    double diag = 0.0;
    for (std::size_t q = row_start[i]; q < row_start[i + 1]; ++q) {
      const double r = jumps[q].rate(ui);
      trip.emplace_back(static_cast<int>(i), static_cast<int>(jumps[q].to), r);
      diag -= r;
    }
    trip.emplace_back(static_cast<int>(i), static_cast<int>(i), diag);
  }
  SparseMatrix m(static_cast<Eigen::Index>(rows()), static_cast<Eigen::Index>(rows()));
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

SparseMatrix GeneratorStep::matrix(const SVec& u) const {
  std::vector<Eigen::Triplet<double>> trip;
  for (std::size_t i = 0; i < rows(); ++i) {
    double diag = 0.0;
    for (std::size_t q = row_start[i]; q < row_start[i + 1]; ++q) {
      const double r = jumps[q].rate(u);
      trip.emplace_back(static_cast<int>(i), static_cast<int>(jumps[q].to), r);
      diag -= r;
    }
    trip.emplace_back(static_cast<int>(i), static_cast<int>(i), diag);
  }
  SparseMatrix m(static_cast<Eigen::Index>(rows()), static_cast<Eigen::Index>(rows()));
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

std::vector<double> GeneratorStep::apply(const ControlField& u, std::size_t k, std::span<const double> psi) const {
  std::vector<double> out(rows(), 0.0);
  for (std::size_t i = 0; i < rows(); ++i) {
    const SVec ui = u.at(k, i);
    double s = 0.0;
    for (std::size_t q = row_start[i]; q < row_start[i + 1]; ++q) s += jumps[q].rate(ui) * (psi[jumps[q].to] - psi[i]);
    out[i] = s;
  }
  return out;
}

std::vector<double> GeneratorStep::apply_adjoint(const ControlField& u, std::size_t k,
                                                 std::span<const double> sigma) const {
  std::vector<double> out(rows(), 0.0);
  for (std::size_t i = 0; i < rows(); ++i) {
    if (sigma[i] == 0.0) continue;
    const SVec ui = u.at(k, i);
    for (std::size_t q = row_start[i]; q < row_start[i + 1]; ++q) {
      const double flow = jumps[q].rate(ui) * sigma[i];
      out[jumps[q].to] += flow;
      out[i] -= flow;
    }
  }
  return out;
}

GeneratorStep assemble_step(const FrozenCoefficients& fc, const ControlSet& controls, const StateGrid& grid,
                            std::size_t k, StencilOptions opts) {
  const int d = grid.dim();
  const int d1 = controls.dim();
  const double dx = grid.spacing(), dx2 = dx * dx;
  const long n = static_cast<long>(grid.points_per_axis());
  GeneratorStep step;
  step.row_start.reserve(grid.size() + 1);
  step.row_start.push_back(0);
  std::map<std::size_t, Jump> row;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    row.clear();
    const SVec x = grid.node(i);
    const auto mi = grid.multi_index(i);
    const SMat a = fc.a(x, k);
    const SVec b = fc.b(x, k);
    const SMat q = fc.q(x, k);
    if (a.rows() != d || a.cols() != d || b.size() != d || q.rows() != d || q.cols() != d1) {
      throw DimensionError("coefficient evaluator returned the wrong shape at " + node_name(grid, i));
    }
    if (!a.allFinite() || !b.allFinite() || !q.allFinite()) {
      throw NumericalError("non-finite coefficient at " + node_name(grid, i));
    }
    auto target = [&](int di, int dj) -> long {
      const long ii = static_cast<long>(mi[0]) + di, jj = static_cast<long>(mi[1]) + dj;
      if (ii < 0 || ii >= n) return -1;
      if (d == 1) return dj == 0 ? ii : -1;
      if (jj < 0 || jj >= n) return -1;
      return static_cast<long>(grid.flat_index(static_cast<std::size_t>(ii), static_cast<std::size_t>(jj)));
    };
    auto add = [&](int di, int dj, double base, const std::array<double, 2>& per_u) {
      const long t = target(di, dj);
      if (t < 0) return;  // no-flux: jumps out of the box are dropped
      Jump& jmp = row[static_cast<std::size_t>(t)];
      jmp.to = static_cast<std::uint32_t>(t);
      jmp.base += base;
      jmp.per_u[0] += per_u[0];
      jmp.per_u[1] += per_u[1];
    };
    const std::array<double, 2> none{0.0, 0.0};

    // Diffusion split into lattice directions; remember the weight on each axis.
    std::array<double, 2> axis_weight{0.0, 0.0};
    if (d == 1) {
      if (a(0, 0) < -tol::kEigenClamp) throw ValidationError("negative diffusion at " + node_name(grid, i));
      const double w = std::max(0.0, a(0, 0));
      axis_weight[0] = w;
      add(1, 0, w / dx2, none);
      add(-1, 0, w / dx2, none);
    } else {
      psd_sqrt(a);  // validates symmetry and nonnegativity
      for (const auto& [e, w] : split_diffusion(a, opts.allow_wide_stencil)) {
        if (e[1] == 0) axis_weight[0] += w * e[0] * e[0];
        if (e[0] == 0) axis_weight[1] += w * e[1] * e[1];
        add(e[0], e[1], w / dx2, none);
        add(-e[0], -e[1], w / dx2, none);
      }
    }
    for (int ax = 0; ax < d; ++ax) {
      const int ex = ax == 0 ? 1 : 0, ey = ax == 1 ? 1 : 0;
      // Upwind drift.
      if (b(ax) > 0.0) add(ex, ey, b(ax) / dx, none);
      if (b(ax) < 0.0) add(-ex, -ey, -b(ax) / dx, none);
      // Centered control drift plus the extra diffusion that keeps it monotone on U.
      const double qbar = controls.max_drift(q, ax);
      if (qbar > 0.0) {
        const double kappa = std::max(0.0, 0.5 * qbar * dx - axis_weight[static_cast<std::size_t>(ax)]);
        std::array<double, 2> plus{0.0, 0.0}, minus{0.0, 0.0};
        for (int c = 0; c < d1; ++c) {
          plus[static_cast<std::size_t>(c)] = q(ax, c) / (2.0 * dx);
          minus[static_cast<std::size_t>(c)] = -q(ax, c) / (2.0 * dx);
        }
        add(ex, ey, kappa / dx2, plus);
        add(-ex, -ey, kappa / dx2, minus);
      }
    }
    for (const auto& [t, jmp] : row) {
      if (jmp.base == 0.0 && jmp.per_u[0] == 0.0 && jmp.per_u[1] == 0.0) continue;
      step.jumps.push_back(jmp);
    }
    step.row_start.push_back(step.jumps.size());
  }
  return step;
}

DiscreteGenerator::DiscreteGenerator(const CoefficientSet& coeffs, const MeasureCurve& mu, StencilOptions opts)
    : grid_(mu.grid()), times_(mu.times()) {
  const auto fc = coeffs.freeze(mu);
  steps_.reserve(times_.steps());
  for (std::size_t k = 0; k < times_.steps(); ++k) steps_.push_back(assemble_step(fc, coeffs.controls(), grid_, k, opts));
}

std::string to_string(Scheme s) { return s == Scheme::kExplicit ? "explicit" : "implicit"; }

Scheme parse_scheme(const std::string& s) {
  if (s == "explicit") return Scheme::kExplicit;
  if (s == "implicit") return Scheme::kImplicit;
  throw ValidationError("unknown scheme '" + s + "' (explicit or implicit)");
}

std::vector<double> v_moments(const MeasureCurve& curve, const LyapunovData& lyap) {
  const StateGrid& g = curve.grid();
  std::vector<double> vn(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) vn[i] = lyap.v(g.node(i));
  std::vector<double> out(curve.times().nodes(), 0.0);
  for (std::size_t k = 0; k < out.size(); ++k) {
    const auto w = curve.at(k);
    for (std::size_t i = 0; i < g.size(); ++i) out[k] += vn[i] * w[i];
  }
  return out;
}

namespace {

template <class StepFn>
SolveReport run_solver(const StateGrid& g, const TimeGrid& t, const LyapunovData& lyap, const ControlField& u,
                       std::span<const double> nu, const FpkOptions& opts, StepFn&& step_at) {
  if (nu.size() != g.size()) throw DimensionError("initial weights do not match the grid");
  require_probability(nu, "initial distribution");
  if (!(opts.cfl_max > 0.0)) throw ValidationError("cfl_max must be positive");
  const std::size_t n = g.size(), steps = t.steps();
  const double dt = t.dt();
  std::vector<double> data(t.nodes() * n);
  std::copy(nu.begin(), nu.end(), data.begin());
  std::vector<double> defect(steps, 0.0), renorm(steps, 0.0);
  double worst_cfl = 0.0, min_weight = *std::min_element(nu.begin(), nu.end());
  for (std::size_t k = 0; k < steps; ++k) {
    const GeneratorStep& gs = step_at(k);
    std::span<const double> cur(data.data() + k * n, n);
    std::span<double> next(data.data() + (k + 1) * n, n);
    if (opts.scheme == Scheme::kExplicit) {
      double worst = 0.0;
      std::size_t worst_i = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const double out = gs.outflow(i, u.at(k, i));
        if (out > worst) {
          worst = out;
          worst_i = i;
        }
      }
      worst_cfl = std::max(worst_cfl, dt * worst);
      if (dt * worst > opts.cfl_max) {
        std::ostringstream os;
        os << "explicit step violates CFL: dt * |G_ii| = " << dt * worst << " > " << opts.cfl_max << " at "
           << node_name(g, worst_i) << ", step " << k;
        throw StepSizeError(os.str());
      }
      const auto flow = gs.apply_adjoint(u, k, cur);
      for (std::size_t i = 0; i < n; ++i) next[i] = cur[i] + dt * flow[i];
    } else {
      SparseMatrix gt = gs.matrix(u, k).transpose();
      Eigen::SparseMatrix<double> m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
      m.setIdentity();
      m -= dt * Eigen::SparseMatrix<double>(gt);
      Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
      lu.compute(m);
      if (lu.info() != Eigen::Success) throw NumericalError("implicit step: factorization failed at step " + std::to_string(k));
      Eigen::Map<const Eigen::VectorXd> rhs(cur.data(), static_cast<Eigen::Index>(n));
      const Eigen::VectorXd sol = lu.solve(rhs);
      if (lu.info() != Eigen::Success || !sol.allFinite()) {
        throw NumericalError("implicit step: linear solve failed at step " + std::to_string(k));
      }
      for (std::size_t i = 0; i < n; ++i) next[i] = sol(static_cast<Eigen::Index>(i));
    }
    double before = 0.0, after = 0.0, lo = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      before += cur[i];
      after += next[i];
      lo = std::min(lo, next[i]);
    }
    if (lo < -tol::kNegativity) {
      throw SchemeError("scheme produced weight " + std::to_string(lo) + " at step " + std::to_string(k));
    }
    min_weight = std::min(min_weight, lo);
    defect[k] = std::abs(after - before);
    if (opts.renormalize && after > 0.0) {
      for (std::size_t i = 0; i < n; ++i) next[i] /= after;
      renorm[k] = 1.0 / after - 1.0;
    }
  }
  SolveReport rep{MeasureCurve(g, t, std::move(data)), std::move(defect), {}, {}, std::move(renorm), 0.0,
                  opts.cfl_max - worst_cfl, min_weight, opts.scheme};
  if (opts.scheme == Scheme::kImplicit) rep.cfl_margin = opts.cfl_max;
  rep.v_moment = v_moments(rep.solution, lyap);
  rep.boundary_mass.assign(t.nodes(), 0.0);
  for (std::size_t k = 0; k < t.nodes(); ++k) {
    const auto w = rep.solution.at(k);
    for (std::size_t i = 0; i < n; ++i) {
      if (on_boundary(g, i)) rep.boundary_mass[k] += w[i];
    }
  }
  return rep;
}

}  // namespace

SolveReport solve_fpk(const CoefficientSet& coeffs, const MeasureCurve& mu, const ControlField& u,
                      std::span<const double> nu, const FpkOptions& opts) {
  check_control_field(mu.grid(), mu.times(), u, coeffs.control_dim());
  u.require_in(coeffs.controls());
  const auto fc = coeffs.freeze(mu);
  GeneratorStep current;
  return run_solver(mu.grid(), mu.times(), coeffs.lyapunov(), u, nu, opts, [&](std::size_t k) -> const GeneratorStep& {
    current = assemble_step(fc, coeffs.controls(), mu.grid(), k, opts.stencil);
    return current;
  });
}

SolveReport solve_fpk(const DiscreteGenerator& gen, const LyapunovData& lyap, const ControlField& u,
                      std::span<const double> nu, const FpkOptions& opts) {
  if (!(u.grid() == gen.grid()) || !(u.times() == gen.times())) {
    throw DimensionError("control field grids differ from the generator's");
  }
  return run_solver(gen.grid(), gen.times(), lyap, u, nu, opts,
                    [&](std::size_t k) -> const GeneratorStep& { return gen.step(k); });
}

double weak_residual(const DiscreteGenerator& gen, const ControlField& u, const MeasureCurve& sigma,
                     std::span<const double> psi, Scheme scheme) {
  const std::size_t n = gen.grid().size();
  if (psi.size() != n) throw DimensionError("weak_residual: test field does not match the grid");
  if (!(sigma.grid() == gen.grid()) || !(sigma.times() == gen.times())) {
    throw DimensionError("weak_residual: curve grids differ from the generator's");
  }
  const double dt = gen.times().dt();
  auto pair = [&](std::span<const double> w) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += psi[i] * w[i];
    return s;
  };
  const double start = pair(sigma.at(0));
  double integral = 0.0, worst = 0.0;
  for (std::size_t k = 0; k < gen.steps(); ++k) {
    const auto gpsi = gen.step(k).apply(u, k, psi);
    const auto w = sigma.at(scheme == Scheme::kExplicit ? k : k + 1);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += gpsi[i] * w[i];
    integral += dt * s;
    worst = std::max(worst, std::abs(pair(sigma.at(k + 1)) - start - integral));
  }
  return worst;
}

MonitorResult gronwall_monitor(const SolveReport& report, double c, std::span<const double> w) {
  const MeasureCurve& s = report.solution;
  const TimeGrid& t = s.times();
  const std::size_t n = s.grid().size();
  if (w.size() != t.nodes() * n) throw DimensionError("gronwall_monitor: W must have (K+1) x n^d values");
  MonitorResult res;
  double integral = 0.0;
  for (std::size_t k = 0; k < t.nodes(); ++k) {
    const double bound = (report.v_moment[0] + integral) * std::exp(c * t.time(k));
    res.bound.push_back(bound);
    res.margin.push_back(bound - report.v_moment[k]);
    if (report.v_moment[k] - bound > 1e-8 * (1.0 + std::abs(bound)) && res.pass) {
      res.pass = false;
      res.first_violation = static_cast<long>(k);
    }
    const auto sk = s.at(k);
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) m += w[k * n + i] * sk[i];
    integral += t.dt() * std::exp(-c * t.time(k)) * m;
  }
  return res;
}

AprioriResult apriori_monitor(const SolveReport& report, const LyapunovData& lyap, double r, const ControlField& u) {
  const MeasureCurve& s = report.solution;
  const TimeGrid& t = s.times();
  if (!(u.grid() == s.grid()) || !(u.times() == t)) throw DimensionError("apriori_monitor: grids differ");
  AprioriResult res;
  const double m = lyap.big_m();
  for (std::size_t k = 0; k < t.nodes(); ++k) {
    const double bound = r * std::exp(m * t.time(k));
    res.envelope.bound.push_back(bound);
    res.envelope.margin.push_back(bound - report.v_moment[k]);
    if (report.v_moment[k] - bound > 1e-8 * (1.0 + std::abs(bound)) && res.envelope.pass) {
      res.envelope.pass = false;
      res.envelope.first_violation = static_cast<long>(k);
    }
  }
  for (std::size_t k = 0; k < t.steps(); ++k) {
    const auto sk = s.at(k);
    for (std::size_t i = 0; i < s.grid().size(); ++i) {
      if (sk[i] != 0.0) res.control_cost += t.dt() * lyap.h(u.at(k, i).norm()) * sk[i];
    }
  }
  res.control_budget = lyap.gamma(t.horizon()) * r;
  res.pass = res.envelope.pass && res.control_cost <= res.control_budget + 1e-8 * (1.0 + res.control_budget);
  return res;
}

void write_report_csv(std::ostream& os, const SolveReport& report) {
  const TimeGrid& t = report.solution.times();
  os << "t,mass_defect,leakage,V_moment\n";
  os << std::setprecision(17);
  for (std::size_t k = 0; k < t.nodes(); ++k) {
    os << t.time(k) << "," << (k == 0 ? 0.0 : report.mass_defect[k - 1]) << "," << (k == 0 ? 0.0 : report.leakage)
       << "," << report.v_moment[k] << "\n";
  }
}

}  // namespace mfg
