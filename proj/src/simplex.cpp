#include "mfg/simplex.hpp"

#include "mfg/types.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace mfg::lp {

std::string to_string(Status s) {
  switch (s) {
    case Status::kOptimal:
      return "optimal";
    case Status::kInfeasible:
      return "infeasible";
    case Status::kUnbounded:
      return "unbounded";
    case Status::kIterationLimit:
      return "iteration-limit";
  }
  return "unknown";
}

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct StandardForm {
  std::size_t rows = 0;
  std::size_t structural = 0;  // original variables
  std::size_t columns = 0;     // structural + slacks
  RowMatrix a;
  Eigen::VectorXd b;
  Eigen::VectorXd cost;
  std::vector<long> unit_slack;  // +1 slack usable as an initial basic column, or -1
};

StandardForm standardize(const Problem& p) {
  StandardForm sf;
  sf.rows = p.rows.size();
  sf.structural = p.num_vars();
  std::size_t slacks = 0;
  for (const auto& row : p.rows) slacks += row.sense != Sense::kEqual ? 1 : 0;
  sf.columns = sf.structural + slacks;
  sf.a = RowMatrix::Zero(static_cast<Eigen::Index>(sf.rows), static_cast<Eigen::Index>(sf.columns));
  sf.b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sf.rows));
  sf.cost = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sf.columns));
  for (std::size_t j = 0; j < sf.structural; ++j) sf.cost(static_cast<Eigen::Index>(j)) = p.cost[j];
  sf.unit_slack.assign(sf.rows, -1);
  std::size_t next_slack = sf.structural;
  for (std::size_t r = 0; r < sf.rows; ++r) {
    const auto& row = p.rows[r];
    const auto ri = static_cast<Eigen::Index>(r);
    for (const auto& t : row.terms) {
      if (t.var >= sf.structural) throw DimensionError("lp: constraint references unknown variable");
      sf.a(ri, static_cast<Eigen::Index>(t.var)) += t.coef;
    }
    long slack = -1;
    if (row.sense != Sense::kEqual) {
      slack = static_cast<long>(next_slack++);
      sf.a(ri, slack) = row.sense == Sense::kLessEqual ? 1.0 : -1.0;
    }
    sf.b(ri) = row.rhs;
    if (row.rhs < 0.0) {
      sf.a.row(ri) *= -1.0;
      sf.b(ri) *= -1.0;
    }
    if (slack >= 0 && sf.a(ri, slack) > 0.0) sf.unit_slack[r] = slack;
  }
  return sf;
}

// Dense tableau [T | rhs] with reduced-cost row d (d(rhs) = -objective).
struct Tableau {
  RowMatrix t;
  Eigen::VectorXd d;
  std::vector<std::size_t> basis;
  std::size_t cols = 0;  // excludes rhs
  std::vector<std::size_t> scratch;

  std::size_t rhs() const { return cols; }

  void pivot(std::size_t r, std::size_t q) {
    const auto ri = static_cast<Eigen::Index>(r);
    const auto width = static_cast<Eigen::Index>(cols + 1);
    double* prow = t.row(ri).data();
    const double inv = 1.0 / prow[q];
    scratch.clear();
    for (Eigen::Index j = 0; j < width; ++j) {
      if (prow[j] != 0.0) {
        prow[j] *= inv;
        scratch.push_back(static_cast<std::size_t>(j));
      }
    }
    prow[q] = 1.0;
    const bool sparse = scratch.size() * 3 < static_cast<std::size_t>(width);
    auto eliminate = [&](double* row) {
      const double f = row[q];
      if (f == 0.0) return;
      if (sparse) {
        for (std::size_t j : scratch) row[j] -= f * prow[j];
      } else {
        for (Eigen::Index j = 0; j < width; ++j) row[j] -= f * prow[j];
      }
      row[q] = 0.0;
    };
    for (Eigen::Index i = 0; i < t.rows(); ++i) {
      if (i != ri) eliminate(t.row(i).data());
    }
    eliminate(d.data());
    basis[r] = q;
  }
};

enum class LoopResult { kOptimal, kUnbounded, kLimit };

LoopResult run(Tableau& tab, std::size_t enterable, const Options& opt, std::size_t& pivots,
               std::size_t budget) {
  std::size_t degenerate_run = 0;
  bool bland = false;
  const std::size_t m = tab.basis.size();
  std::size_t local = 0;
  while (true) {
    if (pivots >= opt.max_pivots || local >= budget) return LoopResult::kLimit;
    std::size_t q = enterable;
    double best = -opt.optimality_tol;
    for (std::size_t j = 0; j < enterable; ++j) {
      const double dj = tab.d(static_cast<Eigen::Index>(j));
      if (bland) {
        if (dj < -opt.optimality_tol) {
          q = j;
          break;
        }
      } else if (dj < best) {
        best = dj;
        q = j;
      }
    }
    if (q == enterable) return LoopResult::kOptimal;

    std::size_t r = m;
    double min_ratio = std::numeric_limits<double>::infinity();
    const auto qi = static_cast<Eigen::Index>(q);
    const auto rhs = static_cast<Eigen::Index>(tab.rhs());
    for (std::size_t i = 0; i < m; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      const double a = tab.t(ii, qi);
      if (a <= opt.pivot_tol) continue;
      const double ratio = std::max(tab.t(ii, rhs), 0.0) / a;
      if (r == m) {
        min_ratio = ratio;
        r = i;
        continue;
      }
      const double slack = 1e-12 * (1.0 + min_ratio);
      if (ratio < min_ratio - slack || (ratio <= min_ratio + slack && tab.basis[i] < tab.basis[r])) {
        if (ratio < min_ratio) min_ratio = ratio;
        r = i;
      }
    }
    if (r == m) return LoopResult::kUnbounded;
    if (min_ratio <= 1e-12) {
      if (++degenerate_run > opt.degenerate_switch) bland = true;
    } else {
      degenerate_run = 0;
      bland = false;
    }
    tab.pivot(r, q);
    ++pivots;
    ++local;
  }
}

// Rebuild the tableau from the original rows for the current basis.
// Returns false when the basis matrix is numerically singular.
bool refactor(Tableau& tab, const RowMatrix& a, const Eigen::VectorXd& b, const Eigen::VectorXd& cost) {
  const auto m = static_cast<Eigen::Index>(tab.basis.size());
  Eigen::MatrixXd bm(m, m);
  for (Eigen::Index i = 0; i < m; ++i) bm.col(i) = a.col(static_cast<Eigen::Index>(tab.basis[i]));
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(bm);
  if (m > 0 && !(lu.rcond() > 1e-13)) return false;
  const auto n = static_cast<Eigen::Index>(tab.cols);
  tab.t.resize(m, n + 1);
  tab.t.leftCols(n) = lu.solve(a.leftCols(n));
  tab.t.col(n) = lu.solve(b);
  Eigen::VectorXd cb(m);
  for (Eigen::Index i = 0; i < m; ++i) cb(i) = cost(static_cast<Eigen::Index>(tab.basis[i]));
  tab.d.resize(n + 1);
  tab.d.head(n) = cost.head(n).transpose() - cb.transpose() * tab.t.leftCols(n);
  tab.d(n) = -cb.dot(tab.t.col(n));
  return true;
}

struct Phase2Input {
  RowMatrix a;  // kept rows only
  Eigen::VectorXd b;
  std::vector<std::size_t> kept_rows;
};

// Phase 2 with periodic refactorization; returns the status once a refactored
// tableau confirms optimality (or unboundedness / limits).
Status phase2(Tableau& tab, const Phase2Input& in, const Eigen::VectorXd& cost, const Options& opt,
              std::size_t& pivots) {
  for (int rounds = 0; rounds < 1000; ++rounds) {
    const LoopResult lr = run(tab, tab.cols, opt, pivots, opt.refactor_every);
    if (lr == LoopResult::kUnbounded) return Status::kUnbounded;
    if (!refactor(tab, in.a, in.b, cost)) throw NumericalError("simplex: basis became singular");
    const auto rhs = static_cast<Eigen::Index>(tab.rhs());
    for (Eigen::Index i = 0; i < tab.t.rows(); ++i) {
      if (tab.t(i, rhs) < -1e-7) throw NumericalError("simplex: lost primal feasibility");
    }
    if (lr == LoopResult::kLimit) {
      if (pivots >= opt.max_pivots) return Status::kIterationLimit;
      continue;
    }
    bool optimal = true;
    for (std::size_t j = 0; j < tab.cols; ++j) {
      if (tab.d(static_cast<Eigen::Index>(j)) < -opt.optimality_tol) {
        optimal = false;
        break;
      }
    }
    if (optimal) return Status::kOptimal;
  }
  return Status::kIterationLimit;
}

Solution extract(const Tableau& tab, const StandardForm& sf, const Problem& p, Status status,
                 std::vector<std::size_t> kept_rows) {
  Solution sol;
  sol.status = status;
  sol.x.assign(sf.structural, 0.0);
  const auto rhs = static_cast<Eigen::Index>(tab.rhs());
  for (std::size_t i = 0; i < tab.basis.size(); ++i) {
    if (tab.basis[i] < sf.structural) {
      sol.x[tab.basis[i]] = std::max(0.0, tab.t(static_cast<Eigen::Index>(i), rhs));
    }
  }
  double obj = 0.0;
  for (std::size_t j = 0; j < sf.structural; ++j) obj += p.cost[j] * sol.x[j];
  sol.objective = obj;
  sol.basis.kept_rows = std::move(kept_rows);
  sol.basis.columns = tab.basis;
  return sol;
}

double scale_of(const Problem& p) {
  double s = 1.0;
  for (const auto& row : p.rows) s = std::max(s, std::abs(row.rhs));
  return s;
}

std::optional<Solution> try_warm(const Problem& p, const StandardForm& sf, const Basis& warm,
                                 const Options& opt) {
  if (warm.columns.size() != warm.kept_rows.size()) return std::nullopt;
  for (std::size_t r : warm.kept_rows) {
    if (r >= sf.rows) return std::nullopt;
  }
  for (std::size_t c : warm.columns) {
    if (c >= sf.columns) return std::nullopt;
  }
  Phase2Input in;
  const auto m = static_cast<Eigen::Index>(warm.kept_rows.size());
  in.a.resize(m, static_cast<Eigen::Index>(sf.columns));
  in.b.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    in.a.row(i) = sf.a.row(static_cast<Eigen::Index>(warm.kept_rows[static_cast<std::size_t>(i)]));
    in.b(i) = sf.b(static_cast<Eigen::Index>(warm.kept_rows[static_cast<std::size_t>(i)]));
  }
  in.kept_rows = warm.kept_rows;
  Tableau tab;
  tab.cols = sf.columns;
  tab.basis = warm.columns;
  if (!refactor(tab, in.a, in.b, sf.cost)) return std::nullopt;
  const auto rhs = static_cast<Eigen::Index>(tab.rhs());
  for (Eigen::Index i = 0; i < m; ++i) {
    if (tab.t(i, rhs) < -opt.feasibility_tol) return std::nullopt;
  }
  std::size_t pivots = 0;
  Status st;
  try {
    st = phase2(tab, in, sf.cost, opt, pivots);
  } catch (const NumericalError&) {
    return std::nullopt;
  }
  if (st != Status::kOptimal) return std::nullopt;
  Solution sol = extract(tab, sf, p, st, in.kept_rows);
  if (max_violation(p, sol.x) > 1e-7 * scale_of(p)) return std::nullopt;
  sol.pivots = pivots;
  sol.warm_started = true;
  return sol;
}

}  // namespace

double max_violation(const Problem& problem, const std::vector<double>& x) {
  double worst = 0.0;
  for (double v : x) worst = std::max(worst, -v);
  for (const auto& row : problem.rows) {
    double act = 0.0;
    for (const auto& t : row.terms) act += t.coef * x[t.var];
    const double gap = act - row.rhs;
    switch (row.sense) {
      case Sense::kLessEqual:
        worst = std::max(worst, gap);
        break;
      case Sense::kGreaterEqual:
        worst = std::max(worst, -gap);
        break;
      case Sense::kEqual:
        worst = std::max(worst, std::abs(gap));
        break;
    }
  }
  return worst;
}

Solution solve(const Problem& problem, const Options& opt, const Basis* warm_start) {
  const StandardForm sf = standardize(problem);
  if (warm_start != nullptr) {
    if (auto sol = try_warm(problem, sf, *warm_start, opt)) return *sol;
  }

  // Phase 1: artificial columns for rows without a usable slack.
  std::vector<std::size_t> art_rows;
  for (std::size_t r = 0; r < sf.rows; ++r) {
    if (sf.unit_slack[r] < 0) art_rows.push_back(r);
  }
  const std::size_t n1 = sf.columns + art_rows.size();
  const auto m = static_cast<Eigen::Index>(sf.rows);
  Tableau tab;
  tab.cols = n1;
  tab.t = RowMatrix::Zero(m, static_cast<Eigen::Index>(n1 + 1));
  tab.t.leftCols(static_cast<Eigen::Index>(sf.columns)) = sf.a;
  tab.t.col(static_cast<Eigen::Index>(n1)) = sf.b;
  tab.basis.assign(sf.rows, 0);
  tab.d = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n1 + 1));
  for (std::size_t r = 0; r < sf.rows; ++r) {
    if (sf.unit_slack[r] >= 0) tab.basis[r] = static_cast<std::size_t>(sf.unit_slack[r]);
  }
  for (std::size_t k = 0; k < art_rows.size(); ++k) {
    const auto r = static_cast<Eigen::Index>(art_rows[k]);
    const auto col = static_cast<Eigen::Index>(sf.columns + k);
    tab.t(r, col) = 1.0;
    tab.basis[art_rows[k]] = sf.columns + k;
    tab.d -= tab.t.row(r).transpose();
    tab.d(col) = 0.0;
  }

  std::size_t pivots = 0;
  if (!art_rows.empty()) {
    const LoopResult lr = run(tab, sf.columns, opt, pivots, opt.max_pivots);
    if (lr == LoopResult::kLimit) {
      Solution s;
      s.status = Status::kIterationLimit;
      s.pivots = pivots;
      return s;
    }
    const double infeas = -tab.d(static_cast<Eigen::Index>(n1));
    if (infeas > opt.feasibility_tol * std::max(1.0, sf.b.cwiseAbs().maxCoeff())) {
      Solution s;
      s.status = Status::kInfeasible;
      s.pivots = pivots;
      return s;
    }
  }

  // Drive remaining artificials out of the basis; rows where that is impossible are redundant.
  std::vector<std::size_t> kept;
  for (std::size_t r = 0; r < sf.rows; ++r) {
    if (tab.basis[r] >= sf.columns) {
      std::size_t best = sf.columns;
      double best_abs = 1e-9;
      for (std::size_t j = 0; j < sf.columns; ++j) {
        const double v = std::abs(tab.t(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)));
        if (v > best_abs) {
          best_abs = v;
          best = j;
        }
      }
      if (best < sf.columns) {
        tab.pivot(r, best);
        ++pivots;
        kept.push_back(r);
      }
    } else {
      kept.push_back(r);
    }
  }

  Phase2Input in;
  in.kept_rows = kept;
  const auto mk = static_cast<Eigen::Index>(kept.size());
  in.a.resize(mk, static_cast<Eigen::Index>(sf.columns));
  in.b.resize(mk);
  Tableau t2;
  t2.cols = sf.columns;
  t2.basis.resize(kept.size());
  for (Eigen::Index i = 0; i < mk; ++i) {
    const auto r = static_cast<Eigen::Index>(kept[static_cast<std::size_t>(i)]);
    in.a.row(i) = sf.a.row(r);
    in.b(i) = sf.b(r);
    t2.basis[static_cast<std::size_t>(i)] = tab.basis[static_cast<std::size_t>(r)];
  }
  t2.t.resize(mk, static_cast<Eigen::Index>(sf.columns + 1));
  for (Eigen::Index i = 0; i < mk; ++i) {
    const auto r = static_cast<Eigen::Index>(kept[static_cast<std::size_t>(i)]);
    t2.t.row(i).head(static_cast<Eigen::Index>(sf.columns)) = tab.t.row(r).head(static_cast<Eigen::Index>(sf.columns));
    t2.t(i, static_cast<Eigen::Index>(sf.columns)) = tab.t(r, static_cast<Eigen::Index>(n1));
  }
  tab = Tableau{};
  Eigen::VectorXd cb(mk);
  for (Eigen::Index i = 0; i < mk; ++i) cb(i) = sf.cost(static_cast<Eigen::Index>(t2.basis[static_cast<std::size_t>(i)]));
  t2.d.resize(static_cast<Eigen::Index>(sf.columns + 1));
  t2.d.head(static_cast<Eigen::Index>(sf.columns)) =
      sf.cost.transpose() - cb.transpose() * t2.t.leftCols(static_cast<Eigen::Index>(sf.columns));
  t2.d(static_cast<Eigen::Index>(sf.columns)) = -cb.dot(t2.t.col(static_cast<Eigen::Index>(sf.columns)));

  const Status st = phase2(t2, in, sf.cost, opt, pivots);
  Solution sol = extract(t2, sf, problem, st, kept);
  sol.pivots = pivots;
  if (st == Status::kOptimal && max_violation(problem, sol.x) > 1e-7 * scale_of(problem)) {
    throw NumericalError("simplex: optimal point violates constraints beyond tolerance");
  }
  return sol;
}

}  // namespace mfg::lp
