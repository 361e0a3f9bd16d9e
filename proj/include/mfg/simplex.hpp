#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace mfg::lp {

enum class Sense { kLessEqual, kGreaterEqual, kEqual };

struct Term {
  std::size_t var;
  double coef;
};

struct Constraint {
  std::vector<Term> terms;
  Sense sense;
  double rhs;
};

// minimize cost . x  subject to rows, x >= 0.
struct Problem {
  std::vector<double> cost;
  std::vector<Constraint> rows;

  std::size_t num_vars() const { return cost.size(); }
  std::size_t add_var(double c) {
    cost.push_back(c);
    return cost.size() - 1;
  }
  void add_row(std::vector<Term> terms, Sense sense, double rhs) {
    rows.push_back({std::move(terms), sense, rhs});
  }
};

enum class Status { kOptimal, kInfeasible, kUnbounded, kIterationLimit };

std::string to_string(Status s);

// Final basis of a solve, reusable as a warm start for a problem with the same
// shape (same variables, rows and senses; coefficients and costs may differ).
struct Basis {
  std::vector<std::size_t> kept_rows;
  std::vector<std::size_t> columns;  // standard-form column basic in each kept row
};

struct Solution {
  Status status = Status::kIterationLimit;
  double objective = 0.0;
  std::vector<double> x;
  std::size_t pivots = 0;
  bool warm_started = false;
  Basis basis;
};

struct Options {
  std::size_t max_pivots = 500000;
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-10;
  double pivot_tol = 1e-10;
  std::size_t refactor_every = 2000;
  std::size_t degenerate_switch = 40;  // consecutive degenerate pivots before Bland's rule
};

// Two-phase dense tableau simplex. Entering column: most negative reduced cost
// (lowest index on ties), falling back to Bland's rule on degenerate stalls.
// Leaving row: minimum ratio, lowest basic column index on ties. Results are
// deterministic for identical inputs.
Solution solve(const Problem& problem, const Options& options = {}, const Basis* warm_start = nullptr);

// Largest violation of the rows and of x >= 0 by a candidate point.
double max_violation(const Problem& problem, const std::vector<double>& x);

}  // namespace mfg::lp
