#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "wdn/common.hpp"

namespace wdn {

enum class RowSense { le, eq, ge };

struct LpRow {
  RowSense sense = RowSense::le;
  double rhs = 0.0;
  std::vector<std::pair<int, double>> coefs;  // (column, coefficient), column unique per row
};

/// Sparse linear program: min c'x + offset s.t. rows, lower <= x <= upper.
/// Infinite bounds are allowed (wdn::kInf).
struct LpProblem {
  std::vector<double> lower, upper, objective;
  double objective_offset = 0.0;
  std::vector<LpRow> rows;
  std::vector<std::string> var_names;  // optional; empty or per-variable
  std::vector<std::string> row_names;  // optional; empty or per-row

  int num_vars() const { return static_cast<int>(lower.size()); }
  int num_rows() const { return static_cast<int>(rows.size()); }

  int add_var(double lo, double hi, double obj = 0.0, std::string name = {});
  int add_row(RowSense sense, double rhs, std::vector<std::pair<int, double>> coefs,
              std::string name = {});

  /// Text form, one row per line (`sense rhs {index:coef}`) plus var/obj
  /// header lines; see README for the exact grammar.
  void dump(std::ostream& os) const;
  static LpProblem load(std::istream& is);
};

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

const char* to_string(LpStatus s);

struct LpSolution {
  LpStatus status = LpStatus::iteration_limit;
  double objective = 0.0;               // includes objective_offset when optimal
  std::vector<double> primal;           // per structural variable
  std::vector<double> duals;            // per row
  std::vector<double> reduced_costs;    // per structural variable
  long iterations = 0;
  std::string message;                  // diagnostics for non-optimal statuses
};

struct LpOptions {
  double feas_tol = 1e-9;
  double opt_tol = 1e-9;
  bool scale = true;
  long max_iterations = 0;  // 0 = automatic from problem size
};

/// Bounded-variable revised primal simplex. Deterministic: Dantzig pricing
/// with Bland's rule after 50 consecutive degenerate pivots.
LpSolution lp_solve(const LpProblem& p, const LpOptions& opts = {});

}  // namespace wdn
