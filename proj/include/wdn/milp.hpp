#pragma once

#include "wdn/lp.hpp"

namespace wdn {

/// LP plus a set of columns restricted to {0,1}.
struct MilpProblem {
  LpProblem lp;
  std::vector<int> binary_vars;
};

struct MilpOptions {
  double gap_tol = 1e-6;   // relative UB/LB gap to prove
  long node_limit = 200000;
  double int_tol = 1e-7;
  LpOptions lp;
};

struct MilpResult {
  LpSolution solution;            // incumbent; status optimal => proven within gap_tol
  std::vector<double> binaries;   // incumbent binary values, exact 0/1
  double achieved_gap = 0.0;
  long nodes = 0;
};

/// Best-first branch and bound on the binary columns. Branching variable:
/// most fractional, ties by smallest index. Deterministic.
MilpResult milp_solve(const MilpProblem& p, const MilpOptions& opts = {});

}  // namespace wdn
