#pragma once

#include <optional>

#include "wdn/lp.hpp"

namespace wdn::testgen {

/// Exhaustive vertex enumeration for small LPs with finite variable boxes:
/// tries every choice of n active constraints (rows as equalities plus
/// bounds), solves the dense system, and keeps the best feasible point.
/// Independent of the simplex path.
struct VertexOracleResult {
  bool feasible = false;
  double objective = 0.0;
};

VertexOracleResult vertex_enumeration_solve(const LpProblem& p);

/// Scalar Newton iteration for a single-pipe network: flow is fixed by the
/// demand, head follows from the source head minus the head loss.
double newton_single_pipe_head(double h0, double a, double b, double demand);

}  // namespace wdn::testgen
