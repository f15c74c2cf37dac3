#pragma once

#include <functional>

#include "wdn/lp.hpp"

namespace wdn {

/// Nonlinear program with a linear objective, hard linear rows, and smooth
/// equality residuals g(x) = 0 supplied through callbacks.
struct SlpModel {
  std::vector<double> lower, upper, objective;
  double objective_offset = 0.0;
  std::vector<LpRow> linear_rows;

  int num_residuals = 0;
  /// g(x) into out (resized by caller contract to num_residuals).
  std::function<void(const std::vector<double>&, std::vector<double>&)> residual;
  /// Sparse Jacobian rows of g at x, one entry list per residual.
  std::function<void(const std::vector<double>&,
                     std::vector<std::vector<std::pair<int, double>>>&)>
      jacobian;

  /// Variables under the trust region (the ones entering g nonlinearly),
  /// with per-variable initial radius.
  std::vector<int> trust_vars;
  std::vector<double> trust_radius;
};

struct SlpOptions {
  double shrink = 0.5;
  double grow = 2.0;
  double accept_ratio = 0.75;  // ratio for growing the radius
  double step_tol = 1e-9;
  double residual_tol = 1e-6;
  double objective_tol = 1e-9;
  int max_iterations = 200;
  double penalty_factor = 10.0;  // times the largest objective gradient
  LpOptions lp;
};

enum class SlpStatus { converged, infeasible, iteration_limit };

struct SlpResult {
  SlpStatus status = SlpStatus::iteration_limit;
  std::vector<double> x;
  double objective = 0.0;
  double residual_inf = 0.0;
  int iterations = 0;
  std::string message;
};

/// Trust-region sequential linear programming with an l1 merit function.
/// Accepted iterates never increase objective + penalty * ||g||_1.
SlpResult slp_solve(const SlpModel& model, std::vector<double> start,
                    const SlpOptions& opts = {});

}  // namespace wdn
