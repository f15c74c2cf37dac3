#include "wdn/slp.hpp"

#include <algorithm>
#include <cmath>

namespace wdn {

namespace {

double norm1(const std::vector<double>& v) {
  double t = 0.0;
  for (double x : v) t += std::abs(x);
  return t;
}

double norm_inf(const std::vector<double>& v) {
  double t = 0.0;
  for (double x : v) t = std::max(t, std::abs(x));
  return t;
}

}  // namespace

SlpResult slp_solve(const SlpModel& model, std::vector<double> start, const SlpOptions& opts) {
  const int n = static_cast<int>(model.lower.size());
  const int ng = model.num_residuals;
  SlpResult res;
  if (static_cast<int>(start.size()) != n) throw InputError("slp: start size mismatch");

  // Clamp the start into the box; the LP keeps it there afterwards.
  for (int j = 0; j < n; ++j) start[j] = std::clamp(start[j], model.lower[j], model.upper[j]);

  double cmax = 0.0;
  for (double c : model.objective) cmax = std::max(cmax, std::abs(c));
  double penalty = opts.penalty_factor * std::max(cmax, 1e-2);

  std::vector<double> radius = model.trust_radius;
  std::vector<double> g(ng), g_cand(ng);
  std::vector<std::vector<std::pair<int, double>>> jac(ng);

  auto fval = [&](const std::vector<double>& x) {
    double f = model.objective_offset;
    for (int j = 0; j < n; ++j) f += model.objective[j] * x[j];
    return f;
  };

  model.residual(start, g);
  double merit = fval(start) + penalty * norm1(g);
  double best_infeas = norm_inf(g);
  int stalled = 0;

  for (int it = 1; it <= opts.max_iterations; ++it) {
    res.iterations = it;
    model.jacobian(start, jac);

    LpProblem lp;
    for (int j = 0; j < n; ++j) {
      double lo = model.lower[j], hi = model.upper[j];
      lp.add_var(lo, hi, model.objective[j]);
    }
    for (std::size_t t = 0; t < model.trust_vars.size(); ++t) {
      int j = model.trust_vars[t];
      lp.lower[j] = std::max(lp.lower[j], start[j] - radius[t]);
      lp.upper[j] = std::min(lp.upper[j], start[j] + radius[t]);
    }
    // Elastic residual rows: J x + gp - gm = J x0 - g(x0).
    std::vector<int> gp(ng), gm(ng);
    for (int i = 0; i < ng; ++i) {
      gp[i] = lp.add_var(0.0, kInf, penalty);
      gm[i] = lp.add_var(0.0, kInf, penalty);
    }
    for (const LpRow& row : model.linear_rows) lp.add_row(row.sense, row.rhs, row.coefs);
    for (int i = 0; i < ng; ++i) {
      double rhs = -g[i];
      std::vector<std::pair<int, double>> coefs = jac[i];
      for (auto [j, a] : jac[i]) rhs += a * start[j];
      coefs.emplace_back(gp[i], 1.0);
      coefs.emplace_back(gm[i], -1.0);
      lp.add_row(RowSense::eq, rhs, std::move(coefs));
    }

    bool restored = false;
    LpSolution sol = lp_solve(lp, opts.lp);
    if (sol.status == LpStatus::infeasible && it == 1) {
      // The start may violate the hard rows inside the trust box; retry once
      // with the box lifted to restore hard feasibility.
      for (int j = 0; j < n; ++j) {
        lp.lower[j] = model.lower[j];
        lp.upper[j] = model.upper[j];
      }
      sol = lp_solve(lp, opts.lp);
      restored = true;
    }
    if (sol.status != LpStatus::optimal) {
      res.status = SlpStatus::infeasible;
      res.message = "subproblem " + std::string(to_string(sol.status));
      break;
    }

    std::vector<double> cand(sol.primal.begin(), sol.primal.begin() + n);
    model.residual(cand, g_cand);
    double cand_merit = fval(cand) + penalty * norm1(g_cand);
    double pred_merit = model.objective_offset;
    for (int j = 0; j < n; ++j) pred_merit += model.objective[j] * cand[j];
    for (int i = 0; i < ng; ++i) pred_merit += penalty * (sol.primal[gp[i]] + sol.primal[gm[i]]);

    double step = 0.0;
    for (int j = 0; j < n; ++j) step = std::max(step, std::abs(cand[j] - start[j]));

    if (restored) {  // feasibility restoration is accepted unconditionally
      start = cand;
      g = g_cand;
      merit = cand_merit;
      best_infeas = norm_inf(g);
      continue;
    }

    double actual_red = merit - cand_merit;
    double pred_red = merit - pred_merit;

    if (actual_red > 0.0) {
      double prev_obj = fval(start);
      start = cand;
      g = g_cand;
      merit = cand_merit;
      if (pred_red > 1e-15 && actual_red / pred_red >= opts.accept_ratio) {
        for (double& r : radius) r *= opts.grow;
      }
      double infeas = norm_inf(g);
      if (infeas < best_infeas - 1e-12) {
        best_infeas = infeas;
        stalled = 0;
      } else if (infeas > opts.residual_tol) {
        if (++stalled >= 5) {
          penalty *= 2.0;
          merit = fval(start) + penalty * norm1(g);
          stalled = 0;
        }
      }
      bool small_step = step < opts.step_tol;
      bool settled = infeas <= opts.residual_tol &&
                     std::abs(fval(start) - prev_obj) <= opts.objective_tol * (1.0 + std::abs(prev_obj));
      if (small_step || settled) {
        res.status = infeas <= opts.residual_tol ? SlpStatus::converged : SlpStatus::infeasible;
        if (res.status == SlpStatus::infeasible) {
          res.message = "stationary with residual " + std::to_string(infeas);
        }
        break;
      }
    } else {
      for (double& r : radius) r *= opts.shrink;
      double rmax = 0.0;
      for (double r : radius) rmax = std::max(rmax, r);
      if (step < opts.step_tol || rmax < 1e-14) {
        double infeas = norm_inf(g);
        res.status = infeas <= opts.residual_tol ? SlpStatus::converged : SlpStatus::infeasible;
        if (res.status == SlpStatus::infeasible) {
          res.message = "trust region collapsed with residual " + std::to_string(infeas);
        }
        break;
      }
    }
  }

  if (res.status == SlpStatus::iteration_limit) {
    double infeas = norm_inf(g);
    if (infeas <= opts.residual_tol) res.status = SlpStatus::converged;
  }
  res.x = std::move(start);
  res.objective = fval(res.x);
  res.residual_inf = norm_inf(g);
  return res;
}

}  // namespace wdn
