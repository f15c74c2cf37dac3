#pragma once

#include <optional>

#include "wdn/heuristic.hpp"
#include "wdn/obbt.hpp"

namespace wdn {

/// Worst-case optimality gap in percent: 100 (ub - lb) / lb.
/// Throws SolveError when lb <= 0 (the formula is undefined there).
double compute_gap(double ub, double lb);

struct RtrIteration {
  int i = 0;               // 1-based
  double lb = 0.0;
  bool nlp_ok = false;
  double f_azp = 0.0;      // valid when nlp_ok
  bool obbt_ran = false;
  double obbt_seconds = 0.0;
  int lp_rows = 0, lp_cols = 0;
};

enum class RtrStatus { ok, no_feasible_solution, infeasible };

const char* to_string(RtrStatus s);

struct RtrResult {
  RtrStatus status = RtrStatus::infeasible;
  double lb = 0.0;
  bool has_ub = false;
  double ub = 0.0;
  std::optional<double> gap_percent;  // empty when no UB or lb <= 0
  double f_azp = 0.0, f_atd = 0.0;
  ValvePlacement valves;
  std::vector<std::uint8_t> boosters;
  HydraulicState hyd;
  QualityState qual;
  std::vector<RtrIteration> trace;
  double wall_seconds = 0.0;
  std::string message;
};

struct RtrOptions {
  int obbt_threads = 1;
  NlpOptions nlp;
  LpOptions lp;
};

/// The relax-tighten-round loop: relaxation LP for the lower bound, rounding
/// plus pressure NLP per iteration, bound-tightening sweeps between
/// iterations, and one final booster MILP on the best hydraulic solution.
RtrResult run_rtr(const NetworkGraph& net, const ProblemConfig& config,
                  const RtrOptions& opts = {});

}  // namespace wdn
