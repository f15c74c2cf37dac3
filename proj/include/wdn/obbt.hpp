#pragma once

#include "wdn/relaxation.hpp"

namespace wdn {

/// Interval images of the splitting map over a flow box (per link and step).
struct UBounds {
  Array2 s_lo, s_hi, qp_lo, qp_hi, qm_lo, qm_hi, thp_lo, thp_hi, thm_lo, thm_hi;
};

/// Componentwise images of q+, q-, s and the monotone head-loss map on the
/// given flow intervals.
UBounds propagate_u_bounds(const Array2& q_lo, const Array2& q_hi,
                           const HeadlossCoefficients& coeffs);

struct ObbtEntry {
  int link = 0, k = 0;
  double old_lo = 0, old_hi = 0, new_lo = 0, new_hi = 0;
  LpStatus status_min = LpStatus::iteration_limit;
  LpStatus status_max = LpStatus::iteration_limit;
};

struct ObbtReport {
  std::vector<ObbtEntry> entries;  // ordered by (link, k)
  double wall_seconds = 0.0;
};

struct ObbtOptions {
  int threads = 1;  // 1 = serial reference sweep; >1 or 0(auto) = OpenMP sweep
  LpOptions lp;
};

struct ObbtOutcome {
  BoundsBox bounds;
  ObbtReport report;
};

/// One batch sweep of per-step flow-bound tightening LPs (two per link and
/// step, relaxed decoupled valves). All LPs of a sweep use the bounds frozen
/// at sweep start; the tightened intervals are clipped into the old ones and
/// applied together afterward. Throws SolveError with the offending (link,
/// step) when some LP is infeasible (the instance is globally infeasible).
ObbtOutcome tighten_flow_bounds(const NetworkGraph& net, const HeadlossCoefficients& coeffs,
                                const BoundsBox& bounds, int m, int n_v,
                                const ObbtOptions& opts = {});

void write_obbt_csv(const NetworkGraph& net, const ObbtReport& report, std::ostream& os);

}  // namespace wdn
