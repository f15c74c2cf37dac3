#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wdn/lp.hpp"
#include "wdn/network.hpp"

namespace wdn {

/// Quadratic head-loss coefficients theta = a|q|q + bq per link.
struct HeadlossCoefficients {
  std::vector<double> a;  // m*(s/L)^2, > 0
  std::vector<double> b;  // m*s/L, >= 0
  std::vector<double> q_ref;  // fitting range used per link, L/s
};

/// Hazen-Williams head loss (odd-extended to negative flow), q in L/s.
double hazen_williams_headloss(const Link& link, double q);

/// Least-squares quadratic fit of the Hazen-Williams curve on 100 uniform
/// samples of [0, q_ref], constrained to a > 0, b >= 0.
std::pair<double, double> fit_headloss_coefficients(const Link& link, double q_ref);

/// Fit every link, q_ref taken from its flow bounds.
HeadlossCoefficients fit_all_headloss(const NetworkGraph& net);

/// theta = a |q| q + b q.
double eval_headloss(double a, double b, double q);

struct AuxValues {
  double qp = 0, qm = 0, s = 0, thp = 0, thm = 0;
  int z = 0;  // sign(0) = -1 convention, so z = 0 at q = 0
};

/// Flow/head-loss splitting: exact componentwise recovery.
AuxValues recover_aux(double q, double theta);

/// Valve placement indicator over 2*n_p slots: [0,n_p) positive direction,
/// [n_p,2*n_p) negative direction.
struct ValvePlacement {
  std::vector<std::uint8_t> v;

  int count() const;
  /// Member of the placement set: per-link sum <= 1 and total == n_v.
  bool valid(int n_p, int n_v) const;
};

struct HydraulicState {
  Array2 q, eta, theta;            // (link, k)
  Array2 h;                        // (demand node, k)
  Array2 s, qp, qm, thp, thm;      // (link, k)
  Array2 z;                        // (link, k), exact 0/1
  double f_azp = 0.0;              // sum_k sum_i w_i (h - elev)
};

/// Columns of one time step's hydraulic variables inside some LpProblem.
/// v is empty when the placement is fixed (then v_fixed has 2*n_p entries).
struct HydroStepCols {
  std::vector<int> q, eta, theta, s, qp, qm, thp, thm, z;  // per link
  std::vector<int> h;  // per demand node
  std::vector<int> v;  // 2*n_p or empty
  const double* v_fixed = nullptr;
};

/// Big-M data for one time step (per-link values).
struct HydroStepBigM {
  std::vector<double> q_min, q_max, eta_min, eta_max;      // valve rows
  std::vector<double> qp_max, qm_max, thp_max, thm_max;    // direction gating
};

/// Emits the linear hydraulic rows of one time step: energy balance, mass
/// balance, valve activation, flow splitting, and direction gating. The
/// quadratic head-loss rows are not emitted here.
void append_hydraulic_rows(LpProblem& lp, const NetworkGraph& net, int k,
                           const HydroStepCols& cols, const HydroStepBigM& big_m);

/// Per-link <= 1 and total == n_v over the 2*n_p valve columns.
void append_valve_budget_rows(LpProblem& lp, const std::vector<int>& v_cols, int n_p, int n_v);

struct NlpOptions {
  int relaxation_points = 5;  // tangents in the initialization LP
  double residual_tol = 1e-6;
  LpOptions lp;
};

struct NlpResult {
  bool feasible = false;
  HydraulicState state;
  double f_azp = 0.0;
  std::string message;
};

/// Fixed-valve minimum-pressure operation: sequential linear programming on
/// the smoothed head-loss equations, one independent solve per time step.
NlpResult solve_fixed_valve_nlp(const NetworkGraph& net, const HeadlossCoefficients& coeffs,
                                const ValvePlacement& placement, const NlpOptions& opts = {});

}  // namespace wdn
