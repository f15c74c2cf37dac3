#pragma once

#include "wdn/quality.hpp"

namespace wdn {

/// Rounds a fractional valve vector to an indicator in the placement set:
/// per link only the larger direction counts (tie: positive direction), the
/// n_v largest link maxima win (tie: smaller link index).
ValvePlacement round_valve_vector(const std::vector<double>& v, int n_p, int n_v);

struct FeasibleSolution {
  bool ok = false;
  std::string message;        // failure reason when !ok
  HydraulicState hyd;
  QualityState qual;
  std::vector<std::uint8_t> v_b;
  double f_azp = 0.0;
  double f_atd = 0.0;
  double upper_bound = 0.0;   // f_azp + f_atd
};

/// Two-stage feasible-point construction for a fixed valve placement:
/// pressure NLP first, then the booster MILP on the recovered hydraulics.
/// NLP failure returns ok=false (the caller records it and moves on); MILP
/// infeasibility throws InternalError, since the gating constants make the
/// quality block feasible for any recovered hydraulics.
FeasibleSolution build_feasible_solution(const NetworkGraph& net,
                                         const HeadlossCoefficients& coeffs,
                                         const ValvePlacement& vhat, int n_b,
                                         const BoundsBox& bounds,
                                         const NlpOptions& nlp_opts = {});

}  // namespace wdn
