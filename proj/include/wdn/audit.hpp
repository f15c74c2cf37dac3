#pragma once

#include "wdn/quality.hpp"

namespace wdn {

/// Worst violation per constraint family, evaluated directly from the
/// formulas (no LP machinery) so feasibility claims are cross-checked by an
/// independent arithmetic path.
struct AuditReport {
  struct Family {
    std::string name;
    double max_residual = 0.0;
  };
  std::vector<Family> families;
  double worst = 0.0;

  bool pass(double tol) const { return worst <= tol; }
  std::string summary() const;
};

AuditReport audit_full_point(const NetworkGraph& net, const HeadlossCoefficients& coeffs,
                             const HydraulicState& hyd, const QualityState& qual,
                             const ValvePlacement& valves, const std::vector<std::uint8_t>& v_b,
                             int n_v, int n_b);

}  // namespace wdn
