#pragma once

#include "wdn/hydraulics.hpp"
#include "wdn/lp.hpp"
#include "wdn/network.hpp"

namespace wdn {

/// Variable boxes used by the polyhedral relaxation: flow intervals, their
/// images under the splitting map, and the water-quality caps.
struct BoundsBox {
  Array2 q_lo, q_hi;                                        // (link, k)
  Array2 s_lo, s_hi, qp_lo, qp_hi, qm_lo, qm_hi;            // (link, k)
  Array2 thp_lo, thp_hi, thm_lo, thm_hi;                    // (link, k)
  Array2 theta_lo, theta_hi;                                // (link, k)
  std::vector<double> r_hi;                                 // per link, segment cap

  static BoundsBox from_network(const NetworkGraph& net, const HeadlossCoefficients& coeffs);

  /// Replace the flow intervals and re-propagate every derived box.
  void set_flow_bounds(Array2 new_q_lo, Array2 new_q_hi, const HeadlossCoefficients& coeffs);

  double w_hi(const NetworkGraph& net, int link, int k) const;
  double rho_hi(const NetworkGraph& net, int link, int k) const;
  double xi_hi(const NetworkGraph& net, int node, int k) const;
};

enum class CutTag { tangent, secant, rlt1, rlt2, rlt3, rlt4 };

const char* to_string(CutTag t);

/// One relaxation row: theta_coef * theta + q_coef * q {sense} rhs.
struct QuadraticCut {
  RowSense sense;
  double theta_coef, q_coef, rhs;
  CutTag tag;
  int tangent_index = -1;  // 1..m for tangents
};

/// Tangent/secant relaxation of theta = a q^2 + b q over [q_lo, q_hi],
/// q_lo >= 0: m equidistant tangents (under) plus the chord (over).
std::vector<QuadraticCut> relax_quadratic_scalar(double a, double b, double q_lo, double q_hi,
                                                 int m);

/// One bilinear envelope row: w + s_coef * s + r_coef * r {sense} rhs.
struct BilinearCut {
  RowSense sense;
  double s_coef, r_coef, rhs;
  CutTag tag;
};

/// The four McCormick rows for w = s * r over [s_lo,s_hi] x [r_lo,r_hi].
std::vector<BilinearCut> relax_bilinear(double s_lo, double s_hi, double r_lo, double r_hi);

/// Row provenance for the relaxation cuts inside an assembled LP.
struct CutRow {
  int row;      // index into the LpProblem
  CutTag tag;
  int tangent_index;  // for tangents
  int link, k, j;     // j = -1 for hydraulic cuts
};

struct CutSet {
  std::vector<CutRow> rows;
};

/// Column layout of the full planning problem (all time steps).
class FullVarSpace {
 public:
  explicit FullVarSpace(const NetworkGraph& net);

  int q(int l, int k) const { return q0_ + l * nt_ + k; }
  int h(int i, int k) const { return h0_ + i * nt_ + k; }
  int eta(int l, int k) const { return eta0_ + l * nt_ + k; }
  int theta(int l, int k) const { return th0_ + l * nt_ + k; }
  int s(int l, int k) const { return s0_ + l * nt_ + k; }
  int qp(int l, int k) const { return qp0_ + l * nt_ + k; }
  int qm(int l, int k) const { return qm0_ + l * nt_ + k; }
  int thp(int l, int k) const { return thp0_ + l * nt_ + k; }
  int thm(int l, int k) const { return thm0_ + l * nt_ + k; }
  int z(int l, int k) const { return z0_ + l * nt_ + k; }
  /// ci in [0, n_n + n_0): demand nodes first, then sources.
  int c(int ci, int k) const { return c0_ + ci * nt_ + k; }
  int c_source(int src, int k) const { return c(nn_ + src, k); }
  int r(int l, int j, int k) const { return r0_ + (grid_off_[l] + j) * nt_ + k; }
  int w(int l, int j, int k) const { return w0_ + (grid_off_[l] + j) * nt_ + k; }
  int rho(int l, int k) const { return rho0_ + l * nt_ + k; }
  int xi(int i, int k) const { return xi0_ + i * nt_ + k; }
  int mu(int i, int k) const { return mu0_ + i * nt_ + k; }
  int v(int slot) const { return v0_ + slot; }  // slot in [0, 2*n_p)
  int vb(int i) const { return vb0_ + i; }

  int total() const { return total_; }
  int grid_points(int l) const { return grid_off_[l + 1] - grid_off_[l]; }

 private:
  int nt_, nn_;
  std::vector<int> grid_off_;
  int q0_, h0_, eta0_, th0_, s0_, qp0_, qm0_, thp0_, thm0_, z0_;
  int c0_, r0_, w0_, rho0_, xi0_, mu0_, v0_, vb0_, total_;
};

struct RelaxationBuild {
  LpProblem lp;
  FullVarSpace space;
  CutSet cuts;
};

/// The continuous polyhedral relaxation of the planning problem: every
/// binary relaxed to [0,1], quadratic rows replaced by tangent/secant cuts,
/// bilinear rows by McCormick envelopes.
RelaxationBuild assemble_relaxation(const NetworkGraph& net, const HeadlossCoefficients& coeffs,
                                    const BoundsBox& bounds, int m, int n_v, int n_b);

/// One time step's hydraulic relaxation LP (no water-quality block), used by
/// bound tightening and by the NLP initialization. When `fixed_v` is given
/// the valve columns are folded into constants; otherwise relaxed valve
/// columns plus the placement budget rows (with n_v) are included.
struct HydroStepLp {
  LpProblem lp;
  HydroStepCols cols;
};

HydroStepLp build_hydraulic_step_lp(const NetworkGraph& net, const HeadlossCoefficients& coeffs,
                                    const BoundsBox& bounds, int m, int k,
                                    const ValvePlacement* fixed_v, int n_v);

}  // namespace wdn
