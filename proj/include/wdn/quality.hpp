#pragma once

#include <optional>

#include "wdn/hydraulics.hpp"
#include "wdn/milp.hpp"
#include "wdn/network.hpp"
#include "wdn/relaxation.hpp"

namespace wdn {

/// Discretization constants of one link: cell length and the flow-to-velocity
/// factor gamma = 4 dt / (10^3 pi D^2 dx).
struct PdeCoefficients {
  double gamma = 0.0;
  double dx = 0.0;
};

PdeCoefficients pde_coefficients(const Link& link, double dt);

/// Concentration trajectories. c covers demand nodes then sources, steps
/// 1..n_t stored at column k-1. r per link covers grid point j and steps
/// 0..n_t (column 0 is the initial condition).
struct QualityState {
  Array2 c;
  std::vector<Array2> r;
  Array2 xi;  // booster mass-rate injections per (demand node, step)
};

struct BoosterSchedule {
  std::vector<std::uint8_t> v_b;  // placement indicator per demand node
  Array2 xi;                      // (demand node, step), >= 0
};

/// Implicit-upwind transport with first-order decay and nodal mixing.
/// source_c is (source, step). r_init overrides the initial grid values
/// (defaults to the downstream node's c0). Throws SolveError naming the node
/// when a zero-throughput node is asked to absorb a booster injection;
/// zero-throughput nodes otherwise carry concentration 0.
QualityState simulate_quality(const NetworkGraph& net, const HydraulicState& hyd,
                              const Array2& source_c, const BoosterSchedule* boosters = nullptr,
                              const std::vector<std::vector<double>>* r_init = nullptr);

/// 24-step flush with all inlets at 0.5 mg/L and clean pipes; returns the
/// final-step concentration per demand node then per source.
std::vector<double> warmup_initial_concentrations(const NetworkGraph& net,
                                                  const HydraulicState& hyd);

/// Demand-weighted mean absolute deviation from the target concentrations.
double compute_atd(const NetworkGraph& net, const QualityState& quality,
                   const std::vector<double>& c_target);

/// Column layout of the water-quality block (binaries: booster placement).
class QualityVarSpace {
 public:
  QualityVarSpace(const NetworkGraph& net);

  int c(int ci, int k) const { return c0_ + ci * nt_ + k; }
  int c_source(int src, int k) const { return c(nn_ + src, k); }
  int r(int l, int j, int k) const { return r0_ + (grid_off_[l] + j) * nt_ + k; }
  int w(int l, int j, int k) const { return w0_ + (grid_off_[l] + j) * nt_ + k; }
  int rho(int l, int k) const { return rho0_ + l * nt_ + k; }
  int xi(int i, int k) const { return xi0_ + i * nt_ + k; }
  int mu(int i, int k) const { return mu0_ + i * nt_ + k; }
  int vb(int i) const { return vb0_ + i; }
  int total() const { return total_; }

 private:
  int nt_, nn_;
  std::vector<int> grid_off_;
  int c0_, r0_, w0_, rho0_, xi0_, mu0_, vb0_, total_;
};

struct QualityMilpBuild {
  MilpProblem problem;
  QualityVarSpace space;
};

/// Booster placement MILP for fixed hydraulics: the bilinear rows become
/// linear with s fixed at s_star, direction gating is resolved by the binary
/// z_star, and the only remaining binaries are the booster indicators.
QualityMilpBuild assemble_quality_milp(const NetworkGraph& net, const Array2& s_star,
                                       const Array2& z_star, int n_b, const BoundsBox& bounds);

/// Trajectory export: columns (time, entity-kind, entity-id, segment, value),
/// rows sorted by kind, id, segment, time.
void write_trajectory_csv(const NetworkGraph& net, const QualityState& qs, std::ostream& os);

}  // namespace wdn
