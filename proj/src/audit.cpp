#include "wdn/audit.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "wdn/obbt.hpp"

namespace wdn {

std::string AuditReport::summary() const {
  std::ostringstream os;
  os.precision(3);
  for (const Family& f : families) os << f.name << "=" << f.max_residual << " ";
  return os.str();
}

AuditReport audit_full_point(const NetworkGraph& net, const HeadlossCoefficients& coeffs,
                             const HydraulicState& hyd, const QualityState& qual,
                             const ValvePlacement& valves, const std::vector<std::uint8_t>& v_b,
                             int n_v, int n_b) {
  const int np = net.n_p(), nn = net.n_n(), nt = net.n_t;
  AuditReport rep;
  auto family = [&rep](const std::string& name) -> double& {
    rep.families.push_back({name, 0.0});
    return rep.families.back().max_residual;
  };
  auto up = [](double& slot, double viol) { slot = std::max(slot, viol); };

  UBounds ub = propagate_u_bounds(
      [&] {
        Array2 lo(np, nt);
        for (int l = 0; l < np; ++l)
          for (int k = 0; k < nt; ++k) lo(l, k) = net.links[l].q_min[k];
        return lo;
      }(),
      [&] {
        Array2 hi(np, nt);
        for (int l = 0; l < np; ++l)
          for (int k = 0; k < nt; ++k) hi(l, k) = net.links[l].q_max[k];
        return hi;
      }(),
      coeffs);

  double& energy = family("energy");
  double& mass = family("mass");
  double& headloss = family("headloss");
  double& split = family("split");
  double& comp = family("complementarity");
  double& gate = family("direction-gating");
  double& valve_rows = family("valve-activation");
  double& hyd_bounds = family("hydraulic-bounds");
  double& placement = family("placement-set");
  double& pde = family("transport");
  double& boundary = family("inlet-selection");
  double& mixing = family("mixing");
  double& booster = family("booster-gating");
  double& q_bounds = family("quality-bounds");

  for (int k = 0; k < nt; ++k) {
    for (int l = 0; l < np; ++l) {
      const Link& ln = net.links[l];
      double q = hyd.q(l, k), eta = hyd.eta(l, k), theta = hyd.theta(l, k);
      double head1 = ln.from.is_source ? net.sources[ln.from.index].h0[k]
                                       : hyd.h(ln.from.index, k);
      double head2 = ln.to.is_source ? net.sources[ln.to.index].h0[k] : hyd.h(ln.to.index, k);
      up(energy, std::abs(head1 - head2 - theta - eta));
      up(headloss, std::abs(theta - eval_headloss(coeffs.a[l], coeffs.b[l], q)));
      up(split, std::abs(q - hyd.qp(l, k) + hyd.qm(l, k)));
      up(split, std::abs(hyd.s(l, k) - hyd.qp(l, k) - hyd.qm(l, k)));
      up(split, std::abs(theta - hyd.thp(l, k) + hyd.thm(l, k)));
      up(comp, std::abs(hyd.qp(l, k) * hyd.qm(l, k)));

      double z = hyd.z(l, k);
      up(gate, std::abs(z * (1.0 - z)));  // binary
      up(gate, hyd.qp(l, k) - ub.qp_hi(l, k) * z);
      up(gate, hyd.qm(l, k) - ub.qm_hi(l, k) * (1.0 - z));
      up(gate, hyd.thp(l, k) - ub.thp_hi(l, k) * z);
      up(gate, hyd.thm(l, k) - ub.thm_hi(l, k) * (1.0 - z));

      double vp = valves.v[l] ? 1.0 : 0.0, vm = valves.v[np + l] ? 1.0 : 0.0;
      up(valve_rows, eta - ln.eta_max[k] * vp);
      up(valve_rows, -eta + ln.eta_min[k] * vm);
      up(valve_rows, ln.q_min[k] * (1.0 - vp) - q);
      up(valve_rows, q - ln.q_max[k] * (1.0 - vm));

      up(hyd_bounds, ln.q_min[k] - q);
      up(hyd_bounds, q - ln.q_max[k]);
      up(hyd_bounds, ln.eta_min[k] - eta);
      up(hyd_bounds, eta - ln.eta_max[k]);
    }
    for (int i = 0; i < nn; ++i) {
      double inflow = 0.0;
      for (int l : net.links_in(i)) inflow += hyd.q(l, k);
      for (int l : net.links_out(i)) inflow -= hyd.q(l, k);
      up(mass, std::abs(inflow - net.nodes[i].demand[k]));
      up(hyd_bounds, net.nodes[i].h_min[k] - hyd.h(i, k));
      up(hyd_bounds, hyd.h(i, k) - net.nodes[i].h_max[k]);
    }
  }

  int v_total = 0;
  for (int l = 0; l < np; ++l) {
    if (valves.v[l] && valves.v[np + l]) up(placement, 1.0);
    v_total += (valves.v[l] ? 1 : 0) + (valves.v[np + l] ? 1 : 0);
  }
  up(placement, std::abs(v_total - n_v));

  // Water-quality families, with w = s r and rho = z (w0 + wJ).
  for (int k = 0; k < nt; ++k) {
    for (int l = 0; l < np; ++l) {
      const Link& ln = net.links[l];
      double s = hyd.s(l, k), z = hyd.z(l, k);
      double alpha_dt = ln.decay * net.dt;
      double gamma = pde_coefficients(ln, net.dt).gamma;
      for (int j = 1; j <= ln.segments; ++j) {
        double w_j = s * qual.r[l](j, k + 1), w_jm = s * qual.r[l](j - 1, k + 1);
        double res = (1.0 + alpha_dt) * qual.r[l](j, k + 1) - qual.r[l](j, k) +
                     gamma * (w_j - w_jm);
        up(pde, std::abs(res));
      }
      double c1 = ln.from.is_source ? qual.c(nn + ln.from.index, k) : qual.c(ln.from.index, k);
      double c2 = ln.to.is_source ? qual.c(nn + ln.to.index, k) : qual.c(ln.to.index, k);
      double cmax1 = ln.from.is_source ? net.sources[ln.from.index].c_max
                                       : net.nodes[ln.from.index].c_max;
      double cmax2 =
          ln.to.is_source ? net.sources[ln.to.index].c_max : net.nodes[ln.to.index].c_max;
      double r0 = qual.r[l](0, k + 1);
      up(boundary, r0 - c1 + cmax2 * z - cmax2);
      up(boundary, -r0 + c1 + cmax1 * z - cmax1);
      up(boundary, r0 - c2 - cmax1 * z);
      up(boundary, -r0 + c2 - cmax2 * z);

      for (int j = 0; j <= ln.segments; ++j) {
        up(q_bounds, -qual.r[l](j, k + 1));
        up(q_bounds, qual.r[l](j, k + 1) - std::max({cmax1, cmax2,
                                                     ln.to.is_source
                                                         ? net.sources[ln.to.index].c0
                                                         : net.nodes[ln.to.index].c0}));
      }
    }
    for (int i = 0; i < nn; ++i) {
      double lhs = qual.c(i, k) * net.nodes[i].demand[k] - qual.xi(i, k);
      for (int l : net.links_in(i)) {
        double s = hyd.s(l, k), z = hyd.z(l, k);
        double w0 = s * qual.r[l](0, k + 1);
        double wj = s * qual.r[l](net.links[l].segments, k + 1);
        double rho = z * (w0 + wj);
        lhs += w0 - rho;
      }
      for (int l : net.links_out(i)) {
        double s = hyd.s(l, k), z = hyd.z(l, k);
        double w0 = s * qual.r[l](0, k + 1);
        double wj = s * qual.r[l](net.links[l].segments, k + 1);
        double rho = z * (w0 + wj);
        lhs += rho - wj;
      }
      up(mixing, std::abs(lhs));
      if (!v_b[i]) up(booster, qual.xi(i, k));  // no station, no injection
      up(q_bounds, -qual.xi(i, k));
      up(q_bounds, -qual.c(i, k));
      up(q_bounds, qual.c(i, k) - net.nodes[i].c_max);
    }
  }
  int b_total = 0;
  for (int i = 0; i < nn; ++i) b_total += v_b[i] ? 1 : 0;
  up(placement, std::abs(b_total - n_b));

  for (const auto& f : rep.families) rep.worst = std::max(rep.worst, f.max_residual);
  return rep;
}

}  // namespace wdn
