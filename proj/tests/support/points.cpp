#include "points.hpp"

#include <algorithm>
#include <cmath>

namespace wdn::testgen {

std::vector<double> pack_full_point(const NetworkGraph& net, const FullVarSpace& space,
                                    const HydraulicState& hyd, const QualityState& qual,
                                    const ValvePlacement& valves,
                                    const std::vector<std::uint8_t>& v_b) {
  std::vector<double> x(space.total(), 0.0);
  const int np = net.n_p(), nn = net.n_n(), nt = net.n_t;
  for (int l = 0; l < np; ++l) {
    for (int k = 0; k < nt; ++k) {
      x[space.q(l, k)] = hyd.q(l, k);
      x[space.eta(l, k)] = hyd.eta(l, k);
      x[space.theta(l, k)] = hyd.theta(l, k);
      x[space.s(l, k)] = hyd.s(l, k);
      x[space.qp(l, k)] = hyd.qp(l, k);
      x[space.qm(l, k)] = hyd.qm(l, k);
      x[space.thp(l, k)] = hyd.thp(l, k);
      x[space.thm(l, k)] = hyd.thm(l, k);
      x[space.z(l, k)] = hyd.z(l, k);
      int J = net.links[l].segments;
      for (int j = 0; j <= J; ++j) {
        x[space.r(l, j, k)] = qual.r[l](j, k + 1);
        x[space.w(l, j, k)] = hyd.s(l, k) * qual.r[l](j, k + 1);
      }
      x[space.rho(l, k)] = hyd.z(l, k) * (x[space.w(l, 0, k)] + x[space.w(l, J, k)]);
    }
  }
  for (int i = 0; i < nn; ++i) {
    for (int k = 0; k < nt; ++k) {
      x[space.h(i, k)] = hyd.h(i, k);
      x[space.c(i, k)] = qual.c(i, k);
      x[space.xi(i, k)] = qual.xi(i, k);
      x[space.mu(i, k)] = std::abs(qual.c(i, k) - net.nodes[i].c_target);
    }
  }
  for (int s = 0; s < net.n_0(); ++s) {
    for (int k = 0; k < nt; ++k) x[space.c_source(s, k)] = qual.c(nn + s, k);
  }
  for (int slot = 0; slot < 2 * np; ++slot) x[space.v(slot)] = valves.v[slot] ? 1.0 : 0.0;
  for (int i = 0; i < nn; ++i) x[space.vb(i)] = v_b.empty() ? 0.0 : (v_b[i] ? 1.0 : 0.0);
  return x;
}

double row_violation(const LpRow& row, const std::vector<double>& x) {
  double v = 0.0;
  for (auto [j, a] : row.coefs) v += a * x[j];
  switch (row.sense) {
    case RowSense::le: return v - row.rhs;
    case RowSense::ge: return row.rhs - v;
    case RowSense::eq: return std::abs(v - row.rhs);
  }
  return 0.0;
}

double max_row_violation(const LpProblem& lp, const std::vector<double>& x) {
  double worst = 0.0;
  for (const LpRow& r : lp.rows) worst = std::max(worst, row_violation(r, x));
  return worst;
}

double max_bound_violation(const LpProblem& lp, const std::vector<double>& x) {
  double worst = 0.0;
  for (int j = 0; j < lp.num_vars(); ++j) {
    if (lp.lower[j] != -kInf) worst = std::max(worst, lp.lower[j] - x[j]);
    if (lp.upper[j] != kInf) worst = std::max(worst, x[j] - lp.upper[j]);
  }
  return worst;
}

}  // namespace wdn::testgen
