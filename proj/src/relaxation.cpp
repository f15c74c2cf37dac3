#include "wdn/relaxation.hpp"

#include <algorithm>
#include <cmath>

#include "wdn/obbt.hpp"
#include "wdn/quality.hpp"

namespace wdn {

namespace {

double endpoint_c_max(const NetworkGraph& net, const EndpointRef& e) {
  return e.is_source ? net.sources[e.index].c_max : net.nodes[e.index].c_max;
}

double endpoint_c0(const NetworkGraph& net, const EndpointRef& e) {
  return e.is_source ? net.sources[e.index].c0 : net.nodes[e.index].c0;
}

}  // namespace

BoundsBox BoundsBox::from_network(const NetworkGraph& net, const HeadlossCoefficients& coeffs) {
  const int np = net.n_p(), nt = net.n_t;
  BoundsBox b;
  b.q_lo = Array2(np, nt);
  b.q_hi = Array2(np, nt);
  for (int l = 0; l < np; ++l) {
    for (int k = 0; k < nt; ++k) {
      b.q_lo(l, k) = net.links[l].q_min[k];
      b.q_hi(l, k) = net.links[l].q_max[k];
    }
  }
  b.r_hi.resize(np);
  for (int l = 0; l < np; ++l) {
    const Link& ln = net.links[l];
    b.r_hi[l] = std::max({endpoint_c_max(net, ln.from), endpoint_c_max(net, ln.to),
                          endpoint_c0(net, ln.to)});
  }
  b.set_flow_bounds(b.q_lo, b.q_hi, coeffs);
  return b;
}

void BoundsBox::set_flow_bounds(Array2 new_q_lo, Array2 new_q_hi,
                                const HeadlossCoefficients& coeffs) {
  q_lo = std::move(new_q_lo);
  q_hi = std::move(new_q_hi);
  UBounds u = propagate_u_bounds(q_lo, q_hi, coeffs);
  s_lo = std::move(u.s_lo);
  s_hi = std::move(u.s_hi);
  qp_lo = std::move(u.qp_lo);
  qp_hi = std::move(u.qp_hi);
  qm_lo = std::move(u.qm_lo);
  qm_hi = std::move(u.qm_hi);
  thp_lo = std::move(u.thp_lo);
  thp_hi = std::move(u.thp_hi);
  thm_lo = std::move(u.thm_lo);
  thm_hi = std::move(u.thm_hi);
  const std::size_t np = q_lo.rows(), nt = q_lo.cols();
  theta_lo = Array2(np, nt);
  theta_hi = Array2(np, nt);
  for (std::size_t l = 0; l < np; ++l) {
    for (std::size_t k = 0; k < nt; ++k) {
      // theta = a|q|q + bq is increasing in q.
      theta_lo(l, k) = eval_headloss(coeffs.a[l], coeffs.b[l], q_lo(l, k));
      theta_hi(l, k) = eval_headloss(coeffs.a[l], coeffs.b[l], q_hi(l, k));
    }
  }
}

double BoundsBox::w_hi(const NetworkGraph&, int link, int k) const {
  return s_hi(link, k) * r_hi[link];
}

double BoundsBox::rho_hi(const NetworkGraph& net, int link, int k) const {
  return 2.0 * w_hi(net, link, k);  // grid-end caps coincide (per-link r cap)
}

double BoundsBox::xi_hi(const NetworkGraph& net, int node, int k) const {
  double s_sum = 0.0;
  for (int l : net.links_incident(node)) s_sum += s_hi(l, k);
  return net.nodes[node].c_max * (net.nodes[node].demand[k] + s_sum);
}

const char* to_string(CutTag t) {
  switch (t) {
    case CutTag::tangent: return "tangent";
    case CutTag::secant: return "secant";
    case CutTag::rlt1: return "rlt-1";
    case CutTag::rlt2: return "rlt-2";
    case CutTag::rlt3: return "rlt-3";
    case CutTag::rlt4: return "rlt-4";
  }
  return "?";
}

std::vector<QuadraticCut> relax_quadratic_scalar(double a, double b, double q_lo, double q_hi,
                                                 int m) {
  if (q_lo > q_hi) throw InputError("relax_quadratic_scalar: q_lo > q_hi");
  if (q_lo < 0.0) throw InputError("relax_quadratic_scalar: interval must be nonnegative");
  if (a <= 0.0) throw InputError("relax_quadratic_scalar: a must be > 0");
  if (m < 2) throw InputError("relax_quadratic_scalar: m must be >= 2");

  std::vector<QuadraticCut> cuts;
  cuts.reserve(m + 1);
  for (int i = 0; i < m; ++i) {
    double qi = q_lo + (q_hi - q_lo) * i / (m - 1);
    // theta >= a qi (2q - qi) + b q
    cuts.push_back(QuadraticCut{RowSense::ge, 1.0, -(2.0 * a * qi + b), -a * qi * qi,
                                CutTag::tangent, i + 1});
  }
  // theta <= a (lo + hi) q + b q - a lo hi
  cuts.push_back(QuadraticCut{RowSense::le, 1.0, -(a * (q_lo + q_hi) + b), -a * q_lo * q_hi,
                              CutTag::secant, -1});
  return cuts;
}

std::vector<BilinearCut> relax_bilinear(double s_lo, double s_hi, double r_lo, double r_hi) {
  if (s_lo > s_hi || r_lo > r_hi) throw InputError("relax_bilinear: empty box");
  std::vector<BilinearCut> cuts;
  cuts.reserve(4);
  // w >= s_lo r + r_lo s - s_lo r_lo
  cuts.push_back(BilinearCut{RowSense::ge, -r_lo, -s_lo, -s_lo * r_lo, CutTag::rlt1});
  // w >= s_hi r + r_hi s - s_hi r_hi
  cuts.push_back(BilinearCut{RowSense::ge, -r_hi, -s_hi, -s_hi * r_hi, CutTag::rlt2});
  // w <= s_hi r + r_lo s - s_hi r_lo
  cuts.push_back(BilinearCut{RowSense::le, -r_lo, -s_hi, -s_hi * r_lo, CutTag::rlt3});
  // w <= s_lo r + r_hi s - s_lo r_hi
  cuts.push_back(BilinearCut{RowSense::le, -r_hi, -s_lo, -s_lo * r_hi, CutTag::rlt4});
  return cuts;
}

FullVarSpace::FullVarSpace(const NetworkGraph& net) {
  nt_ = net.n_t;
  nn_ = net.n_n();
  const int np = net.n_p(), n0 = net.n_0();
  grid_off_.assign(np + 1, 0);
  for (int l = 0; l < np; ++l) grid_off_[l + 1] = grid_off_[l] + net.links[l].segments + 1;
  int jbar = grid_off_[np];

  int at = 0;
  q0_ = at; at += np * nt_;
  h0_ = at; at += nn_ * nt_;
  eta0_ = at; at += np * nt_;
  th0_ = at; at += np * nt_;
  s0_ = at; at += np * nt_;
  qp0_ = at; at += np * nt_;
  qm0_ = at; at += np * nt_;
  thp0_ = at; at += np * nt_;
  thm0_ = at; at += np * nt_;
  z0_ = at; at += np * nt_;
  c0_ = at; at += (nn_ + n0) * nt_;
  r0_ = at; at += jbar * nt_;
  w0_ = at; at += jbar * nt_;
  rho0_ = at; at += np * nt_;
  xi0_ = at; at += nn_ * nt_;
  mu0_ = at; at += nn_ * nt_;
  v0_ = at; at += 2 * np;
  vb0_ = at; at += nn_;
  total_ = at;
}

RelaxationBuild assemble_relaxation(const NetworkGraph& net, const HeadlossCoefficients& coeffs,
                                    const BoundsBox& bounds, int m, int n_v, int n_b) {
  const int np = net.n_p(), nn = net.n_n(), n0 = net.n_0(), nt = net.n_t;
  RelaxationBuild out{LpProblem{}, FullVarSpace(net), CutSet{}};
  LpProblem& lp = out.lp;
  const FullVarSpace& X = out.space;

  std::vector<double> w_azp = azp_weights(net);
  Array2 w_atd = atd_weights(net);

  // Columns, in the order the space defines them.
  lp.lower.assign(X.total(), 0.0);
  lp.upper.assign(X.total(), 0.0);
  lp.objective.assign(X.total(), 0.0);
  auto set_col = [&lp](int col, double lo, double hi, double obj = 0.0) {
    lp.lower[col] = lo;
    lp.upper[col] = hi;
    lp.objective[col] = obj;
  };

  double offset = 0.0;
  for (int l = 0; l < np; ++l) {
    const Link& ln = net.links[l];
    for (int k = 0; k < nt; ++k) {
      set_col(X.q(l, k), bounds.q_lo(l, k), bounds.q_hi(l, k));
      set_col(X.eta(l, k), ln.eta_min[k], ln.eta_max[k]);
      set_col(X.theta(l, k), bounds.theta_lo(l, k), bounds.theta_hi(l, k));
      set_col(X.s(l, k), bounds.s_lo(l, k), bounds.s_hi(l, k));
      set_col(X.qp(l, k), bounds.qp_lo(l, k), bounds.qp_hi(l, k));
      set_col(X.qm(l, k), bounds.qm_lo(l, k), bounds.qm_hi(l, k));
      set_col(X.thp(l, k), bounds.thp_lo(l, k), bounds.thp_hi(l, k));
      set_col(X.thm(l, k), bounds.thm_lo(l, k), bounds.thm_hi(l, k));
      set_col(X.z(l, k), 0.0, 1.0);
      set_col(X.rho(l, k), 0.0, bounds.rho_hi(net, l, k));
      for (int j = 0; j <= ln.segments; ++j) {
        set_col(X.r(l, j, k), 0.0, bounds.r_hi[l]);
        set_col(X.w(l, j, k), 0.0, bounds.w_hi(net, l, k));
      }
    }
  }
  for (int i = 0; i < nn; ++i) {
    const Node& nd = net.nodes[i];
    for (int k = 0; k < nt; ++k) {
      set_col(X.h(i, k), nd.h_min[k], nd.h_max[k], w_azp[i]);
      set_col(X.c(i, k), 0.0, nd.c_max);
      set_col(X.xi(i, k), 0.0, bounds.xi_hi(net, i, k));
      set_col(X.mu(i, k), 0.0, kInf, w_atd(i, k));
    }
    offset -= nt * w_azp[i] * nd.elevation;
  }
  for (int src = 0; src < n0; ++src) {
    for (int k = 0; k < nt; ++k) set_col(X.c_source(src, k), 0.0, net.sources[src].c_max);
  }
  for (int slot = 0; slot < 2 * np; ++slot) set_col(X.v(slot), 0.0, 1.0);
  for (int i = 0; i < nn; ++i) set_col(X.vb(i), 0.0, 1.0);
  lp.objective_offset = offset;

  // Hydraulic block per step.
  for (int k = 0; k < nt; ++k) {
    HydroStepCols cols;
    cols.q.resize(np);
    cols.eta.resize(np);
    cols.theta.resize(np);
    cols.s.resize(np);
    cols.qp.resize(np);
    cols.qm.resize(np);
    cols.thp.resize(np);
    cols.thm.resize(np);
    cols.z.resize(np);
    cols.h.resize(nn);
    cols.v.resize(2 * np);
    for (int l = 0; l < np; ++l) {
      cols.q[l] = X.q(l, k);
      cols.eta[l] = X.eta(l, k);
      cols.theta[l] = X.theta(l, k);
      cols.s[l] = X.s(l, k);
      cols.qp[l] = X.qp(l, k);
      cols.qm[l] = X.qm(l, k);
      cols.thp[l] = X.thp(l, k);
      cols.thm[l] = X.thm(l, k);
      cols.z[l] = X.z(l, k);
    }
    for (int i = 0; i < nn; ++i) cols.h[i] = X.h(i, k);
    for (int slot = 0; slot < 2 * np; ++slot) cols.v[slot] = X.v(slot);

    HydroStepBigM big_m;
    big_m.q_min.resize(np);
    big_m.q_max.resize(np);
    big_m.eta_min.resize(np);
    big_m.eta_max.resize(np);
    big_m.qp_max.resize(np);
    big_m.qm_max.resize(np);
    big_m.thp_max.resize(np);
    big_m.thm_max.resize(np);
    for (int l = 0; l < np; ++l) {
      big_m.q_min[l] = bounds.q_lo(l, k);
      big_m.q_max[l] = bounds.q_hi(l, k);
      big_m.eta_min[l] = net.links[l].eta_min[k];
      big_m.eta_max[l] = net.links[l].eta_max[k];
      big_m.qp_max[l] = bounds.qp_hi(l, k);
      big_m.qm_max[l] = bounds.qm_hi(l, k);
      big_m.thp_max[l] = bounds.thp_hi(l, k);
      big_m.thm_max[l] = bounds.thm_hi(l, k);
    }
    append_hydraulic_rows(lp, net, k, cols, big_m);

    // Tangent/secant cuts for both head-loss branches.
    for (int l = 0; l < np; ++l) {
      auto add_quad = [&](int th_col, int q_col, double lo, double hi) {
        for (const QuadraticCut& c :
             relax_quadratic_scalar(coeffs.a[l], coeffs.b[l], lo, hi, m)) {
          int row = lp.add_row(c.sense, c.rhs, {{th_col, c.theta_coef}, {q_col, c.q_coef}});
          out.cuts.rows.push_back(CutRow{row, c.tag, c.tangent_index, l, k, -1});
        }
      };
      add_quad(X.thp(l, k), X.qp(l, k), bounds.qp_lo(l, k), bounds.qp_hi(l, k));
      add_quad(X.thm(l, k), X.qm(l, k), bounds.qm_lo(l, k), bounds.qm_hi(l, k));
    }
  }

  // Water-quality block per step.
  for (int k = 0; k < nt; ++k) {
    for (int i = 0; i < nn; ++i) {
      const Node& nd = net.nodes[i];
      // Deviation linearization.
      lp.add_row(RowSense::le, nd.c_target, {{X.c(i, k), 1.0}, {X.mu(i, k), -1.0}});
      lp.add_row(RowSense::le, -nd.c_target, {{X.c(i, k), -1.0}, {X.mu(i, k), -1.0}});
    }

    for (int l = 0; l < np; ++l) {
      const Link& ln = net.links[l];
      const double alpha_dt = ln.decay * net.dt;
      const double gamma = pde_coefficients(ln, net.dt).gamma;
      for (int j = 1; j <= ln.segments; ++j) {
        std::vector<std::pair<int, double>> coefs{{X.r(l, j, k), 1.0 + alpha_dt},
                                                  {X.w(l, j, k), gamma},
                                                  {X.w(l, j - 1, k), -gamma}};
        double rhs = 0.0;
        if (k == 0) {
          rhs = endpoint_c0(net, ln.to);  // initial grid values
        } else {
          coefs.emplace_back(X.r(l, j, k - 1), -1.0);
        }
        lp.add_row(RowSense::eq, rhs, std::move(coefs));
      }

      // Inlet selection by direction.
      int cu1 = ln.from.is_source ? X.c_source(ln.from.index, k) : X.c(ln.from.index, k);
      int cu2 = ln.to.is_source ? X.c_source(ln.to.index, k) : X.c(ln.to.index, k);
      double cmax1 = endpoint_c_max(net, ln.from), cmax2 = endpoint_c_max(net, ln.to);
      lp.add_row(RowSense::le, cmax2,
                 {{X.r(l, 0, k), 1.0}, {cu1, -1.0}, {X.z(l, k), cmax2}});
      lp.add_row(RowSense::le, cmax1,
                 {{X.r(l, 0, k), -1.0}, {cu1, 1.0}, {X.z(l, k), cmax1}});
      lp.add_row(RowSense::le, 0.0,
                 {{X.r(l, 0, k), 1.0}, {cu2, -1.0}, {X.z(l, k), -cmax1}});
      lp.add_row(RowSense::le, 0.0,
                 {{X.r(l, 0, k), -1.0}, {cu2, 1.0}, {X.z(l, k), -cmax2}});

      // Direction-gated product rho = z (w0 + wJ).
      double rho_max = bounds.rho_hi(net, l, k);
      int wj = X.w(l, ln.segments, k);
      lp.add_row(RowSense::le, 0.0, {{X.rho(l, k), 1.0}, {X.z(l, k), -rho_max}});
      lp.add_row(RowSense::le, rho_max,
                 {{X.w(l, 0, k), 1.0}, {wj, 1.0}, {X.rho(l, k), -1.0}, {X.z(l, k), rho_max}});
      lp.add_row(RowSense::le, 0.0, {{X.w(l, 0, k), -1.0}, {wj, -1.0}, {X.rho(l, k), 1.0}});

      // McCormick rows for w = s r on every grid point.
      for (int j = 0; j <= ln.segments; ++j) {
        for (const BilinearCut& c : relax_bilinear(bounds.s_lo(l, k), bounds.s_hi(l, k), 0.0,
                                                   bounds.r_hi[l])) {
          int row = lp.add_row(c.sense, c.rhs,
                               {{X.w(l, j, k), 1.0}, {X.s(l, k), c.s_coef}, {X.r(l, j, k), c.r_coef}});
          out.cuts.rows.push_back(CutRow{row, c.tag, -1, l, k, j});
        }
      }
    }

    // Nodal mixing with boosters.
    for (int i = 0; i < nn; ++i) {
      std::vector<std::pair<int, double>> coefs{{X.c(i, k), net.nodes[i].demand[k]},
                                                {X.xi(i, k), -1.0}};
      for (int l : net.links_in(i)) {
        coefs.emplace_back(X.w(l, 0, k), 1.0);
        coefs.emplace_back(X.rho(l, k), -1.0);
      }
      for (int l : net.links_out(i)) {
        coefs.emplace_back(X.rho(l, k), 1.0);
        coefs.emplace_back(X.w(l, net.links[l].segments, k), -1.0);
      }
      lp.add_row(RowSense::eq, 0.0, std::move(coefs));
      lp.add_row(RowSense::le, 0.0,
                 {{X.xi(i, k), 1.0}, {X.vb(i), -bounds.xi_hi(net, i, k)}});
    }
  }

  // Placement budgets.
  std::vector<int> v_cols(2 * np);
  for (int slot = 0; slot < 2 * np; ++slot) v_cols[slot] = X.v(slot);
  append_valve_budget_rows(lp, v_cols, np, n_v);
  std::vector<std::pair<int, double>> booster;
  booster.reserve(nn);
  for (int i = 0; i < nn; ++i) booster.emplace_back(X.vb(i), 1.0);
  lp.add_row(RowSense::eq, static_cast<double>(n_b), std::move(booster));

  return out;
}

HydroStepLp build_hydraulic_step_lp(const NetworkGraph& net, const HeadlossCoefficients& coeffs,
                                    const BoundsBox& bounds, int m, int k,
                                    const ValvePlacement* fixed_v, int n_v) {
  const int np = net.n_p(), nn = net.n_n();
  HydroStepLp out;
  LpProblem& lp = out.lp;
  HydroStepCols& cols = out.cols;

  cols.q.resize(np);
  cols.eta.resize(np);
  cols.theta.resize(np);
  cols.s.resize(np);
  cols.qp.resize(np);
  cols.qm.resize(np);
  cols.thp.resize(np);
  cols.thm.resize(np);
  cols.z.resize(np);
  cols.h.resize(nn);

  for (int l = 0; l < np; ++l) {
    const Link& ln = net.links[l];
    cols.q[l] = lp.add_var(bounds.q_lo(l, k), bounds.q_hi(l, k));
    cols.eta[l] = lp.add_var(ln.eta_min[k], ln.eta_max[k]);
    cols.theta[l] = lp.add_var(bounds.theta_lo(l, k), bounds.theta_hi(l, k));
    cols.s[l] = lp.add_var(bounds.s_lo(l, k), bounds.s_hi(l, k));
    cols.qp[l] = lp.add_var(bounds.qp_lo(l, k), bounds.qp_hi(l, k));
    cols.qm[l] = lp.add_var(bounds.qm_lo(l, k), bounds.qm_hi(l, k));
    cols.thp[l] = lp.add_var(bounds.thp_lo(l, k), bounds.thp_hi(l, k));
    cols.thm[l] = lp.add_var(bounds.thm_lo(l, k), bounds.thm_hi(l, k));
    cols.z[l] = lp.add_var(0.0, 1.0);
  }
  for (int i = 0; i < nn; ++i) {
    cols.h[i] = lp.add_var(net.nodes[i].h_min[k], net.nodes[i].h_max[k]);
  }

  std::vector<double> vfix;
  if (fixed_v != nullptr) {
    vfix.resize(2 * np);
    for (int slot = 0; slot < 2 * np; ++slot) vfix[slot] = fixed_v->v[slot] ? 1.0 : 0.0;
    cols.v_fixed = vfix.data();
  } else {
    cols.v.resize(2 * np);
    for (int slot = 0; slot < 2 * np; ++slot) cols.v[slot] = lp.add_var(0.0, 1.0);
  }

  HydroStepBigM big_m;
  big_m.q_min.resize(np);
  big_m.q_max.resize(np);
  big_m.eta_min.resize(np);
  big_m.eta_max.resize(np);
  big_m.qp_max.resize(np);
  big_m.qm_max.resize(np);
  big_m.thp_max.resize(np);
  big_m.thm_max.resize(np);
  for (int l = 0; l < np; ++l) {
    big_m.q_min[l] = bounds.q_lo(l, k);
    big_m.q_max[l] = bounds.q_hi(l, k);
    big_m.eta_min[l] = net.links[l].eta_min[k];
    big_m.eta_max[l] = net.links[l].eta_max[k];
    big_m.qp_max[l] = bounds.qp_hi(l, k);
    big_m.qm_max[l] = bounds.qm_hi(l, k);
    big_m.thp_max[l] = bounds.thp_hi(l, k);
    big_m.thm_max[l] = bounds.thm_hi(l, k);
  }
  append_hydraulic_rows(lp, net, k, cols, big_m);

  for (int l = 0; l < np; ++l) {
    auto add_quad = [&](int th_col, int q_col, double lo, double hi) {
      for (const QuadraticCut& c : relax_quadratic_scalar(coeffs.a[l], coeffs.b[l], lo, hi, m)) {
        lp.add_row(c.sense, c.rhs, {{th_col, c.theta_coef}, {q_col, c.q_coef}});
      }
    };
    add_quad(cols.thp[l], cols.qp[l], bounds.qp_lo(l, k), bounds.qp_hi(l, k));
    add_quad(cols.thm[l], cols.qm[l], bounds.qm_lo(l, k), bounds.qm_hi(l, k));
  }

  if (fixed_v == nullptr) append_valve_budget_rows(lp, cols.v, np, n_v);
  cols.v_fixed = nullptr;
  return out;
}

}  // namespace wdn
