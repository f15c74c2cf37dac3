#include "wdn/hydraulics.hpp"

#include <algorithm>
#include <cmath>

#include "wdn/relaxation.hpp"
#include "wdn/slp.hpp"

namespace wdn {

double hazen_williams_headloss(const Link& link, double q) {
  double mag = std::abs(q) / 1000.0;  // L/s -> m^3/s
  double theta = 10.67 * link.length * std::pow(mag, 1.852) /
                 (std::pow(link.roughness, 1.852) * std::pow(link.diameter, 4.871));
  return q >= 0.0 ? theta : -theta;
}

std::pair<double, double> fit_headloss_coefficients(const Link& link, double q_ref) {
  if (q_ref <= 0.0) throw InputError("fit_headloss_coefficients: q_ref must be > 0");
  constexpr int kSamples = 100;
  double s22 = 0, s21 = 0, s11 = 0, s2y = 0, s1y = 0;
  for (int i = 0; i < kSamples; ++i) {
    double q = q_ref * i / (kSamples - 1);
    double y = hazen_williams_headloss(link, q);
    double q2 = q * q;
    s22 += q2 * q2;
    s21 += q2 * q;
    s11 += q2;
    s2y += q2 * y;
    s1y += q * y;
  }
  double det = s22 * s11 - s21 * s21;
  double a, b;
  if (std::abs(det) > 1e-300) {
    a = (s2y * s11 - s1y * s21) / det;
    b = (s22 * s1y - s21 * s2y) / det;
  } else {
    a = s22 > 0 ? s2y / s22 : 0.0;
    b = 0.0;
  }
  if (b < 0.0) {  // refit the pure quadratic
    b = 0.0;
    a = s22 > 0 ? s2y / s22 : 0.0;
  }
  a = std::max(a, 1e-12);
  return {a, b};
}

HeadlossCoefficients fit_all_headloss(const NetworkGraph& net) {
  HeadlossCoefficients c;
  c.a.resize(net.n_p());
  c.b.resize(net.n_p());
  c.q_ref.resize(net.n_p());
  for (int l = 0; l < net.n_p(); ++l) {
    double q_ref = 0.0;
    for (int k = 0; k < net.n_t; ++k) {
      q_ref = std::max({q_ref, std::abs(net.links[l].q_min[k]), std::abs(net.links[l].q_max[k])});
    }
    q_ref = std::max(q_ref, 1e-3);
    auto [a, b] = fit_headloss_coefficients(net.links[l], q_ref);
    c.a[l] = a;
    c.b[l] = b;
    c.q_ref[l] = q_ref;
  }
  return c;
}

double eval_headloss(double a, double b, double q) { return a * std::abs(q) * q + b * q; }

AuxValues recover_aux(double q, double theta) {
  AuxValues u;
  u.qp = std::max(q, 0.0);
  u.qm = -std::min(q, 0.0);
  u.s = u.qp + u.qm;
  u.thp = std::max(theta, 0.0);
  u.thm = -std::min(theta, 0.0);
  u.z = q > 0.0 ? 1 : 0;
  return u;
}

int ValvePlacement::count() const {
  int n = 0;
  for (auto b : v) n += b != 0;
  return n;
}

bool ValvePlacement::valid(int n_p, int n_v) const {
  if (static_cast<int>(v.size()) != 2 * n_p) return false;
  if (count() != n_v) return false;
  for (int l = 0; l < n_p; ++l) {
    if (v[l] != 0 && v[n_p + l] != 0) return false;
  }
  return true;
}

void append_hydraulic_rows(LpProblem& lp, const NetworkGraph& net, int k,
                           const HydroStepCols& cols, const HydroStepBigM& big_m) {
  const int np = net.n_p();
  auto vcol = [&](int slot) { return cols.v.empty() ? -1 : cols.v[slot]; };
  auto vval = [&](int slot) { return cols.v_fixed != nullptr ? cols.v_fixed[slot] : 0.0; };

  for (int l = 0; l < np; ++l) {
    const Link& ln = net.links[l];
    // Energy balance: head(from) - head(to) - theta - eta = 0, with fixed
    // source heads moved to the right-hand side.
    std::vector<std::pair<int, double>> coefs;
    double rhs = 0.0;
    if (ln.from.is_source) {
      rhs -= net.sources[ln.from.index].h0[k];
    } else {
      coefs.emplace_back(cols.h[ln.from.index], 1.0);
    }
    if (ln.to.is_source) {
      rhs += net.sources[ln.to.index].h0[k];
    } else {
      coefs.emplace_back(cols.h[ln.to.index], -1.0);
    }
    coefs.emplace_back(cols.theta[l], -1.0);
    coefs.emplace_back(cols.eta[l], -1.0);
    lp.add_row(RowSense::eq, rhs, std::move(coefs));
  }

  for (int i = 0; i < net.n_n(); ++i) {
    std::vector<std::pair<int, double>> coefs;
    for (int l : net.links_in(i)) coefs.emplace_back(cols.q[l], 1.0);
    for (int l : net.links_out(i)) coefs.emplace_back(cols.q[l], -1.0);
    lp.add_row(RowSense::eq, net.nodes[i].demand[k], std::move(coefs));
  }

  for (int l = 0; l < np; ++l) {
    // Valve activation: eta <= eta_max v+, eta >= eta_min v-, and the
    // direction restrictions q >= q_min (1 - v+), q <= q_max (1 - v-).
    double em = big_m.eta_max[l], en = big_m.eta_min[l];
    double qn = big_m.q_min[l], qm = big_m.q_max[l];
    if (vcol(l) >= 0) {
      lp.add_row(RowSense::le, 0.0, {{cols.eta[l], 1.0}, {vcol(l), -em}});
      lp.add_row(RowSense::le, -qn, {{cols.q[l], -1.0}, {vcol(l), -qn}});
    } else {
      lp.add_row(RowSense::le, em * vval(l), {{cols.eta[l], 1.0}});
      lp.add_row(RowSense::le, -qn + qn * vval(l), {{cols.q[l], -1.0}});
    }
    if (vcol(np + l) >= 0) {
      lp.add_row(RowSense::le, 0.0, {{cols.eta[l], -1.0}, {vcol(np + l), en}});
      lp.add_row(RowSense::le, qm, {{cols.q[l], 1.0}, {vcol(np + l), qm}});
    } else {
      lp.add_row(RowSense::le, -en * vval(np + l), {{cols.eta[l], -1.0}});
      lp.add_row(RowSense::le, qm - qm * vval(np + l), {{cols.q[l], 1.0}});
    }

    // Flow and head-loss splitting.
    lp.add_row(RowSense::eq, 0.0, {{cols.q[l], 1.0}, {cols.qp[l], -1.0}, {cols.qm[l], 1.0}});
    lp.add_row(RowSense::eq, 0.0, {{cols.s[l], 1.0}, {cols.qp[l], -1.0}, {cols.qm[l], -1.0}});
    lp.add_row(RowSense::eq, 0.0,
               {{cols.theta[l], 1.0}, {cols.thp[l], -1.0}, {cols.thm[l], 1.0}});

    // Direction gating by z.
    lp.add_row(RowSense::le, 0.0, {{cols.qp[l], 1.0}, {cols.z[l], -big_m.qp_max[l]}});
    lp.add_row(RowSense::le, big_m.qm_max[l], {{cols.qm[l], 1.0}, {cols.z[l], big_m.qm_max[l]}});
    lp.add_row(RowSense::le, 0.0, {{cols.thp[l], 1.0}, {cols.z[l], -big_m.thp_max[l]}});
    lp.add_row(RowSense::le, big_m.thm_max[l],
               {{cols.thm[l], 1.0}, {cols.z[l], big_m.thm_max[l]}});
  }
}

void append_valve_budget_rows(LpProblem& lp, const std::vector<int>& v_cols, int n_p, int n_v) {
  for (int l = 0; l < n_p; ++l) {
    lp.add_row(RowSense::le, 1.0, {{v_cols[l], 1.0}, {v_cols[n_p + l], 1.0}});
  }
  std::vector<std::pair<int, double>> all;
  all.reserve(2 * n_p);
  for (int slot = 0; slot < 2 * n_p; ++slot) all.emplace_back(v_cols[slot], 1.0);
  lp.add_row(RowSense::eq, static_cast<double>(n_v), std::move(all));
}

namespace {

// Smoothed |q| q: q sqrt(q^2 + eps^2).
double smoothed_abs_q(double q, double eps) { return q * std::sqrt(q * q + eps * eps); }
double smoothed_abs_q_deriv(double q, double eps) {
  double root = std::sqrt(q * q + eps * eps);
  return root + q * q / root;
}

}  // namespace

NlpResult solve_fixed_valve_nlp(const NetworkGraph& net, const HeadlossCoefficients& coeffs,
                                const ValvePlacement& placement, const NlpOptions& opts) {
  const int np = net.n_p(), nn = net.n_n(), nt = net.n_t;
  NlpResult out;
  if (static_cast<int>(placement.v.size()) != 2 * np) {
    throw InputError("solve_fixed_valve_nlp: placement size mismatch");
  }

  std::vector<double> weights = azp_weights(net);
  out.state.q = Array2(np, nt);
  out.state.eta = Array2(np, nt);
  out.state.theta = Array2(np, nt);
  out.state.h = Array2(nn, nt);
  out.state.s = Array2(np, nt);
  out.state.qp = Array2(np, nt);
  out.state.qm = Array2(np, nt);
  out.state.thp = Array2(np, nt);
  out.state.thm = Array2(np, nt);
  out.state.z = Array2(np, nt);

  BoundsBox box = BoundsBox::from_network(net, coeffs);

  double f_azp = 0.0;
  for (int k = 0; k < nt; ++k) {
    // Initialization: per-step polyhedral relaxation with the placement fixed.
    HydroStepLp init = build_hydraulic_step_lp(net, coeffs, box, opts.relaxation_points, k,
                                               &placement, 0);
    double offset_k = 0.0;
    for (int i = 0; i < nn; ++i) {
      init.lp.objective[init.cols.h[i]] = weights[i];
      offset_k -= weights[i] * net.nodes[i].elevation;
    }
    init.lp.objective_offset = offset_k;
    LpSolution start_sol = lp_solve(init.lp, opts.lp);
    if (start_sol.status != LpStatus::optimal) {
      out.feasible = false;
      out.message = "step " + std::to_string(k + 1) + ": initialization LP " +
                    to_string(start_sol.status);
      return out;
    }

    // SLP model over (q per link, h per node, eta per link).
    SlpModel model;
    std::vector<int> qv(np), hv(nn), ev(np);
    for (int l = 0; l < np; ++l) {
      const Link& ln = net.links[l];
      double lo = ln.q_min[k], hi = ln.q_max[k];
      if (placement.v[l]) lo = std::max(lo, 0.0);        // positive-direction valve
      if (placement.v[np + l]) hi = std::min(hi, 0.0);   // negative-direction valve
      model.lower.push_back(lo);
      model.upper.push_back(hi);
      model.objective.push_back(0.0);
      qv[l] = l;
    }
    for (int i = 0; i < nn; ++i) {
      hv[i] = static_cast<int>(model.lower.size());
      model.lower.push_back(net.nodes[i].h_min[k]);
      model.upper.push_back(net.nodes[i].h_max[k]);
      model.objective.push_back(weights[i]);
    }
    for (int l = 0; l < np; ++l) {
      const Link& ln = net.links[l];
      ev[l] = static_cast<int>(model.lower.size());
      model.lower.push_back(placement.v[np + l] ? ln.eta_min[k] : 0.0);
      model.upper.push_back(placement.v[l] ? ln.eta_max[k] : 0.0);
      model.objective.push_back(0.0);
    }
    model.objective_offset = offset_k;

    for (int i = 0; i < nn; ++i) {
      std::vector<std::pair<int, double>> coefs;
      for (int l : net.links_in(i)) coefs.emplace_back(qv[l], 1.0);
      for (int l : net.links_out(i)) coefs.emplace_back(qv[l], -1.0);
      model.linear_rows.push_back(LpRow{RowSense::eq, net.nodes[i].demand[k], std::move(coefs)});
    }

    model.num_residuals = np;
    double eps_scale = 1.0;  // rebound via capture below
    std::vector<double> eps(np);
    auto head_const = [&](const EndpointRef& e) {
      return e.is_source ? net.sources[e.index].h0[k] : 0.0;
    };
    model.residual = [&, k](const std::vector<double>& x, std::vector<double>& g) {
      g.resize(np);
      for (int l = 0; l < np; ++l) {
        const Link& ln = net.links[l];
        double head1 = ln.from.is_source ? head_const(ln.from) : x[hv[ln.from.index]];
        double head2 = ln.to.is_source ? head_const(ln.to) : x[hv[ln.to.index]];
        double theta = coeffs.a[l] * smoothed_abs_q(x[qv[l]], eps[l]) + coeffs.b[l] * x[qv[l]];
        g[l] = head1 - head2 - x[ev[l]] - theta;
      }
    };
    model.jacobian = [&](const std::vector<double>& x,
                         std::vector<std::vector<std::pair<int, double>>>& jac) {
      jac.assign(np, {});
      for (int l = 0; l < np; ++l) {
        const Link& ln = net.links[l];
        auto& row = jac[l];
        if (!ln.from.is_source) row.emplace_back(hv[ln.from.index], 1.0);
        if (!ln.to.is_source) row.emplace_back(hv[ln.to.index], -1.0);
        row.emplace_back(ev[l], -1.0);
        row.emplace_back(qv[l],
                         -(coeffs.a[l] * smoothed_abs_q_deriv(x[qv[l]], eps[l]) + coeffs.b[l]));
      }
    };
    model.trust_vars = qv;
    model.trust_radius.assign(np, 0.0);
    for (int l = 0; l < np; ++l) model.trust_radius[l] = 0.1 * coeffs.q_ref[l];

    std::vector<double> x0(model.lower.size(), 0.0);
    for (int l = 0; l < np; ++l) x0[qv[l]] = start_sol.primal[init.cols.q[l]];
    for (int i = 0; i < nn; ++i) x0[hv[i]] = start_sol.primal[init.cols.h[i]];
    for (int l = 0; l < np; ++l) x0[ev[l]] = start_sol.primal[init.cols.eta[l]];

    // Smoothing annealed x0.1 per outer loop down to 1e-8.
    SlpResult slp;
    bool first = true;
    for (int l = 0; l < np; ++l) eps[l] = 1e-4 * coeffs.q_ref[l];
    while (true) {
      SlpOptions sopts;
      sopts.residual_tol = opts.residual_tol;
      sopts.lp = opts.lp;
      slp = slp_solve(model, x0, sopts);
      if (slp.status == SlpStatus::infeasible && first) {
        out.feasible = false;
        out.message = "step " + std::to_string(k + 1) + ": " + slp.message;
        return out;
      }
      first = false;
      x0 = slp.x;
      double worst = 0.0;
      for (int l = 0; l < np; ++l) worst = std::max(worst, eps[l]);
      if (worst <= 1e-8) break;
      for (int l = 0; l < np; ++l) eps[l] = std::max(1e-8, 0.1 * eps[l]);
    }
    (void)eps_scale;

    if (slp.status == SlpStatus::infeasible) {
      out.feasible = false;
      out.message = "step " + std::to_string(k + 1) + ": " + slp.message;
      return out;
    }

    for (int l = 0; l < np; ++l) {
      double q = slp.x[qv[l]];
      double theta = eval_headloss(coeffs.a[l], coeffs.b[l], q);
      AuxValues u = recover_aux(q, theta);
      out.state.q(l, k) = q;
      out.state.eta(l, k) = slp.x[ev[l]];
      out.state.theta(l, k) = theta;
      out.state.s(l, k) = u.s;
      out.state.qp(l, k) = u.qp;
      out.state.qm(l, k) = u.qm;
      out.state.thp(l, k) = u.thp;
      out.state.thm(l, k) = u.thm;
      out.state.z(l, k) = u.z;
    }
    for (int i = 0; i < nn; ++i) {
      out.state.h(i, k) = slp.x[hv[i]];
      f_azp += weights[i] * (out.state.h(i, k) - net.nodes[i].elevation);
    }
  }

  out.feasible = true;
  out.f_azp = f_azp;
  out.state.f_azp = f_azp;
  return out;
}

}  // namespace wdn
