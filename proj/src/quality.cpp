#include "wdn/quality.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

namespace wdn {

PdeCoefficients pde_coefficients(const Link& link, double dt) {
  PdeCoefficients c;
  c.dx = link.length / link.segments;
  c.gamma = 4.0 * dt / (1e3 * std::numbers::pi * link.diameter * link.diameter * c.dx);
  return c;
}

namespace {

double endpoint_c0(const NetworkGraph& net, const EndpointRef& e) {
  return e.is_source ? net.sources[e.index].c0 : net.nodes[e.index].c0;
}

constexpr double kFlowEps = 1e-12;  // below this a link carries no mass

}  // namespace

QualityState simulate_quality(const NetworkGraph& net, const HydraulicState& hyd,
                              const Array2& source_c, const BoosterSchedule* boosters,
                              const std::vector<std::vector<double>>* r_init) {
  const int np = net.n_p(), nn = net.n_n(), nt = net.n_t;
  if (static_cast<int>(source_c.rows()) != net.n_0() ||
      static_cast<int>(source_c.cols()) < nt) {
    throw InputError("simulate_quality: source_c must be (n_0 x n_t)");
  }

  QualityState qs;
  qs.c = Array2(nn + net.n_0(), nt);
  qs.xi = Array2(nn, nt);
  if (boosters != nullptr) qs.xi = boosters->xi;
  qs.r.resize(np);

  std::vector<int> grid_off(np + 1, 0);
  for (int l = 0; l < np; ++l) grid_off[l + 1] = grid_off[l] + net.links[l].segments + 1;
  const int n_unknown = nn + grid_off[np];

  for (int l = 0; l < np; ++l) {
    qs.r[l] = Array2(net.links[l].segments + 1, nt + 1);
    for (int j = 0; j <= net.links[l].segments; ++j) {
      double init = r_init != nullptr ? (*r_init)[l][j] : endpoint_c0(net, net.links[l].to);
      qs.r[l](j, 0) = init;
    }
  }

  std::vector<double> gamma(np);
  for (int l = 0; l < np; ++l) gamma[l] = pde_coefficients(net.links[l], net.dt).gamma;

  auto c_index = [&](int i) { return i; };
  auto r_index = [&](int l, int j) { return nn + grid_off[l] + j; };

  Eigen::VectorXd rhs(n_unknown), sol(n_unknown);
  for (int k = 0; k < nt; ++k) {
    std::vector<Eigen::Triplet<double>> trips;
    rhs.setZero();

    // Per-node throughput: demand plus flow leaving through any incident end.
    std::vector<double> throughput(nn, 0.0);
    for (int i = 0; i < nn; ++i) throughput[i] = net.nodes[i].demand[k];
    for (int l = 0; l < np; ++l) {
      const Link& ln = net.links[l];
      double s = hyd.s(l, k);
      if (s <= kFlowEps) continue;
      bool forward = hyd.z(l, k) > 0.5;
      const EndpointRef& upstream = forward ? ln.from : ln.to;
      if (!upstream.is_source) throughput[upstream.index] += s;
    }

    for (int i = 0; i < nn; ++i) {
      double xi = boosters != nullptr ? boosters->xi(i, k) : 0.0;
      if (throughput[i] <= kFlowEps) {
        if (xi > kFlowEps) {
          throw SolveError("simulate_quality: node " + net.nodes[i].id +
                           " has zero throughput at step " + std::to_string(k + 1) +
                           " and cannot absorb a booster injection");
        }
        // Stagnant node: no carrier water, concentration pinned to zero.
        trips.emplace_back(c_index(i), c_index(i), 1.0);
        rhs[c_index(i)] = 0.0;
        continue;
      }
      trips.emplace_back(c_index(i), c_index(i), throughput[i]);
      rhs[c_index(i)] = xi;
      // Mass delivered by links flowing into the node (downstream grid end).
      for (int l : net.links_in(i)) {
        if (hyd.s(l, k) > kFlowEps && hyd.z(l, k) > 0.5) {
          trips.emplace_back(c_index(i), r_index(l, net.links[l].segments), -hyd.s(l, k));
        }
      }
      for (int l : net.links_out(i)) {
        if (hyd.s(l, k) > kFlowEps && hyd.z(l, k) <= 0.5) {
          trips.emplace_back(c_index(i), r_index(l, net.links[l].segments), -hyd.s(l, k));
        }
      }
    }

    for (int l = 0; l < np; ++l) {
      const Link& ln = net.links[l];
      double s = hyd.s(l, k);
      bool forward = hyd.z(l, k) > 0.5;
      // Inlet grid point: upstream nodal concentration.
      const EndpointRef& upstream = forward ? ln.from : ln.to;
      int row0 = r_index(l, 0);
      trips.emplace_back(row0, row0, 1.0);
      if (upstream.is_source) {
        rhs[row0] = source_c(upstream.index, k);
      } else {
        trips.emplace_back(row0, c_index(upstream.index), -1.0);
      }
      double decay = 1.0 + ln.decay * net.dt;
      for (int j = 1; j <= ln.segments; ++j) {
        int row = r_index(l, j);
        trips.emplace_back(row, row, decay + gamma[l] * s);
        if (s > kFlowEps) trips.emplace_back(row, r_index(l, j - 1), -gamma[l] * s);
        rhs[row] = qs.r[l](j, k);
      }
    }

    Eigen::SparseMatrix<double> A(n_unknown, n_unknown);
    A.setFromTriplets(trips.begin(), trips.end());
    A.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success) {
      throw SolveError("simulate_quality: singular mixing system at step " +
                       std::to_string(k + 1));
    }
    sol = lu.solve(rhs);

    for (int i = 0; i < nn; ++i) qs.c(i, k) = sol[c_index(i)];
    for (int src = 0; src < net.n_0(); ++src) qs.c(nn + src, k) = source_c(src, k);
    for (int l = 0; l < np; ++l) {
      for (int j = 0; j <= net.links[l].segments; ++j) qs.r[l](j, k + 1) = sol[r_index(l, j)];
    }
  }
  return qs;
}

std::vector<double> warmup_initial_concentrations(const NetworkGraph& net,
                                                  const HydraulicState& hyd) {
  constexpr int kWarmupSteps = 24;
  if (static_cast<int>(hyd.s.cols()) < kWarmupSteps) {
    throw InputError("warmup requires a hydraulic schedule covering 24 steps");
  }
  NetworkGraph work = net;
  work.n_t = kWarmupSteps;
  auto resize_to = [&](std::vector<double>& v) { v.resize(kWarmupSteps, v.empty() ? 0.0 : v.back()); };
  for (Node& n : work.nodes) {
    resize_to(n.demand);
    resize_to(n.h_min);
    resize_to(n.h_max);
  }
  for (SourceNode& s : work.sources) resize_to(s.h0);
  for (Link& l : work.links) {
    resize_to(l.q_min);
    resize_to(l.q_max);
    resize_to(l.eta_min);
    resize_to(l.eta_max);
  }

  Array2 source_c(work.n_0(), kWarmupSteps, 0.5);
  std::vector<std::vector<double>> r0(work.n_p());
  for (int l = 0; l < work.n_p(); ++l) r0[l].assign(work.links[l].segments + 1, 0.0);

  QualityState qs = simulate_quality(work, hyd, source_c, nullptr, &r0);
  std::vector<double> c0(work.n_n() + work.n_0(), 0.0);
  for (int i = 0; i < work.n_n(); ++i) c0[i] = qs.c(i, kWarmupSteps - 1);
  for (int src = 0; src < work.n_0(); ++src) c0[work.n_n() + src] = 0.5;
  return c0;
}

double compute_atd(const NetworkGraph& net, const QualityState& quality,
                   const std::vector<double>& c_target) {
  Array2 w = atd_weights(net);
  double atd = 0.0;
  for (int i = 0; i < net.n_n(); ++i) {
    for (int k = 0; k < net.n_t; ++k) {
      atd += w(i, k) * std::abs(quality.c(i, k) - c_target[i]);
    }
  }
  return atd;
}

QualityVarSpace::QualityVarSpace(const NetworkGraph& net) {
  nt_ = net.n_t;
  nn_ = net.n_n();
  const int np = net.n_p();
  grid_off_.assign(np + 1, 0);
  for (int l = 0; l < np; ++l) grid_off_[l + 1] = grid_off_[l] + net.links[l].segments + 1;
  int at = 0;
  c0_ = at; at += (nn_ + net.n_0()) * nt_;
  r0_ = at; at += grid_off_[np] * nt_;
  w0_ = at; at += grid_off_[np] * nt_;
  rho0_ = at; at += np * nt_;
  xi0_ = at; at += nn_ * nt_;
  mu0_ = at; at += nn_ * nt_;
  vb0_ = at; at += nn_;
  total_ = at;
}

QualityMilpBuild assemble_quality_milp(const NetworkGraph& net, const Array2& s_star,
                                       const Array2& z_star, int n_b, const BoundsBox& bounds) {
  const int np = net.n_p(), nn = net.n_n(), n0 = net.n_0(), nt = net.n_t;
  for (int l = 0; l < np; ++l) {
    for (int k = 0; k < nt; ++k) {
      double z = z_star(l, k);
      if (z != 0.0 && z != 1.0) {
        throw InputError("assemble_quality_milp: z_star must be exactly binary");
      }
    }
  }

  QualityMilpBuild out{MilpProblem{}, QualityVarSpace(net)};
  LpProblem& lp = out.problem.lp;
  const QualityVarSpace& Y = out.space;
  Array2 w_atd = atd_weights(net);

  lp.lower.assign(Y.total(), 0.0);
  lp.upper.assign(Y.total(), 0.0);
  lp.objective.assign(Y.total(), 0.0);
  auto set_col = [&lp](int col, double lo, double hi, double obj = 0.0) {
    lp.lower[col] = lo;
    lp.upper[col] = hi;
    lp.objective[col] = obj;
  };

  for (int i = 0; i < nn; ++i) {
    for (int k = 0; k < nt; ++k) {
      set_col(Y.c(i, k), 0.0, net.nodes[i].c_max);
      set_col(Y.xi(i, k), 0.0, bounds.xi_hi(net, i, k));
      set_col(Y.mu(i, k), 0.0, kInf, w_atd(i, k));
    }
  }
  for (int src = 0; src < n0; ++src) {
    for (int k = 0; k < nt; ++k) set_col(Y.c_source(src, k), 0.0, net.sources[src].c_max);
  }
  for (int l = 0; l < np; ++l) {
    for (int k = 0; k < nt; ++k) {
      set_col(Y.rho(l, k), 0.0, bounds.rho_hi(net, l, k));
      for (int j = 0; j <= net.links[l].segments; ++j) {
        set_col(Y.r(l, j, k), 0.0, bounds.r_hi[l]);
        set_col(Y.w(l, j, k), 0.0, bounds.w_hi(net, l, k));
      }
    }
  }
  for (int i = 0; i < nn; ++i) {
    set_col(Y.vb(i), 0.0, 1.0);
    out.problem.binary_vars.push_back(Y.vb(i));
  }

  for (int k = 0; k < nt; ++k) {
    for (int i = 0; i < nn; ++i) {
      const Node& nd = net.nodes[i];
      lp.add_row(RowSense::le, nd.c_target, {{Y.c(i, k), 1.0}, {Y.mu(i, k), -1.0}});
      lp.add_row(RowSense::le, -nd.c_target, {{Y.c(i, k), -1.0}, {Y.mu(i, k), -1.0}});
    }

    for (int l = 0; l < np; ++l) {
      const Link& ln = net.links[l];
      const double alpha_dt = ln.decay * net.dt;
      const double gamma = pde_coefficients(ln, net.dt).gamma;
      for (int j = 1; j <= ln.segments; ++j) {
        std::vector<std::pair<int, double>> coefs{{Y.r(l, j, k), 1.0 + alpha_dt},
                                                  {Y.w(l, j, k), gamma},
                                                  {Y.w(l, j - 1, k), -gamma}};
        double rhs = 0.0;
        if (k == 0) {
          rhs = endpoint_c0(net, ln.to);
        } else {
          coefs.emplace_back(Y.r(l, j, k - 1), -1.0);
        }
        lp.add_row(RowSense::eq, rhs, std::move(coefs));
      }

      // Inlet selection, direction fixed by z_star.
      double z = z_star(l, k);
      int cu1 = ln.from.is_source ? Y.c_source(ln.from.index, k) : Y.c(ln.from.index, k);
      int cu2 = ln.to.is_source ? Y.c_source(ln.to.index, k) : Y.c(ln.to.index, k);
      double cmax1 = ln.from.is_source ? net.sources[ln.from.index].c_max : net.nodes[ln.from.index].c_max;
      double cmax2 = ln.to.is_source ? net.sources[ln.to.index].c_max : net.nodes[ln.to.index].c_max;
      lp.add_row(RowSense::le, cmax2 - cmax2 * z, {{Y.r(l, 0, k), 1.0}, {cu1, -1.0}});
      lp.add_row(RowSense::le, cmax1 - cmax1 * z, {{Y.r(l, 0, k), -1.0}, {cu1, 1.0}});
      lp.add_row(RowSense::le, cmax1 * z, {{Y.r(l, 0, k), 1.0}, {cu2, -1.0}});
      lp.add_row(RowSense::le, cmax2 * z, {{Y.r(l, 0, k), -1.0}, {cu2, 1.0}});

      // rho = z (w0 + wJ) with z fixed.
      double rho_max = bounds.rho_hi(net, l, k);
      int wj = Y.w(l, ln.segments, k);
      lp.add_row(RowSense::le, rho_max * z, {{Y.rho(l, k), 1.0}});
      lp.add_row(RowSense::le, rho_max - rho_max * z,
                 {{Y.w(l, 0, k), 1.0}, {wj, 1.0}, {Y.rho(l, k), -1.0}});
      lp.add_row(RowSense::le, 0.0, {{Y.w(l, 0, k), -1.0}, {wj, -1.0}, {Y.rho(l, k), 1.0}});

      // Bilinear rows become linear: w = s_star r.
      for (int j = 0; j <= ln.segments; ++j) {
        lp.add_row(RowSense::eq, 0.0, {{Y.w(l, j, k), 1.0}, {Y.r(l, j, k), -s_star(l, k)}});
      }
    }

    for (int i = 0; i < nn; ++i) {
      std::vector<std::pair<int, double>> coefs{{Y.c(i, k), net.nodes[i].demand[k]},
                                                {Y.xi(i, k), -1.0}};
      for (int l : net.links_in(i)) {
        coefs.emplace_back(Y.w(l, 0, k), 1.0);
        coefs.emplace_back(Y.rho(l, k), -1.0);
      }
      for (int l : net.links_out(i)) {
        coefs.emplace_back(Y.rho(l, k), 1.0);
        coefs.emplace_back(Y.w(l, net.links[l].segments, k), -1.0);
      }
      lp.add_row(RowSense::eq, 0.0, std::move(coefs));
      lp.add_row(RowSense::le, 0.0, {{Y.xi(i, k), 1.0}, {Y.vb(i), -bounds.xi_hi(net, i, k)}});
    }
  }

  std::vector<std::pair<int, double>> booster;
  booster.reserve(nn);
  for (int i = 0; i < nn; ++i) booster.emplace_back(Y.vb(i), 1.0);
  lp.add_row(RowSense::eq, static_cast<double>(n_b), std::move(booster));

  return out;
}

void write_trajectory_csv(const NetworkGraph& net, const QualityState& qs, std::ostream& os) {
  os << "time,entity_kind,entity_id,segment,value\n";
  os.precision(12);

  std::vector<int> node_order(net.n_n()), source_order(net.n_0()), link_order(net.n_p());
  for (int i = 0; i < net.n_n(); ++i) node_order[i] = i;
  for (int i = 0; i < net.n_0(); ++i) source_order[i] = i;
  for (int i = 0; i < net.n_p(); ++i) link_order[i] = i;
  std::sort(node_order.begin(), node_order.end(),
            [&](int a, int b) { return net.nodes[a].id < net.nodes[b].id; });
  std::sort(source_order.begin(), source_order.end(),
            [&](int a, int b) { return net.sources[a].id < net.sources[b].id; });
  std::sort(link_order.begin(), link_order.end(),
            [&](int a, int b) { return net.links[a].id < net.links[b].id; });

  for (int i : node_order) {
    for (int k = 0; k < net.n_t; ++k) {
      os << (k + 1) << ",node," << net.nodes[i].id << ",," << qs.c(i, k) << "\n";
    }
  }
  for (int l : link_order) {
    for (int j = 0; j <= net.links[l].segments; ++j) {
      for (int k = 0; k <= net.n_t; ++k) {
        os << k << ",pipe," << net.links[l].id << ',' << j << ',' << qs.r[l](j, k) << "\n";
      }
    }
  }
  for (int src : source_order) {
    for (int k = 0; k < net.n_t; ++k) {
      os << (k + 1) << ",source," << net.sources[src].id << ",," << qs.c(net.n_n() + src, k)
         << "\n";
    }
  }
}

}  // namespace wdn
