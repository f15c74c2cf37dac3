#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <string>

#include "fixture_gen.hpp"
#include "wdn/obbt.hpp"
#include "wdn/quality.hpp"

using namespace wdn;

namespace {

const std::string kFixtures = WDN_FIXTURE_DIR;

// Independent construction of the per-step tightening LP, written directly
// from the constraint formulas rather than through the shared row builders.
double oracle_bound(const NetworkGraph& net, const HeadlossCoefficients& coeffs,
                    const BoundsBox& box, int m, int n_v, int k, int link, double sigma) {
  const int np = net.n_p(), nn = net.n_n();
  LpProblem lp;
  std::vector<int> q(np), eta(np), th(np), s(np), qp(np), qm(np), tp(np), tm(np), z(np), h(nn),
      v(2 * np);
  for (int l = 0; l < np; ++l) {
    q[l] = lp.add_var(box.q_lo(l, k), box.q_hi(l, k), l == link ? sigma : 0.0);
    eta[l] = lp.add_var(net.links[l].eta_min[k], net.links[l].eta_max[k]);
    th[l] = lp.add_var(box.theta_lo(l, k), box.theta_hi(l, k));
    s[l] = lp.add_var(box.s_lo(l, k), box.s_hi(l, k));
    qp[l] = lp.add_var(box.qp_lo(l, k), box.qp_hi(l, k));
    qm[l] = lp.add_var(box.qm_lo(l, k), box.qm_hi(l, k));
    tp[l] = lp.add_var(box.thp_lo(l, k), box.thp_hi(l, k));
    tm[l] = lp.add_var(box.thm_lo(l, k), box.thm_hi(l, k));
    z[l] = lp.add_var(0.0, 1.0);
  }
  for (int i = 0; i < nn; ++i) h[i] = lp.add_var(net.nodes[i].h_min[k], net.nodes[i].h_max[k]);
  for (int t = 0; t < 2 * np; ++t) v[t] = lp.add_var(0.0, 1.0);

  for (int l = 0; l < np; ++l) {
    const Link& ln = net.links[l];
    std::vector<std::pair<int, double>> row{{th[l], -1.0}, {eta[l], -1.0}};
    double rhs = 0.0;
    if (ln.from.is_source) {
      rhs -= net.sources[ln.from.index].h0[k];
    } else {
      row.emplace_back(h[ln.from.index], 1.0);
    }
    if (ln.to.is_source) {
      rhs += net.sources[ln.to.index].h0[k];
    } else {
      row.emplace_back(h[ln.to.index], -1.0);
    }
    lp.add_row(RowSense::eq, rhs, row);

    lp.add_row(RowSense::le, 0.0, {{eta[l], 1.0}, {v[l], -ln.eta_max[k]}});
    lp.add_row(RowSense::le, 0.0, {{eta[l], -1.0}, {v[np + l], ln.eta_min[k]}});
    lp.add_row(RowSense::le, -box.q_lo(l, k), {{q[l], -1.0}, {v[l], -box.q_lo(l, k)}});
    lp.add_row(RowSense::le, box.q_hi(l, k), {{q[l], 1.0}, {v[np + l], box.q_hi(l, k)}});

    lp.add_row(RowSense::eq, 0.0, {{q[l], 1.0}, {qp[l], -1.0}, {qm[l], 1.0}});
    lp.add_row(RowSense::eq, 0.0, {{s[l], 1.0}, {qp[l], -1.0}, {qm[l], -1.0}});
    lp.add_row(RowSense::eq, 0.0, {{th[l], 1.0}, {tp[l], -1.0}, {tm[l], 1.0}});
    lp.add_row(RowSense::le, 0.0, {{qp[l], 1.0}, {z[l], -box.qp_hi(l, k)}});
    lp.add_row(RowSense::le, box.qm_hi(l, k), {{qm[l], 1.0}, {z[l], box.qm_hi(l, k)}});
    lp.add_row(RowSense::le, 0.0, {{tp[l], 1.0}, {z[l], -box.thp_hi(l, k)}});
    lp.add_row(RowSense::le, box.thm_hi(l, k), {{tm[l], 1.0}, {z[l], box.thm_hi(l, k)}});

    auto cuts_for = [&](int tcol, int qcol, double lo, double hi) {
      double a = coeffs.a[l], b = coeffs.b[l];
      for (int i = 0; i < m; ++i) {
        double qi = lo + (hi - lo) * i / (m - 1);
        lp.add_row(RowSense::ge, -a * qi * qi, {{tcol, 1.0}, {qcol, -(2.0 * a * qi + b)}});
      }
      lp.add_row(RowSense::le, -a * lo * hi, {{tcol, 1.0}, {qcol, -(a * (lo + hi) + b)}});
    };
    cuts_for(tp[l], qp[l], box.qp_lo(l, k), box.qp_hi(l, k));
    cuts_for(tm[l], qm[l], box.qm_lo(l, k), box.qm_hi(l, k));
  }
  for (int i = 0; i < nn; ++i) {
    std::vector<std::pair<int, double>> row;
    for (int l : net.links_in(i)) row.emplace_back(q[l], 1.0);
    for (int l : net.links_out(i)) row.emplace_back(q[l], -1.0);
    lp.add_row(RowSense::eq, net.nodes[i].demand[k], row);
  }
  for (int l = 0; l < np; ++l) {
    lp.add_row(RowSense::le, 1.0, {{v[l], 1.0}, {v[np + l], 1.0}});
  }
  std::vector<std::pair<int, double>> all;
  for (int t = 0; t < 2 * np; ++t) all.emplace_back(v[t], 1.0);
  lp.add_row(RowSense::eq, n_v, all);

  LpSolution sol = lp_solve(lp);
  REQUIRE(sol.status == LpStatus::optimal);
  return sigma * sol.objective;  // the bound on q_link
}

}  // namespace

TEST_CASE("interval images of the splitting map") {
  HeadlossCoefficients coeffs;
  coeffs.a = {2.0};
  coeffs.b = {1.0};
  coeffs.q_ref = {5.0};

  Array2 lo(1, 1), hi(1, 1);
  lo(0, 0) = -2.0;
  hi(0, 0) = 5.0;
  UBounds u = propagate_u_bounds(lo, hi, coeffs);
  CHECK(u.qp_lo(0, 0) == 0.0);
  CHECK(u.qp_hi(0, 0) == 5.0);
  CHECK(u.qm_lo(0, 0) == 0.0);
  CHECK(u.qm_hi(0, 0) == 2.0);
  CHECK(u.s_lo(0, 0) == 0.0);
  CHECK(u.s_hi(0, 0) == 5.0);
  CHECK(u.thp_hi(0, 0) == doctest::Approx(2.0 * 25.0 + 5.0));
  CHECK(u.thm_hi(0, 0) == doctest::Approx(2.0 * 4.0 + 2.0));

  lo(0, 0) = 1.0;
  hi(0, 0) = 3.0;
  u = propagate_u_bounds(lo, hi, coeffs);
  CHECK(u.s_lo(0, 0) == 1.0);
  CHECK(u.s_hi(0, 0) == 3.0);
  CHECK(u.qm_lo(0, 0) == 0.0);
  CHECK(u.qm_hi(0, 0) == 0.0);
  CHECK(u.thp_lo(0, 0) == doctest::Approx(3.0));

  lo(0, 0) = 0.0;
  hi(0, 0) = 0.0;
  u = propagate_u_bounds(lo, hi, coeffs);
  CHECK(u.s_hi(0, 0) == 0.0);
  CHECK(u.qp_hi(0, 0) == 0.0);
  CHECK(u.qm_hi(0, 0) == 0.0);
  CHECK(u.thp_hi(0, 0) == 0.0);
  CHECK(u.thm_hi(0, 0) == 0.0);
}

TEST_CASE("single pipe tightens to the demand exactly") {
  NetworkGraph net = testgen::single_pipe(2, 7.5);
  HeadlossCoefficients coeffs = fit_all_headloss(net);
  BoundsBox box = BoundsBox::from_network(net, coeffs);
  ObbtOutcome out = tighten_flow_bounds(net, coeffs, box, 5, 0, {});
  for (int k = 0; k < net.n_t; ++k) {
    CHECK(out.bounds.q_lo(0, k) == doctest::Approx(7.5).epsilon(1e-7));
    CHECK(out.bounds.q_hi(0, k) == doctest::Approx(7.5).epsilon(1e-7));
  }
}

TEST_CASE("sweeps nest and reach a fixed point") {
  NetworkGraph net = load_network(kFixtures + "/tri.json");
  HeadlossCoefficients coeffs = fit_all_headloss(net);
  BoundsBox box = BoundsBox::from_network(net, coeffs);
  ObbtOutcome first = tighten_flow_bounds(net, coeffs, box, 5, 1, {});
  ObbtOutcome second = tighten_flow_bounds(net, coeffs, first.bounds, 5, 1, {});
  for (int l = 0; l < net.n_p(); ++l) {
    for (int k = 0; k < net.n_t; ++k) {
      CHECK(first.bounds.q_lo(l, k) >= box.q_lo(l, k) - 1e-12);
      CHECK(first.bounds.q_hi(l, k) <= box.q_hi(l, k) + 1e-12);
      CHECK(second.bounds.q_lo(l, k) >= first.bounds.q_lo(l, k) - 1e-12);
      CHECK(second.bounds.q_hi(l, k) <= first.bounds.q_hi(l, k) + 1e-12);
    }
  }
  // Near fixed point: a third sweep changes nothing beyond solver tolerance.
  ObbtOutcome third = tighten_flow_bounds(net, coeffs, second.bounds, 5, 1, {});
  for (int l = 0; l < net.n_p(); ++l) {
    for (int k = 0; k < net.n_t; ++k) {
      CHECK(std::abs(third.bounds.q_lo(l, k) - second.bounds.q_lo(l, k)) <= 1e-6);
      CHECK(std::abs(third.bounds.q_hi(l, k) - second.bounds.q_hi(l, k)) <= 1e-6);
    }
  }
}

TEST_CASE("tri bounds match the independent formulation oracle") {
  NetworkGraph net = load_network(kFixtures + "/tri.json");
  HeadlossCoefficients coeffs = fit_all_headloss(net);
  BoundsBox box = BoundsBox::from_network(net, coeffs);
  ObbtOutcome out = tighten_flow_bounds(net, coeffs, box, 5, 1, {});
  for (int l = 0; l < net.n_p(); ++l) {
    for (int k = 0; k < net.n_t; ++k) {
      double lo = oracle_bound(net, coeffs, box, 5, 1, k, l, 1.0);
      double hi = oracle_bound(net, coeffs, box, 5, 1, k, l, -1.0);
      CHECK(out.bounds.q_lo(l, k) == doctest::Approx(lo).epsilon(1e-7));
      CHECK(out.bounds.q_hi(l, k) == doctest::Approx(hi).epsilon(1e-7));
    }
  }
}

TEST_CASE("serial and openmp sweeps agree bit for bit") {
  NetworkGraph net = load_network(kFixtures + "/tri.json");
  HeadlossCoefficients coeffs = fit_all_headloss(net);
  BoundsBox box = BoundsBox::from_network(net, coeffs);
  ObbtOptions serial, parallel;
  serial.threads = 1;
  parallel.threads = 0;  // auto
  ObbtOutcome a = tighten_flow_bounds(net, coeffs, box, 5, 1, serial);
  ObbtOutcome b = tighten_flow_bounds(net, coeffs, box, 5, 1, parallel);
  CHECK(a.bounds.q_lo.data() == b.bounds.q_lo.data());
  CHECK(a.bounds.q_hi.data() == b.bounds.q_hi.data());
  REQUIRE(a.report.entries.size() == b.report.entries.size());
  for (std::size_t t = 0; t < a.report.entries.size(); ++t) {
    CHECK(a.report.entries[t].new_lo == b.report.entries[t].new_lo);
    CHECK(a.report.entries[t].new_hi == b.report.entries[t].new_hi);
  }
}

TEST_CASE("feasible flows stay inside the tightened intervals") {
  NetworkGraph net = load_network(kFixtures + "/tri.json");
  HeadlossCoefficients coeffs = fit_all_headloss(net);
  BoundsBox box = BoundsBox::from_network(net, coeffs);

  // Feasible states first (binaries included), then the sweep.
  std::vector<HydraulicState> states;
  for (int slot : {-1, 0, 1, 2}) {
    ValvePlacement place;
    place.v.assign(2 * net.n_p(), 0);
    if (slot >= 0) place.v[slot] = 1;
    NlpResult nlp = solve_fixed_valve_nlp(net, coeffs, place);
    if (nlp.feasible) states.push_back(std::move(nlp.state));
  }
  REQUIRE(states.size() >= 2);

  ObbtOutcome out = tighten_flow_bounds(net, coeffs, box, 5, 1, {});
  for (const HydraulicState& st : states) {
    for (int l = 0; l < net.n_p(); ++l) {
      for (int k = 0; k < net.n_t; ++k) {
        CHECK(st.q(l, k) >= out.bounds.q_lo(l, k) - 1e-6);
        CHECK(st.q(l, k) <= out.bounds.q_hi(l, k) + 1e-6);
      }
    }
  }
}

TEST_CASE("tightening can only raise the relaxation optimum") {
  NetworkGraph net = load_network(kFixtures + "/tri.json");
  HeadlossCoefficients coeffs = fit_all_headloss(net);
  BoundsBox box = BoundsBox::from_network(net, coeffs);
  RelaxationBuild before = assemble_relaxation(net, coeffs, box, 5, 1, 1);
  LpSolution lb_before = lp_solve(before.lp);
  REQUIRE(lb_before.status == LpStatus::optimal);

  ObbtOutcome out = tighten_flow_bounds(net, coeffs, box, 5, 1, {});
  RelaxationBuild after = assemble_relaxation(net, coeffs, out.bounds, 5, 1, 1);
  LpSolution lb_after = lp_solve(after.lp);
  REQUIRE(lb_after.status == LpStatus::optimal);
  CHECK(lb_after.objective >= lb_before.objective - 1e-9 * (1.0 + std::abs(lb_before.objective)));
}

TEST_CASE("globally infeasible instances abort with a diagnostic") {
  NetworkGraph net = testgen::single_pipe(1, 10.0);
  net.links[0].q_min.assign(1, -1.0);
  net.links[0].q_max.assign(1, 1.0);  // cannot carry the demand
  HeadlossCoefficients coeffs = fit_all_headloss(net);
  BoundsBox box = BoundsBox::from_network(net, coeffs);
  CHECK_THROWS_AS(tighten_flow_bounds(net, coeffs, box, 5, 0, {}), SolveError);
}

TEST_CASE("obbt report csv is ordered and complete") {
  NetworkGraph net = load_network(kFixtures + "/tri.json");
  HeadlossCoefficients coeffs = fit_all_headloss(net);
  BoundsBox box = BoundsBox::from_network(net, coeffs);
  ObbtOutcome out = tighten_flow_bounds(net, coeffs, box, 5, 1, {});
  std::ostringstream os;
  write_obbt_csv(net, out.report, os);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "link_id,time,q_min_old,q_max_old,q_min_new,q_max_new,status_min,status_max");
  int rows = 0;
  std::string prev_id;
  while (std::getline(is, line)) {
    ++rows;
    std::string id = line.substr(0, line.find(','));
    CHECK(id >= prev_id);
    prev_id = id;
  }
  CHECK(rows == net.n_p() * net.n_t);
}
