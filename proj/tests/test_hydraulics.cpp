#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <string>

#include "fixture_gen.hpp"
#include "oracles.hpp"
#include "wdn/relaxation.hpp"

using namespace wdn;

namespace {

const std::string kFixtures = WDN_FIXTURE_DIR;

// Independent normal-equations fit on the same 100-point sample grid.
std::pair<double, double> normal_equations_fit(const Link& link, double q_ref) {
  Eigen::Matrix2d ata = Eigen::Matrix2d::Zero();
  Eigen::Vector2d atb = Eigen::Vector2d::Zero();
  for (int i = 0; i < 100; ++i) {
    double q = q_ref * i / 99.0;
    Eigen::Vector2d row(q * q, q);
    ata += row * row.transpose();
    atb += row * hazen_williams_headloss(link, q);
  }
  Eigen::Vector2d x = ata.fullPivLu().solve(atb);
  return {x[0], x[1]};
}

Link make_link(double length, double diameter, double roughness) {
  Link l;
  l.id = "x";
  l.length = length;
  l.diameter = diameter;
  l.roughness = roughness;
  l.decay = 0.0;
  l.segments = 2;
  return l;
}

}  // namespace

TEST_CASE("headloss fit matches the normal-equations oracle") {
  Link l = make_link(1000.0, 0.3, 120.0);
  auto [a, b] = fit_headloss_coefficients(l, 50.0);
  auto [ao, bo] = normal_equations_fit(l, 50.0);
  CHECK(a == doctest::Approx(ao).epsilon(1e-9));
  CHECK(b == doctest::Approx(bo).epsilon(1e-9));
  CHECK(a > 0.0);
  CHECK(b >= 0.0);
}

TEST_CASE("fit vanishes at zero flow and scales linearly in length") {
  Link l = make_link(800.0, 0.25, 110.0);
  auto [a, b] = fit_headloss_coefficients(l, 30.0);
  CHECK(eval_headloss(a, b, 0.0) == 0.0);

  Link l2 = l;
  l2.length *= 2.0;
  auto [a2, b2] = fit_headloss_coefficients(l2, 30.0);
  CHECK(a2 == doctest::Approx(2.0 * a).epsilon(1e-10));
  CHECK(b2 == doctest::Approx(2.0 * b).epsilon(1e-10));
}

TEST_CASE("fit relative error stays under 5 percent across the diameter range") {
  for (double d : {0.05, 0.1, 0.3, 0.6, 1.0}) {
    for (double c : {70.0, 100.0, 150.0}) {
      Link l = make_link(1000.0, d, c);
      double q_ref = 40.0;
      auto [a, b] = fit_headloss_coefficients(l, q_ref);
      double num = 0.0, den = 0.0;
      for (int i = 0; i <= 200; ++i) {
        double q = 0.1 * q_ref + (0.9 * q_ref) * i / 200.0;
        double hw = hazen_williams_headloss(l, q);
        double fit = eval_headloss(a, b, q);
        num += (fit - hw) * (fit - hw);
        den += hw * hw;
      }
      CHECK_MESSAGE(std::sqrt(num / den) <= 0.05, "D=", d, " C=", c);
    }
  }
}

TEST_CASE("eval_headloss basics") {
  CHECK(eval_headloss(2.0, 3.0, 0.0) == 0.0);
  CHECK(eval_headloss(2.0, 3.0, 2.0) == doctest::Approx(14.0));  // 2*4 + 3*2
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> U(-30.0, 30.0);
  for (int t = 0; t < 50; ++t) {
    double q = U(rng);
    CHECK(eval_headloss(1.3, 0.4, -q) == doctest::Approx(-eval_headloss(1.3, 0.4, q)));
  }
}

TEST_CASE("recover_aux componentwise") {
  AuxValues u = recover_aux(5.0, 3.0);
  CHECK(u.qp == 5.0);
  CHECK(u.qm == 0.0);
  CHECK(u.s == 5.0);
  CHECK(u.thp == 3.0);
  CHECK(u.thm == 0.0);
  CHECK(u.z == 1);

  u = recover_aux(-3.0, -2.0);
  CHECK(u.qp == 0.0);
  CHECK(u.qm == 3.0);
  CHECK(u.s == 3.0);
  CHECK(u.thp == 0.0);
  CHECK(u.thm == 2.0);
  CHECK(u.z == 0);

  u = recover_aux(0.0, 0.0);
  CHECK(u.s == 0.0);
  CHECK(u.z == 0);  // sign(0) = -1 convention
}

TEST_CASE("recover_aux exact identities on random inputs") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> U(-100.0, 100.0);
  for (int t = 0; t < 200; ++t) {
    double q = U(rng), th = U(rng);
    AuxValues u = recover_aux(q, th);
    CHECK(u.qp * u.qm == 0.0);
    CHECK(u.s == u.qp + u.qm);
    CHECK(q == u.qp - u.qm);
    CHECK(th == u.thp - u.thm);
  }
}

TEST_CASE("hydraulic row assembly has the expected shape") {
  NetworkGraph net = load_network(kFixtures + "/tri.json");
  HeadlossCoefficients coeffs = fit_all_headloss(net);
  BoundsBox box = BoundsBox::from_network(net, coeffs);
  HydroStepLp step = build_hydraulic_step_lp(net, coeffs, box, 5, 0, nullptr, 1);

  // energy + mass + 4 valve + 3 split + 4 gating per link, plus budget rows,
  // plus (m+1) cuts per link and branch.
  int np = net.n_p(), nn = net.n_n(), m = 5;
  int expected = np + nn + 4 * np + 3 * np + 4 * np + 2 * np * (m + 1) + np + 1;
  CHECK(step.lp.num_rows() == expected);
  CHECK(step.lp.num_vars() == 9 * np + nn + 2 * np);

  // A single pipe at one step: mass balance forces q = d.
  NetworkGraph single = testgen::single_pipe(1, 7.0);
  HeadlossCoefficients c1 = fit_all_headloss(single);
  BoundsBox b1 = BoundsBox::from_network(single, c1);
  HydroStepLp s1 = build_hydraulic_step_lp(single, c1, b1, 5, 0, nullptr, 0);
  s1.lp.objective[s1.cols.q[0]] = 1.0;
  LpSolution lo = lp_solve(s1.lp);
  REQUIRE(lo.status == LpStatus::optimal);
  CHECK(lo.objective == doctest::Approx(7.0).epsilon(1e-9));
}

TEST_CASE("no valve forces zero extra head loss") {
  // v = 0 on every link: the activation rows pin eta to 0 in the step LP.
  NetworkGraph net = testgen::diamond(1);
  HeadlossCoefficients coeffs = fit_all_headloss(net);
  BoundsBox box = BoundsBox::from_network(net, coeffs);
  ValvePlacement none;
  none.v.assign(2 * net.n_p(), 0);
  HydroStepLp step = build_hydraulic_step_lp(net, coeffs, box, 5, 0, &none, 0);
  for (int l = 0; l < net.n_p(); ++l) {
    step.lp.objective[step.cols.eta[l]] = -1.0;  // push eta up
  }
  LpSolution s = lp_solve(step.lp);
  REQUIRE(s.status == LpStatus::optimal);
  CHECK(std::abs(s.objective) <= 1e-9);
}

TEST_CASE("single gravity pipe: nlp matches the scalar oracle") {
  NetworkGraph net = testgen::single_pipe(2, 10.0);
  HeadlossCoefficients coeffs = fit_all_headloss(net);
  ValvePlacement none;
  none.v.assign(2, 0);
  NlpResult res = solve_fixed_valve_nlp(net, coeffs, none);
  REQUIRE(res.feasible);
  double h_expect = testgen::newton_single_pipe_head(60.0, coeffs.a[0], coeffs.b[0], 10.0);
  std::vector<double> w = azp_weights(net);
  for (int k = 0; k < net.n_t; ++k) {
    CHECK(res.state.q(0, k) == doctest::Approx(10.0).epsilon(1e-8));
    CHECK(res.state.h(0, k) == doctest::Approx(h_expect).epsilon(1e-7));
    CHECK(res.state.eta(0, k) == doctest::Approx(0.0));
  }
  double azp_expect = net.n_t * w[0] * (h_expect - net.nodes[0].elevation);
  CHECK(res.f_azp == doctest::Approx(azp_expect).epsilon(1e-7));
}

TEST_CASE("nlp residuals and bounds hold on a looped network") {
  NetworkGraph net = load_network(kFixtures + "/tri.json");
  HeadlossCoefficients coeffs = fit_all_headloss(net);
  ValvePlacement place;
  place.v.assign(2 * net.n_p(), 0);
  place.v[0] = 1;  // valve on p1, positive direction
  NlpResult res = solve_fixed_valve_nlp(net, coeffs, place);
  REQUIRE(res.feasible);
  for (int k = 0; k < net.n_t; ++k) {
    for (int i = 0; i < net.n_n(); ++i) {
      double inflow = 0.0;
      for (int l : net.links_in(i)) inflow += res.state.q(l, k);
      for (int l : net.links_out(i)) inflow -= res.state.q(l, k);
      CHECK(std::abs(inflow - net.nodes[i].demand[k]) <= 1e-6);
      CHECK(res.state.h(i, k) >= net.nodes[i].h_min[k] - 1e-8);
      CHECK(res.state.h(i, k) <= net.nodes[i].h_max[k] + 1e-8);
    }
    for (int l = 0; l < net.n_p(); ++l) {
      const Link& ln = net.links[l];
      double head1 = ln.from.is_source ? net.sources[ln.from.index].h0[k]
                                       : res.state.h(ln.from.index, k);
      double head2 = ln.to.is_source ? net.sources[ln.to.index].h0[k]
                                     : res.state.h(ln.to.index, k);
      double resid = head1 - head2 - res.state.theta(l, k) - res.state.eta(l, k);
      CHECK(std::abs(resid) <= 1e-6);
      double dev = res.state.theta(l, k) -
                   eval_headloss(coeffs.a[l], coeffs.b[l], res.state.q(l, k));
      CHECK(std::abs(dev) <= 1e-6);
    }
  }
}

TEST_CASE("valve placements expand opportunity monotonically") {
  // Chain fixture: any extra valve can only lower the achievable pressure sum.
  NetworkGraph net = testgen::chain(3, 2);
  HeadlossCoefficients coeffs = fit_all_headloss(net);

  ValvePlacement none, first, both;
  none.v.assign(2 * net.n_p(), 0);
  first = none;
  first.v[0] = 1;
  both = first;
  both.v[1] = 1;

  NlpResult r0 = solve_fixed_valve_nlp(net, coeffs, none);
  NlpResult r1 = solve_fixed_valve_nlp(net, coeffs, first);
  NlpResult r2 = solve_fixed_valve_nlp(net, coeffs, both);
  REQUIRE(r0.feasible);
  REQUIRE(r1.feasible);
  REQUIRE(r2.feasible);
  CHECK(r1.f_azp <= r0.f_azp + 1e-9);
  CHECK(r2.f_azp <= r1.f_azp + 1e-9);
  CHECK(r1.f_azp < r0.f_azp - 1.0);  // the valve really bites on this fixture
}

TEST_CASE("impossible head bounds are reported infeasible") {
  NetworkGraph net = testgen::single_pipe(1, 10.0);
  net.nodes[0].h_min.assign(1, 70.0);  // above the 60 m source head
  net.nodes[0].h_max.assign(1, 80.0);
  HeadlossCoefficients coeffs = fit_all_headloss(net);
  ValvePlacement none;
  none.v.assign(2, 0);
  NlpResult res = solve_fixed_valve_nlp(net, coeffs, none);
  CHECK_FALSE(res.feasible);
}
