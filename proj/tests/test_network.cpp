#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>

#include "fixture_gen.hpp"

using namespace wdn;

namespace {

const std::string kFixtures = WDN_FIXTURE_DIR;

std::string minimal_json(const std::string& patch_links = "") {
  std::string links = patch_links.empty()
                          ? R"([{"id":"p1","from":"s1","to":"n1","length":100.0,
                                 "diameter":0.2,"roughness":120.0,"decay":0.0,
                                 "q_min":-10.0,"q_max":10.0}])"
                          : patch_links;
  return R"({"meta":{"n_t":1,"dt":3600.0},
             "nodes":[{"id":"n1","demand":1.0,"h_min":0.0,"h_max":50.0}],
             "sources":[{"id":"s1","h0":40.0}],
             "links":)" +
         links + "}";
}

}  // namespace

TEST_CASE("minimal file loads with the smallest valid counts") {
  NetworkGraph net = parse_network(minimal_json());
  CHECK(net.n_n() == 1);
  CHECK(net.n_p() == 1);
  CHECK(net.n_0() == 1);
  CHECK(net.n_t == 1);
  // defaults
  CHECK(net.nodes[0].c_max == 2.0);
  CHECK(net.nodes[0].c_target == 1.0);
  CHECK(net.sources[0].c_max == 0.5);
  CHECK(net.links[0].segments == 2);
}

TEST_CASE("unknown endpoint is a dangling-endpoint error naming the link") {
  std::string bad = R"([{"id":"p1","from":"s1","to":"nope","length":100.0,
                        "diameter":0.2,"roughness":120.0,"decay":0.0,
                        "q_min":-10.0,"q_max":10.0}])";
  CHECK_THROWS_WITH_AS(parse_network(minimal_json(bad)),
                       doctest::Contains("p1"), InputError);
}

TEST_CASE("validation errors carry the offending entity") {
  CHECK_THROWS_AS(parse_network("{not json"), InputError);
  // duplicate id
  std::string dup = R"({"meta":{"n_t":1},"nodes":[
      {"id":"x","demand":1.0,"h_min":0,"h_max":10},
      {"id":"x","demand":1.0,"h_min":0,"h_max":10}],
      "sources":[{"id":"s","h0":5}],
      "links":[{"id":"p","from":"s","to":"x","length":1,"diameter":0.1,
                "roughness":100,"decay":0,"q_min":0,"q_max":1}]})";
  CHECK_THROWS_WITH_AS(parse_network(dup), doctest::Contains("duplicate"), InputError);
  // bound violation
  std::string bad_bounds = R"({"meta":{"n_t":1},"nodes":[
      {"id":"x","demand":1.0,"h_min":20,"h_max":10}],
      "sources":[{"id":"s","h0":5}],
      "links":[{"id":"p","from":"s","to":"x","length":1,"diameter":0.1,
                "roughness":100,"decay":0,"q_min":0,"q_max":1}]})";
  CHECK_THROWS_WITH_AS(parse_network(bad_bounds), doctest::Contains("h_min"), InputError);
  // broadcast length mismatch
  std::string bad_len = R"({"meta":{"n_t":3},"nodes":[
      {"id":"x","demand":[1.0,2.0],"h_min":0,"h_max":10}],
      "sources":[{"id":"s","h0":5}],
      "links":[{"id":"p","from":"s","to":"x","length":1,"diameter":0.1,
                "roughness":100,"decay":0,"q_min":0,"q_max":1}]})";
  CHECK_THROWS_AS(parse_network(bad_len), InputError);
}

TEST_CASE("tri fixture counts and weights") {
  NetworkGraph net = load_network(kFixtures + "/tri.json");
  CHECK(net.n_n() == 2);
  CHECK(net.n_p() == 3);
  CHECK(net.n_0() == 1);

  // Hand evaluation: incident lengths 100+300 and 200+300, total 900.
  std::vector<double> w = azp_weights(net);
  CHECK(w[0] == doctest::Approx(400.0 / (2 * 900.0)).epsilon(1e-14));
  CHECK(w[1] == doctest::Approx(500.0 / (2 * 900.0)).epsilon(1e-14));

  // Hand evaluation of the demand shares: total demand 10.
  Array2 d = atd_weights(net);
  CHECK(d(0, 0) == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(d(0, 1) == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(d(1, 0) == doctest::Approx(0.4).epsilon(1e-14));
  CHECK(d(1, 1) == doctest::Approx(0.1).epsilon(1e-14));
}

TEST_CASE("weight identities hold on randomized networks") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    NetworkGraph net = testgen::random_network(seed, 3 + seed % 7, 4 + seed % 9, 1 + seed % 5);
    std::vector<double> w = azp_weights(net);
    double sum = 0.0;
    for (double x : w) sum += x;
    CHECK(std::abs(sum - 1.0 / net.n_t) <= 1e-12);

    Array2 d = atd_weights(net);
    double total = 0.0;
    for (double x : d.data()) total += x;
    CHECK(std::abs(total - 1.0) <= 1e-12);
  }
}

TEST_CASE("atd weights reject all-zero demand") {
  NetworkGraph net = testgen::single_pipe(2, 0.0);
  CHECK_THROWS_AS(atd_weights(net), SolveError);
}

TEST_CASE("one nonzero demand entry carries all the weight") {
  NetworkGraph net = testgen::single_pipe(3, 0.0);
  net.nodes[0].demand[1] = 7.5;
  Array2 d = atd_weights(net);
  CHECK(d(0, 1) == 1.0);
  CHECK(d(0, 0) == 0.0);
}

TEST_CASE("problem size closed forms") {
  // Table row shape: n_n=6, n_p=10, n_0=3, n_t=24, J=2.
  NetworkGraph net = load_network(kFixtures + "/twoloops.json");
  REQUIRE(net.n_n() == 6);
  REQUIRE(net.n_p() == 10);
  REQUIRE(net.n_0() == 3);
  REQUIRE(net.n_t == 24);
  ProblemSize s = problem_size(net);
  CHECK(s.continuous == 4008);
  CHECK(s.binary == 266);
  CHECK(s.nonconvex == 1200);

  // Smallest instance, J = 2 so J-bar = 3.
  NetworkGraph tiny = testgen::single_pipe(1);
  ProblemSize t = problem_size(tiny);
  CHECK(t.continuous == 19);
  CHECK(t.binary == 4);
  CHECK(t.nonconvex == 5);

  // Doubling n_t doubles continuous and nonconvex; binary gains n_p per step.
  NetworkGraph tiny2 = testgen::single_pipe(2);
  ProblemSize t2 = problem_size(tiny2);
  CHECK(t2.continuous == 2 * t.continuous);
  CHECK(t2.nonconvex == 2 * t.nonconvex);
  CHECK(t2.binary == t.binary + tiny.n_p());
}

TEST_CASE("load-save round trip is the identity on the data model") {
  NetworkGraph net = load_network(kFixtures + "/tri.json");
  NetworkGraph back = parse_network(save_network(net));
  REQUIRE(back.n_n() == net.n_n());
  REQUIRE(back.n_p() == net.n_p());
  REQUIRE(back.n_0() == net.n_0());
  CHECK(back.n_t == net.n_t);
  CHECK(back.dt == net.dt);
  for (int i = 0; i < net.n_n(); ++i) {
    CHECK(back.nodes[i].id == net.nodes[i].id);
    CHECK(back.nodes[i].demand == net.nodes[i].demand);
    CHECK(back.nodes[i].h_min == net.nodes[i].h_min);
    CHECK(back.nodes[i].h_max == net.nodes[i].h_max);
    CHECK(back.nodes[i].c_max == net.nodes[i].c_max);
    CHECK(back.nodes[i].c0 == net.nodes[i].c0);
    CHECK(back.nodes[i].c_target == net.nodes[i].c_target);
  }
  for (int l = 0; l < net.n_p(); ++l) {
    CHECK(back.links[l].id == net.links[l].id);
    CHECK(back.links[l].length == net.links[l].length);
    CHECK(back.links[l].q_min == net.links[l].q_min);
    CHECK(back.links[l].q_max == net.links[l].q_max);
    CHECK(back.links[l].eta_min == net.links[l].eta_min);
    CHECK(back.links[l].segments == net.links[l].segments);
  }
  for (int s = 0; s < net.n_0(); ++s) {
    CHECK(back.sources[s].id == net.sources[s].id);
    CHECK(back.sources[s].h0 == net.sources[s].h0);
  }
}

TEST_CASE("problem config validation") {
  NetworkGraph net = load_network(kFixtures + "/tri.json");
  ProblemConfig c;
  c.n_v = 7;  // > 2 n_p
  CHECK_THROWS_AS(c.validate(net), InputError);
  c.n_v = 1;
  c.n_b = 3;  // > n_n
  CHECK_THROWS_AS(c.validate(net), InputError);
  c.n_b = 1;
  c.m = 1;
  CHECK_THROWS_AS(c.validate(net), InputError);
  c.m = 5;
  c.validate(net);  // ok
}
