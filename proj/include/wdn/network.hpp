#pragma once

#include <string>
#include <vector>

#include "wdn/common.hpp"

namespace wdn {

/// Demand node. All per-time arrays have length n_t.
struct Node {
  std::string id;
  double elevation = 0.0;           // m
  std::vector<double> demand;       // L/s, >= 0
  std::vector<double> h_min, h_max; // m
  double c_max = 2.0;               // mg/L
  double c0 = 0.0;                  // mg/L
  double c_target = 1.0;            // mg/L
};

/// Fixed-head inlet (reservoir, treatment works).
struct SourceNode {
  std::string id;
  std::vector<double> h0;  // m, known head per time step
  double c_max = 0.5;      // mg/L, injection cap
  double c0 = 0.0;         // mg/L
};

/// Endpoint reference: demand node or source.
struct EndpointRef {
  bool is_source = false;
  int index = -1;  // into nodes or sources
};

struct Link {
  std::string id;
  EndpointRef from, to;    // reference direction from -> to
  double length = 0.0;     // m
  double diameter = 0.0;   // m
  double roughness = 0.0;  // Hazen-Williams C
  double decay = 0.0;      // 1/s
  int segments = 2;        // J >= 1
  std::vector<double> q_min, q_max;      // L/s
  std::vector<double> eta_min, eta_max;  // m, valve head-loss box
};

class NetworkGraph {
 public:
  std::vector<Node> nodes;
  std::vector<SourceNode> sources;
  std::vector<Link> links;
  int n_t = 1;
  double dt = 3600.0;  // s

  int n_n() const { return static_cast<int>(nodes.size()); }
  int n_0() const { return static_cast<int>(sources.size()); }
  int n_p() const { return static_cast<int>(links.size()); }

  /// Links whose reference direction enters / leaves demand node i.
  const std::vector<int>& links_in(int node) const { return in_[node]; }
  const std::vector<int>& links_out(int node) const { return out_[node]; }
  /// All links incident to demand node i (in then out order).
  std::vector<int> links_incident(int node) const;

  /// J-bar = sum over links of (1 + J_l).
  int total_grid_points() const;

  void rebuild_incidence();
  void validate() const;  // throws InputError naming the offending entity

 private:
  std::vector<std::vector<int>> in_, out_;
};

NetworkGraph load_network(const std::string& path);
NetworkGraph parse_network(const std::string& json_text, const std::string& origin = "<memory>");
std::string save_network(const NetworkGraph& net);

/// AZP weights per demand node (incident length share over horizon).
std::vector<double> azp_weights(const NetworkGraph& net);

/// ATD weights per (node, time): demand share of total demand.
/// Throws SolveError when total demand is zero.
Array2 atd_weights(const NetworkGraph& net);

struct ProblemSize {
  long continuous = 0;
  long binary = 0;
  long nonconvex = 0;
};

ProblemSize problem_size(const NetworkGraph& net);

/// Run-level knobs mirroring the planning problem parameters.
struct ProblemConfig {
  int n_v = 0;            // valves to place
  int n_b = 0;            // boosters to place
  int m = 5;              // tangent points per quadratic relaxation
  double eps_tol = 1e-2;  // relative lower-bound change tolerance
  int i_max = 10;         // relax-tighten-round iteration cap
  void validate(const NetworkGraph& net) const;
};

}  // namespace wdn
