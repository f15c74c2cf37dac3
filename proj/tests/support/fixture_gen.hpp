#pragma once

#include <cstdint>

#include "wdn/network.hpp"

namespace wdn::testgen {

/// Source -> node, one pipe. Demand constant, generous flow box.
NetworkGraph single_pipe(int n_t, double demand = 10.0, double decay = 1e-4,
                         double length = 1000.0, double diameter = 0.25, int segments = 2);

/// Source feeding a chain of `n_nodes` demand nodes (tree: flows are fixed
/// by mass balance). Strong pressure surplus so valves matter.
NetworkGraph chain(int n_nodes, int n_t, double base_demand = 5.0, double decay = 1e-4);

/// Source plus three demand nodes, four links with one loop; J = 1.
NetworkGraph diamond(int n_t);

/// Randomized connected network (spanning tree plus extra links) with
/// positive demands; deterministic in the seed.
NetworkGraph random_network(std::uint64_t seed, int n_nodes, int n_links, int n_t);

/// 20 links x 24 steps with a loop structure, J = 1 (bound-tightening scale).
NetworkGraph grid20(int n_t = 24);

}  // namespace wdn::testgen
