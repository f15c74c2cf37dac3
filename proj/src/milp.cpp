#include "wdn/milp.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace wdn {

namespace {

struct Node {
  double bound;  // parent LP objective, valid lower bound
  long id;
  std::vector<std::pair<int, double>> fixes;  // (binary column, 0/1)

  bool operator>(const Node& o) const {
    if (bound != o.bound) return bound > o.bound;
    return id > o.id;
  }
};

}  // namespace

MilpResult milp_solve(const MilpProblem& p, const MilpOptions& opts) {
  MilpResult res;
  for (int j : p.binary_vars) {
    if (j < 0 || j >= p.lp.num_vars()) throw InputError("milp: binary index out of range");
  }

  LpProblem work = p.lp;
  for (int j : p.binary_vars) {
    work.lower[j] = std::max(work.lower[j], 0.0);
    work.upper[j] = std::min(work.upper[j], 1.0);
  }

  auto solve_with = [&](const std::vector<std::pair<int, double>>& fixes) {
    std::vector<std::pair<double, double>> saved;
    saved.reserve(fixes.size());
    for (auto [j, val] : fixes) {
      saved.emplace_back(work.lower[j], work.upper[j]);
      work.lower[j] = val;
      work.upper[j] = val;
    }
    LpSolution s = lp_solve(work, opts.lp);
    for (std::size_t i = 0; i < fixes.size(); ++i) {
      work.lower[fixes[i].first] = saved[i].first;
      work.upper[fixes[i].first] = saved[i].second;
    }
    return s;
  };

  double incumbent_obj = kInf;
  LpSolution incumbent;
  std::vector<double> incumbent_bins;
  double best_open_bound = -kInf;

  std::priority_queue<Node, std::vector<Node>, std::greater<Node>> open;
  long next_id = 0;
  open.push(Node{-kInf, next_id++, {}});

  auto gap_of = [](double ub, double lb) {
    return (ub - lb) / std::max(1.0, std::abs(ub));
  };

  while (!open.empty()) {
    if (res.nodes >= opts.node_limit) break;
    Node node = open.top();
    open.pop();
    best_open_bound = node.bound;
    if (incumbent_obj < kInf &&
        node.bound >= incumbent_obj - opts.gap_tol * std::max(1.0, std::abs(incumbent_obj))) {
      // Best-first order: every remaining node is at least as bad.
      best_open_bound = node.bound;
      break;
    }
    ++res.nodes;

    LpSolution rel = solve_with(node.fixes);
    if (rel.status == LpStatus::infeasible) continue;
    if (rel.status == LpStatus::unbounded) {
      res.solution = rel;
      res.solution.message = "relaxation unbounded at node " + std::to_string(node.id);
      return res;
    }
    if (rel.status == LpStatus::iteration_limit) {
      res.solution = rel;
      res.solution.message = "lp breakdown at node " + std::to_string(node.id);
      return res;
    }
    if (incumbent_obj < kInf &&
        rel.objective >= incumbent_obj - opts.gap_tol * std::max(1.0, std::abs(incumbent_obj))) {
      continue;
    }

    // Most-fractional branching: largest distance to the nearest of {0,1}.
    int branch = -1;
    double best_frac = opts.int_tol;
    for (int j : p.binary_vars) {
      double x = rel.primal[j];
      double dist = std::min(std::abs(x), std::abs(1.0 - x));
      if (dist > best_frac + 1e-15) {
        best_frac = dist;
        branch = j;
      }
    }

    if (branch < 0) {
      // Integral: re-solve with binaries pinned to the rounded values so the
      // incumbent is exactly integral.
      std::vector<std::pair<int, double>> fixes = node.fixes;
      std::vector<char> fixed(work.num_vars(), 0);
      for (auto [j, v] : fixes) fixed[j] = 1;
      for (int j : p.binary_vars) {
        if (!fixed[j]) fixes.emplace_back(j, rel.primal[j] > 0.5 ? 1.0 : 0.0);
      }
      LpSolution exact = solve_with(fixes);
      if (exact.status != LpStatus::optimal) continue;  // rounding artifact; prune
      if (incumbent_obj == kInf ||
          exact.objective < incumbent_obj - 1e-12 * std::max(1.0, std::abs(incumbent_obj))) {
        incumbent_obj = exact.objective;
        incumbent = exact;
        incumbent_bins.assign(p.binary_vars.size(), 0.0);
        for (std::size_t t = 0; t < p.binary_vars.size(); ++t) {
          incumbent_bins[t] = incumbent.primal[p.binary_vars[t]] > 0.5 ? 1.0 : 0.0;
        }
      }
      continue;
    }

    for (double val : {0.0, 1.0}) {
      Node child;
      child.bound = rel.objective;
      child.id = next_id++;
      child.fixes = node.fixes;
      child.fixes.emplace_back(branch, val);
      open.push(std::move(child));
    }
  }

  if (incumbent_obj == kInf) {
    if (res.nodes >= opts.node_limit && !open.empty()) {
      res.solution.status = LpStatus::iteration_limit;
      res.solution.message = "node limit reached without incumbent";
    } else {
      res.solution.status = LpStatus::infeasible;
      res.solution.message = "no integral point";
    }
    return res;
  }

  res.solution = incumbent;
  res.binaries = incumbent_bins;
  double lb = open.empty() ? incumbent_obj : std::min(incumbent_obj, best_open_bound);
  res.achieved_gap = std::max(0.0, gap_of(incumbent_obj, lb));
  if (res.nodes >= opts.node_limit && !open.empty() && res.achieved_gap > opts.gap_tol) {
    res.solution.status = LpStatus::iteration_limit;
    res.solution.message = "node limit reached; achieved gap " + std::to_string(res.achieved_gap);
  } else {
    res.solution.status = LpStatus::optimal;
  }
  return res;
}

}  // namespace wdn
