#include "wdn/heuristic.hpp"

#include <algorithm>
#include <cmath>

namespace wdn {

ValvePlacement round_valve_vector(const std::vector<double>& v, int n_p, int n_v) {
  if (static_cast<int>(v.size()) != 2 * n_p) {
    throw InputError("round_valve_vector: expected 2*n_p entries");
  }
  if (n_v < 0 || n_v > n_p) {
    throw InputError("round_valve_vector: n_v must be within [0, n_p]");
  }

  // Per link keep the stronger direction; ties go to the positive one.
  struct Candidate {
    int link;
    int slot;
    double value;
  };
  std::vector<Candidate> cands(n_p);
  for (int l = 0; l < n_p; ++l) {
    bool positive = v[l] >= v[n_p + l];
    cands[l] = Candidate{l, positive ? l : n_p + l, std::max(v[l], v[n_p + l])};
  }
  std::stable_sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    if (a.value != b.value) return a.value > b.value;
    return a.link < b.link;
  });

  ValvePlacement out;
  out.v.assign(2 * n_p, 0);
  for (int t = 0; t < n_v; ++t) out.v[cands[t].slot] = 1;
  return out;
}

FeasibleSolution build_feasible_solution(const NetworkGraph& net,
                                         const HeadlossCoefficients& coeffs,
                                         const ValvePlacement& vhat, int n_b,
                                         const BoundsBox& bounds, const NlpOptions& nlp_opts) {
  FeasibleSolution out;
  NlpResult nlp = solve_fixed_valve_nlp(net, coeffs, vhat, nlp_opts);
  if (!nlp.feasible) {
    out.ok = false;
    out.message = "pressure stage: " + nlp.message;
    return out;
  }
  out.hyd = nlp.state;
  out.f_azp = nlp.f_azp;

  QualityMilpBuild milp = assemble_quality_milp(net, out.hyd.s, out.hyd.z, n_b, bounds);
  MilpResult mres = milp_solve(milp.problem);
  if (mres.solution.status != LpStatus::optimal) {
    throw InternalError("quality stage MILP " + std::string(to_string(mres.solution.status)) +
                        ": the gating constants admit every recovered hydraulic state, so this "
                        "indicates inconsistent constants (" + mres.solution.message + ")");
  }
  out.f_atd = mres.solution.objective;
  out.upper_bound = out.f_azp + out.f_atd;

  const QualityVarSpace& Y = milp.space;
  out.qual.c = Array2(net.n_n() + net.n_0(), net.n_t);
  out.qual.xi = Array2(net.n_n(), net.n_t);
  out.qual.r.resize(net.n_p());
  for (int i = 0; i < net.n_n(); ++i) {
    for (int k = 0; k < net.n_t; ++k) {
      out.qual.c(i, k) = mres.solution.primal[Y.c(i, k)];
      out.qual.xi(i, k) = mres.solution.primal[Y.xi(i, k)];
    }
  }
  for (int src = 0; src < net.n_0(); ++src) {
    for (int k = 0; k < net.n_t; ++k) {
      out.qual.c(net.n_n() + src, k) = mres.solution.primal[Y.c_source(src, k)];
    }
  }
  for (int l = 0; l < net.n_p(); ++l) {
    const Link& ln = net.links[l];
    out.qual.r[l] = Array2(ln.segments + 1, net.n_t + 1);
    for (int j = 0; j <= ln.segments; ++j) {
      double init = ln.to.is_source ? net.sources[ln.to.index].c0 : net.nodes[ln.to.index].c0;
      out.qual.r[l](j, 0) = init;
      for (int k = 0; k < net.n_t; ++k) {
        out.qual.r[l](j, k + 1) = mres.solution.primal[Y.r(l, j, k)];
      }
    }
  }
  out.v_b.assign(net.n_n(), 0);
  for (int i = 0; i < net.n_n(); ++i) out.v_b[i] = mres.binaries[i] > 0.5 ? 1 : 0;
  out.ok = true;
  return out;
}

}  // namespace wdn
