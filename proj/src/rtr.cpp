#include "wdn/rtr.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "wdn/audit.hpp"

namespace wdn {

double compute_gap(double ub, double lb) {
  if (lb <= 0.0) {
    throw SolveError("compute_gap: undefined for lb <= 0; report the absolute gap instead");
  }
  return 100.0 * (ub - lb) / lb;
}

const char* to_string(RtrStatus s) {
  switch (s) {
    case RtrStatus::ok: return "ok";
    case RtrStatus::no_feasible_solution: return "no-feasible-solution";
    case RtrStatus::infeasible: return "infeasible";
  }
  return "?";
}

RtrResult run_rtr(const NetworkGraph& net, const ProblemConfig& config, const RtrOptions& opts) {
  config.validate(net);
  auto t0 = std::chrono::steady_clock::now();
  RtrResult res;

  HeadlossCoefficients coeffs = fit_all_headloss(net);
  BoundsBox bounds = BoundsBox::from_network(net, coeffs);

  struct Candidate {
    int iteration;
    double f_azp;
    ValvePlacement vhat;
    HydraulicState state;
  };
  std::vector<Candidate> successes;
  double lb_best = -kInf;
  double lb_prev = 0.0;

  try {
    for (int i = 1; i <= config.i_max; ++i) {
      RtrIteration it;
      it.i = i;

      RelaxationBuild rel = assemble_relaxation(net, coeffs, bounds, config.m, config.n_v,
                                                config.n_b);
      it.lp_rows = rel.lp.num_rows();
      it.lp_cols = rel.lp.num_vars();
      LpSolution lp = lp_solve(rel.lp, opts.lp);
      if (lp.status == LpStatus::infeasible) {
        res.status = RtrStatus::infeasible;
        res.message = "relaxation infeasible at iteration " + std::to_string(i);
        res.trace.push_back(it);
        res.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return res;
      }
      if (lp.status != LpStatus::optimal) {
        throw SolveError("relaxation LP " + std::string(to_string(lp.status)) +
                         " at iteration " + std::to_string(i) + ": " + lp.message);
      }
      it.lb = lp.objective;
      lb_best = std::max(lb_best, lp.objective);

      std::vector<double> v_frac(2 * net.n_p());
      for (int slot = 0; slot < 2 * net.n_p(); ++slot) {
        v_frac[slot] = lp.primal[rel.space.v(slot)];
      }
      ValvePlacement vhat = round_valve_vector(v_frac, net.n_p(), config.n_v);

      NlpResult nlp = solve_fixed_valve_nlp(net, coeffs, vhat, opts.nlp);
      it.nlp_ok = nlp.feasible;
      if (nlp.feasible) {
        it.f_azp = nlp.f_azp;
        successes.push_back(Candidate{i, nlp.f_azp, vhat, std::move(nlp.state)});
        log::info("iteration " + std::to_string(i) + ": lb=" + std::to_string(it.lb) +
                  " f_azp=" + std::to_string(it.f_azp));
      } else {
        log::info("iteration " + std::to_string(i) + ": lb=" + std::to_string(it.lb) +
                  " pressure stage failed (" + nlp.message + ")");
      }

      bool more_iterations = i <= config.i_max - 1;
      double rel_change =
          i == 1 ? kInf : std::abs(it.lb - lb_prev) / std::max(std::abs(lb_prev), 1e-30);
      lb_prev = it.lb;
      if (more_iterations && (i == 1 || rel_change > config.eps_tol)) {
        auto tb = std::chrono::steady_clock::now();
        ObbtOptions oopts;
        oopts.threads = opts.obbt_threads;
        oopts.lp = opts.lp;
        ObbtOutcome sweep = tighten_flow_bounds(net, coeffs, bounds, config.m, config.n_v, oopts);
        bounds = std::move(sweep.bounds);
        it.obbt_ran = true;
        it.obbt_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - tb).count();
        res.trace.push_back(it);
      } else {
        res.trace.push_back(it);
        break;
      }
    }
  } catch (const SolveError& e) {
    res.status = RtrStatus::infeasible;
    res.message = e.what();
    res.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
  }

  res.lb = lb_best;

  if (successes.empty()) {
    res.status = RtrStatus::no_feasible_solution;
    res.message = "every pressure stage failed; lower bound still valid";
    res.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
  }

  // Best pressure objective; ties keep the earliest iteration.
  const Candidate* best = &successes.front();
  for (const Candidate& c : successes) {
    if (c.f_azp < best->f_azp - 1e-12) best = &c;
  }

  FeasibleSolution feas;
  {
    QualityMilpBuild milp =
        assemble_quality_milp(net, best->state.s, best->state.z, config.n_b, bounds);
    MilpResult mres = milp_solve(milp.problem);
    if (mres.solution.status != LpStatus::optimal) {
      throw InternalError("final quality MILP " +
                          std::string(to_string(mres.solution.status)) + ": " +
                          mres.solution.message);
    }
    feas.ok = true;
    feas.hyd = best->state;
    feas.f_azp = best->f_azp;
    feas.f_atd = mres.solution.objective;
    feas.upper_bound = feas.f_azp + feas.f_atd;
    const QualityVarSpace& Y = milp.space;
    feas.qual.c = Array2(net.n_n() + net.n_0(), net.n_t);
    feas.qual.xi = Array2(net.n_n(), net.n_t);
    feas.qual.r.resize(net.n_p());
    for (int i = 0; i < net.n_n(); ++i) {
      for (int k = 0; k < net.n_t; ++k) {
        feas.qual.c(i, k) = mres.solution.primal[Y.c(i, k)];
        feas.qual.xi(i, k) = mres.solution.primal[Y.xi(i, k)];
      }
    }
    for (int src = 0; src < net.n_0(); ++src) {
      for (int k = 0; k < net.n_t; ++k) {
        feas.qual.c(net.n_n() + src, k) = mres.solution.primal[Y.c_source(src, k)];
      }
    }
    for (int l = 0; l < net.n_p(); ++l) {
      const Link& ln = net.links[l];
      feas.qual.r[l] = Array2(ln.segments + 1, net.n_t + 1);
      for (int j = 0; j <= ln.segments; ++j) {
        feas.qual.r[l](j, 0) =
            ln.to.is_source ? net.sources[ln.to.index].c0 : net.nodes[ln.to.index].c0;
        for (int k = 0; k < net.n_t; ++k) {
          feas.qual.r[l](j, k + 1) = mres.solution.primal[Y.r(l, j, k)];
        }
      }
    }
    feas.v_b.assign(net.n_n(), 0);
    for (int i = 0; i < net.n_n(); ++i) feas.v_b[i] = mres.binaries[i] > 0.5 ? 1 : 0;
  }

  // Certify the reported point against every constraint family.
  AuditReport audit = audit_full_point(net, coeffs, feas.hyd, feas.qual, best->vhat, feas.v_b,
                                       config.n_v, config.n_b);
  if (!audit.pass(1e-6)) {
    throw InternalError("upper-bound certification failed: " + audit.summary());
  }

  res.status = RtrStatus::ok;
  res.has_ub = true;
  res.ub = feas.upper_bound;
  res.f_azp = feas.f_azp;
  res.f_atd = feas.f_atd;
  res.valves = best->vhat;
  res.boosters = feas.v_b;
  res.hyd = std::move(feas.hyd);
  res.qual = std::move(feas.qual);
  if (res.lb > 0.0) res.gap_percent = compute_gap(res.ub, res.lb);
  res.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

}  // namespace wdn
