#include "wdn/obbt.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace wdn {

UBounds propagate_u_bounds(const Array2& q_lo, const Array2& q_hi,
                           const HeadlossCoefficients& coeffs) {
  const std::size_t np = q_lo.rows(), nt = q_lo.cols();
  UBounds u;
  u.s_lo = Array2(np, nt);
  u.s_hi = Array2(np, nt);
  u.qp_lo = Array2(np, nt);
  u.qp_hi = Array2(np, nt);
  u.qm_lo = Array2(np, nt);
  u.qm_hi = Array2(np, nt);
  u.thp_lo = Array2(np, nt);
  u.thp_hi = Array2(np, nt);
  u.thm_lo = Array2(np, nt);
  u.thm_hi = Array2(np, nt);
  for (std::size_t l = 0; l < np; ++l) {
    double a = coeffs.a[l], b = coeffs.b[l];
    auto quad = [a, b](double t) { return a * t * t + b * t; };  // increasing on t >= 0
    for (std::size_t k = 0; k < nt; ++k) {
      double lo = q_lo(l, k), hi = q_hi(l, k);
      if (lo > hi) throw InputError("propagate_u_bounds: q_lo > q_hi");
      u.qp_lo(l, k) = std::max(lo, 0.0);
      u.qp_hi(l, k) = std::max(hi, 0.0);
      u.qm_lo(l, k) = std::max(-hi, 0.0);
      u.qm_hi(l, k) = std::max(-lo, 0.0);
      double dist0 = (lo <= 0.0 && hi >= 0.0) ? 0.0 : std::min(std::abs(lo), std::abs(hi));
      u.s_lo(l, k) = dist0;
      u.s_hi(l, k) = std::max(std::abs(lo), std::abs(hi));
      u.thp_lo(l, k) = quad(u.qp_lo(l, k));
      u.thp_hi(l, k) = quad(u.qp_hi(l, k));
      u.thm_lo(l, k) = quad(u.qm_lo(l, k));
      u.thm_hi(l, k) = quad(u.qm_hi(l, k));
    }
  }
  return u;
}

namespace {

// Tighten every (link, step) pair at one step k: builds the step LP once and
// re-solves with objective +/- q_l. Results land in rows [k*n_p, (k+1)*n_p)
// of the output arrays.
void sweep_step(const NetworkGraph& net, const HeadlossCoefficients& coeffs,
                const BoundsBox& frozen, int m, int n_v, int k, const LpOptions& lp_opts,
                Array2& new_lo, Array2& new_hi, std::vector<ObbtEntry>& entries) {
  const int np = net.n_p();
  HydroStepLp step = build_hydraulic_step_lp(net, coeffs, frozen, m, k, nullptr, n_v);
  for (int l = 0; l < np; ++l) {
    ObbtEntry& e = entries[l * net.n_t + k];
    e.link = l;
    e.k = k;
    e.old_lo = frozen.q_lo(l, k);
    e.old_hi = frozen.q_hi(l, k);

    std::fill(step.lp.objective.begin(), step.lp.objective.end(), 0.0);
    step.lp.objective[step.cols.q[l]] = 1.0;  // sigma = +1: minimize q
    LpSolution smin = lp_solve(step.lp, lp_opts);
    e.status_min = smin.status;
    if (smin.status == LpStatus::infeasible) {
      throw SolveError("obbt: step " + std::to_string(k + 1) + " relaxation infeasible (link " +
                       net.links[l].id + "); the instance admits no feasible operation");
    }

    step.lp.objective[step.cols.q[l]] = -1.0;  // sigma = -1: maximize q
    LpSolution smax = lp_solve(step.lp, lp_opts);
    e.status_max = smax.status;
    if (smax.status == LpStatus::infeasible) {
      throw SolveError("obbt: step " + std::to_string(k + 1) + " relaxation infeasible (link " +
                       net.links[l].id + "); the instance admits no feasible operation");
    }

    // Clip into the old interval; a breakdown leaves the bound untouched.
    double lo = e.old_lo, hi = e.old_hi;
    if (smin.status == LpStatus::optimal) lo = std::clamp(smin.objective, e.old_lo, e.old_hi);
    if (smax.status == LpStatus::optimal) hi = std::clamp(-smax.objective, e.old_lo, e.old_hi);
    if (lo > hi) {  // numerically crossed; keep the midpoint as a point interval
      double mid = 0.5 * (lo + hi);
      lo = hi = std::clamp(mid, e.old_lo, e.old_hi);
    }
    e.new_lo = lo;
    e.new_hi = hi;
    new_lo(l, k) = lo;
    new_hi(l, k) = hi;
  }
}

}  // namespace

ObbtOutcome tighten_flow_bounds(const NetworkGraph& net, const HeadlossCoefficients& coeffs,
                                const BoundsBox& bounds, int m, int n_v,
                                const ObbtOptions& opts) {
  const int np = net.n_p(), nt = net.n_t;
  auto t0 = std::chrono::steady_clock::now();

  Array2 new_lo = bounds.q_lo, new_hi = bounds.q_hi;
  std::vector<ObbtEntry> entries(static_cast<std::size_t>(np) * nt);

  // The objective of the -1 sweep is -q, so smax.objective is -max q; the
  // sweep uses the bounds frozen at entry for every LP (batch semantics).
  if (opts.threads == 1) {
    for (int k = 0; k < nt; ++k) {
      sweep_step(net, coeffs, bounds, m, n_v, k, opts.lp, new_lo, new_hi, entries);
    }
  } else {
#ifdef _OPENMP
    std::string error_msg;
    bool failed = false;
    int requested = opts.threads > 0 ? opts.threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(requested)
    for (int k = 0; k < nt; ++k) {
      if (failed) continue;
      try {
        sweep_step(net, coeffs, bounds, m, n_v, k, opts.lp, new_lo, new_hi, entries);
      } catch (const std::exception& e) {
#pragma omp critical
        {
          failed = true;
          error_msg = e.what();
        }
      }
    }
    if (failed) throw SolveError(error_msg);
#else
    for (int k = 0; k < nt; ++k) {
      sweep_step(net, coeffs, bounds, m, n_v, k, opts.lp, new_lo, new_hi, entries);
    }
#endif
  }

  ObbtOutcome out{bounds, ObbtReport{}};
  out.bounds.set_flow_bounds(std::move(new_lo), std::move(new_hi), coeffs);
  out.report.entries = std::move(entries);
  out.report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

void write_obbt_csv(const NetworkGraph& net, const ObbtReport& report, std::ostream& os) {
  os << "link_id,time,q_min_old,q_max_old,q_min_new,q_max_new,status_min,status_max\n";
  os.precision(12);
  std::vector<int> order(net.n_p());
  for (int l = 0; l < net.n_p(); ++l) order[l] = l;
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return net.links[a].id < net.links[b].id; });
  for (int l : order) {
    for (int k = 0; k < net.n_t; ++k) {
      const ObbtEntry& e = report.entries[l * net.n_t + k];
      os << net.links[l].id << ',' << (k + 1) << ',' << e.old_lo << ',' << e.old_hi << ','
         << e.new_lo << ',' << e.new_hi << ',' << to_string(e.status_min) << ','
         << to_string(e.status_max) << "\n";
    }
  }
}

}  // namespace wdn
