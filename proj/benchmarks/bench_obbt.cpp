// Compares the serial reference sweep against the OpenMP sweep on the
// bound-tightening workload and checks they produce identical bounds.

#include <chrono>
#include <cstdio>
#include <cmath>

#include "wdn/obbt.hpp"
#include "../tests/support/fixture_gen.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace wdn;

namespace {

double run_sweep(const NetworkGraph& net, const HeadlossCoefficients& coeffs,
                 const BoundsBox& box, int threads, BoundsBox* result) {
  ObbtOptions opts;
  opts.threads = threads;
  auto t0 = std::chrono::steady_clock::now();
  ObbtOutcome out = tighten_flow_bounds(net, coeffs, box, 5, 2, opts);
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (result != nullptr) *result = out.bounds;
  return secs;
}

}  // namespace

int main(int argc, char** argv) {
  int repeats = argc > 1 ? std::atoi(argv[1]) : 3;
  NetworkGraph net = testgen::grid20(24);
  HeadlossCoefficients coeffs = fit_all_headloss(net);
  BoundsBox box = BoundsBox::from_network(net, coeffs);

  std::printf("workload: %d links x %d steps = %d LPs per sweep\n", net.n_p(), net.n_t,
              2 * net.n_p() * net.n_t);

  BoundsBox serial_box = box, parallel_box = box;
  double serial_best = 1e30, parallel_best = 1e30;
  for (int r = 0; r < repeats; ++r) {
    serial_best = std::min(serial_best, run_sweep(net, coeffs, box, 1, &serial_box));
  }
#ifdef _OPENMP
  int threads = omp_get_max_threads();
#else
  int threads = 1;
#endif
  for (int r = 0; r < repeats; ++r) {
    parallel_best = std::min(parallel_best, run_sweep(net, coeffs, box, threads, &parallel_box));
  }

  double max_diff = 0.0;
  for (std::size_t l = 0; l < serial_box.q_lo.rows(); ++l) {
    for (std::size_t k = 0; k < serial_box.q_lo.cols(); ++k) {
      max_diff = std::fmax(max_diff,
                           std::fabs(serial_box.q_lo(l, k) - parallel_box.q_lo(l, k)));
      max_diff = std::fmax(max_diff,
                           std::fabs(serial_box.q_hi(l, k) - parallel_box.q_hi(l, k)));
    }
  }

  std::printf("serial reference: %.3f s\n", serial_best);
  std::printf("openmp (%d threads): %.3f s\n", threads, parallel_best);
  std::printf("speedup: %.2fx\n", serial_best / parallel_best);
  std::printf("max bound difference: %.3g\n", max_diff);
  return max_diff == 0.0 ? 0 : 1;
}
