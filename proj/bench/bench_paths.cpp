// Compares the serial reference kernel against the OpenMP kernel on the hot
// path (terminal simulation + payoff accumulation) and checks that the two
// produce bit-identical estimates.

#include <chrono>
#include <cstdio>
#include <cstdlib>

#include "heston/mc.hpp"
#include "heston/model.hpp"
#include "heston/reduce.hpp"

using namespace heston;

namespace {

double run_once(int threads, int n_steps, std::int64_t n_paths, McEstimate& out) {
  const HestonParams p = model_preset("model1");
  McOptions opt;
  opt.threads = threads;
  const auto t0 = std::chrono::steady_clock::now();
  out = estimate(SchemeKind::Symmetrized, p, {PayoffKind::Call}, n_steps, n_paths, 42, opt);
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  const std::int64_t n_paths = argc > 1 ? std::atoll(argv[1]) : 500000;
  const int n_steps = argc > 2 ? std::atoi(argv[2]) : 64;
  const int threads = reduce::resolve_threads(0);

  std::printf("terminal simulation, model1/sym/call, M=%lld, N=%d\n",
              static_cast<long long>(n_paths), n_steps);
  std::printf("%-22s %10s %14s %10s\n", "kernel", "time (s)", "paths/s", "speedup");

  McEstimate serial_est{}, parallel_est{};
  const double serial_s = run_once(1, n_steps, n_paths, serial_est);
  std::printf("%-22s %10.3f %14.0f %10s\n", "serial reference", serial_s,
              n_paths / serial_s, "1.00x");

  const double parallel_s = run_once(threads, n_steps, n_paths, parallel_est);
  char speedup[32];
  std::snprintf(speedup, sizeof(speedup), "%.2fx", serial_s / parallel_s);
  char label[32];
  std::snprintf(label, sizeof(label), "openmp (%d threads)", threads);
  std::printf("%-22s %10.3f %14.0f %10s\n", label, parallel_s, n_paths / parallel_s, speedup);

  const bool identical = serial_est.mean == parallel_est.mean &&
                         serial_est.std_error == parallel_est.std_error;
  std::printf("bit-identical results: %s (mean %.17g)\n", identical ? "yes" : "NO",
              serial_est.mean);
  return identical ? 0 : 1;
}
