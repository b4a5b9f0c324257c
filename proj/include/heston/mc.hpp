#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "heston/model.hpp"
#include "heston/pricer.hpp"
#include "heston/schemes.hpp"

namespace heston {

struct McEstimate {
  double mean;
  double std_error;  // sample std / sqrt(n)
  std::int64_t n_samples;
  std::uint64_t master_seed;
};

struct McOptions {
  int threads = 0;             // <= 0: all hardware threads, 1: serial reference
  double max_seconds = 0.0;    // > 0: wall-clock budget
  std::int64_t max_paths = 0;  // > 0: path budget
  QuadratureConfig quadrature;
};

// Raised when a resource budget cuts an estimation short; carries the partial
// result over the chunks that did complete.
struct BudgetExceeded : std::runtime_error {
  BudgetExceeded(const std::string& what, McEstimate partial);
  McEstimate partial;
};

// Raised by fit_rate when some e(N) is exactly zero (log2 undefined); the
// remedy is a larger sample count.
struct ZeroWeakError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Mean discounted payoff over n_paths independent terminal simulations.
// Path j consumes stream_id = j of master_seed; the accumulation is pairwise
// over fixed chunks, so the result is bit-identical for any thread count.
McEstimate estimate(SchemeKind kind, const HestonParams& params, const Payoff& payoff,
                    int n_steps, std::int64_t n_paths, std::uint64_t master_seed,
                    const McOptions& opt = {});

// e(N) = |p_ref - p_{M,N}|.
double weak_error(const McEstimate& estimate, const ReferencePrice& ref);

struct ConvergenceStudy {
  std::vector<int> grid_sizes;
  std::vector<double> errors;
  double rate;       // positive convergence order, = -slope of log2 e vs log2 N
  double intercept;
  double r_squared;
};

// Ordinary least squares of log2 e(N) against log2 N. Throws
// std::invalid_argument on fewer than 3 points or any e(N) == 0 (raise the
// sample count in that case).
ConvergenceStudy fit_rate(std::span<const int> grid_sizes, std::span<const double> errors);

// Reference value for a payoff: semi-analytic price for call/put/digital,
// analytic moments for the smooth functionals.
ReferencePrice resolve_reference(const Payoff& payoff, const HestonParams& params,
                                 const QuadratureConfig& cfg = {});

struct StudyRow {
  int n_steps;
  McEstimate estimate;
  double reference;
  double abs_error;
};

struct StudyResult {
  ConvergenceStudy fit;
  std::vector<StudyRow> rows;
  ReferencePrice reference;
};

// Full weak-convergence study: one reference evaluation, one estimate per
// grid size (with an independent master seed derived per N), then the rate
// fit. grid_sizes must be ascending powers of two.
StudyResult run_study(SchemeKind kind, const HestonParams& params, const Payoff& payoff,
                      std::span<const int> grid_sizes, std::int64_t n_paths,
                      std::uint64_t master_seed, const McOptions& opt = {});

// Per-step second moments E|v_{k+1}-v_k|^2 and E|x_{k+1}-x_k|^2, for the
// increment scaling-law checks.
struct IncrementMoments {
  std::vector<double> variance_sq;
  std::vector<double> logprice_sq;
};
IncrementMoments increment_second_moments(SchemeKind kind, const HestonParams& params,
                                          int n_steps, std::int64_t n_paths,
                                          std::uint64_t master_seed, const McOptions& opt = {});

// max over k = 0..N of E[v_k^4], for the moment stability check.
double max_fourth_moment(SchemeKind kind, const HestonParams& params, int n_steps,
                         std::int64_t n_paths, std::uint64_t master_seed,
                         const McOptions& opt = {});

}  // namespace heston
