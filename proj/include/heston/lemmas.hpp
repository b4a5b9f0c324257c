#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "heston/mc.hpp"
#include "heston/model.hpp"
#include "heston/schemes.hpp"

namespace heston {

// The technical sequence behind the negativity-probability bound. With
// alpha = (1 - kappa dt)/2 it is
//   c_0 = alpha, c_1 = alpha - alpha^2, c_{j+1} = c_j^2 + alpha - alpha^2,
//   a_j = 2 (alpha - c_j) / (sigma^2 dt).
// Requires dt < 1/kappa and epsilon in (0, 1/2].
struct SequenceTrace {
  double alpha;
  std::vector<double> c;  // j = 0..N
  std::vector<double> a;  // j = 0..N
  double epsilon;
  double dt;
};

SequenceTrace build_sequence(const HestonParams& params, int n_steps, double epsilon);

// Deterministic inequalities the sequence must satisfy:
//   c_j <= 1 - alpha - eps(1-eps)/(1 + eps(j-1))    (j = 1..N)
//   c_j <= alpha                                     (j = 0..N)
//   a_j >= 0                                         (j = 0..N)
//   exp(-kappa theta dt sum_{j<=k} a_j) exp(-v0 a_{k+1}) <= c (dt/eps)^{nu(1-eps)}
struct SequenceCheck {
  double max_c_slack;      // max_j (c_j - upper bound); <= 0 when the bound holds
  double min_a;
  double max_chain_lhs;    // worst left-hand side of the chained inequality
  double plugin_bound;     // c (dt/eps)^{nu(1-eps)}
  bool c_bound_ok;
  bool c_below_alpha_ok;
  bool a_nonneg_ok;
  bool chain_ok;
  bool all_ok() const { return c_bound_ok && c_below_alpha_ok && a_nonneg_ok && chain_ok; }
};

SequenceCheck check_sequence(const HestonParams& params, int n_steps, double epsilon);

// The closed-form constant
//   c = exp(kappa (nu T + 2 v0 / sigma^2)) (max{1, sigma^2 nu/(v0 e)})^nu.
double bound_constant(const HestonParams& params);

// Plug-in bound c (dt/eps)^{nu(1-eps)} on P(Z_t <= 0) at off-grid times.
double negativity_bound(const HestonParams& params, int n_steps, double epsilon);

// The epsilon grid {0.05, 0.10, ..., 0.50} and the bound minimized over it.
std::span<const double> epsilon_grid();
double negativity_bound_min(const HestonParams& params, int n_steps);

// Monte Carlo frequency of {Z <= 0} at the mid-step times t_k + dt/2,
// k = 0..N-1, with binomial standard errors. The chain itself runs on the
// full-step increments; the mid-step evaluation draws the second Gaussian of
// the step scaled to sqrt(dt/2). Does not require dt < 1/kappa.
struct NegativityEstimate {
  std::vector<double> p_hat;
  std::vector<double> std_err;
  std::int64_t n_paths;
};

NegativityEstimate estimate_negativity(SchemeKind kind, const HestonParams& params, int n_steps,
                                       std::int64_t n_paths, std::uint64_t master_seed,
                                       const McOptions& opt = {});

}  // namespace heston
