#include "heston/lemmas.hpp"

#include <array>
#include <cmath>
#include <limits>

#include "heston/reduce.hpp"
#include "heston/rng.hpp"

namespace heston {

namespace {

void require_lemma_domain(const HestonParams& params, int n_steps, double epsilon) {
  params.validate();
  if (n_steps < 1) throw std::invalid_argument("lemma checks: n_steps must be >= 1");
  const double dt = params.maturity / n_steps;
  if (!(dt < 1.0 / params.kappa))
    throw std::invalid_argument("lemma checks: require dt < 1/kappa (choose a larger N)");
  if (!(epsilon > 0.0 && epsilon <= 0.5))
    throw std::invalid_argument("lemma checks: epsilon must lie in (0, 1/2]");
}

// c_j extended one index past N; the chained inequality at k = N reads a_{N+1}.
std::vector<double> c_sequence(double alpha, int length) {
  std::vector<double> c(static_cast<std::size_t>(length));
  c[0] = alpha;
  if (length > 1) c[1] = alpha - alpha * alpha;
  for (int j = 1; j + 1 < length; ++j) c[j + 1] = c[j] * c[j] + alpha - alpha * alpha;
  return c;
}

}  // namespace

SequenceTrace build_sequence(const HestonParams& params, int n_steps, double epsilon) {
  require_lemma_domain(params, n_steps, epsilon);
  const double dt = params.maturity / n_steps;
  const double alpha = 0.5 * (1.0 - params.kappa * dt);

  SequenceTrace trace;
  trace.alpha = alpha;
  trace.epsilon = epsilon;
  trace.dt = dt;
  trace.c = c_sequence(alpha, n_steps + 1);
  trace.a.resize(trace.c.size());
  const double scale = 2.0 / (params.sigma * params.sigma * dt);
  for (std::size_t j = 0; j < trace.c.size(); ++j) trace.a[j] = scale * (alpha - trace.c[j]);
  return trace;
}

SequenceCheck check_sequence(const HestonParams& params, int n_steps, double epsilon) {
  require_lemma_domain(params, n_steps, epsilon);
  const double dt = params.maturity / n_steps;
  const double alpha = 0.5 * (1.0 - params.kappa * dt);
  const std::vector<double> c = c_sequence(alpha, n_steps + 2);
  const double a_scale = 2.0 / (params.sigma * params.sigma * dt);

  SequenceCheck out{};
  out.plugin_bound = negativity_bound(params, n_steps, epsilon);
  out.max_c_slack = -std::numeric_limits<double>::infinity();
  out.min_a = std::numeric_limits<double>::infinity();
  out.c_bound_ok = out.c_below_alpha_ok = out.a_nonneg_ok = out.chain_ok = true;

  for (int j = 0; j <= n_steps; ++j) {
    const double cj = c[static_cast<std::size_t>(j)];
    if (j >= 1) {
      const double upper = 1.0 - alpha - epsilon * (1.0 - epsilon) / (1.0 + epsilon * (j - 1));
      out.max_c_slack = std::fmax(out.max_c_slack, cj - upper);
      if (cj > upper) out.c_bound_ok = false;
    }
    if (cj > alpha) out.c_below_alpha_ok = false;
    const double aj = a_scale * (alpha - cj);
    out.min_a = std::fmin(out.min_a, aj);
    if (aj < 0.0) out.a_nonneg_ok = false;
  }

  // exp(-kappa theta dt sum_{j=1..k} a_j) exp(-v0 a_{k+1}) <= plugin bound.
  out.max_chain_lhs = 0.0;
  double a_sum = 0.0;
  for (int k = 1; k <= n_steps; ++k) {
    a_sum += a_scale * (alpha - c[static_cast<std::size_t>(k)]);
    const double a_next = a_scale * (alpha - c[static_cast<std::size_t>(k + 1)]);
    const double lhs =
        std::exp(-params.kappa * params.theta * dt * a_sum) * std::exp(-params.v0 * a_next);
    out.max_chain_lhs = std::fmax(out.max_chain_lhs, lhs);
    if (lhs > out.plugin_bound) out.chain_ok = false;
  }
  return out;
}

double bound_constant(const HestonParams& params) {
  params.validate();
  const double nu = params.feller();
  const double sig2 = params.sigma * params.sigma;
  const double factor = std::fmax(1.0, sig2 * nu / (params.v0 * std::exp(1.0)));
  return std::exp(params.kappa * (nu * params.maturity + 2.0 * params.v0 / sig2)) *
         std::pow(factor, nu);
}

double negativity_bound(const HestonParams& params, int n_steps, double epsilon) {
  require_lemma_domain(params, n_steps, epsilon);
  const double dt = params.maturity / n_steps;
  const double nu = params.feller();
  return bound_constant(params) * std::pow(dt / epsilon, nu * (1.0 - epsilon));
}

std::span<const double> epsilon_grid() {
  static const std::array<double, 10> grid = {0.05, 0.10, 0.15, 0.20, 0.25,
                                              0.30, 0.35, 0.40, 0.45, 0.50};
  return grid;
}

double negativity_bound_min(const HestonParams& params, int n_steps) {
  double best = std::numeric_limits<double>::infinity();
  for (double eps : epsilon_grid()) best = std::fmin(best, negativity_bound(params, n_steps, eps));
  return best;
}

NegativityEstimate estimate_negativity(SchemeKind kind, const HestonParams& params, int n_steps,
                                       std::int64_t n_paths, std::uint64_t master_seed,
                                       const McOptions& opt) {
  params.validate();
  if (n_steps < 1) throw std::invalid_argument("estimate_negativity: n_steps must be >= 1");
  if (n_paths < 1) throw std::invalid_argument("estimate_negativity: need paths");

  const GridSpec grid = GridSpec::uniform(params.maturity, n_steps);
  const double dt = grid.dt;
  const double sqrt_dt = std::sqrt(dt);
  const double sqrt_half_dt = std::sqrt(0.5 * dt);
  const int threads = reduce::resolve_threads(opt.threads);
  const std::int64_t chunks = reduce::chunk_count(n_paths);
  const std::size_t n = static_cast<std::size_t>(n_steps);

  // Integer hit counts; the cross-chunk merge is an exact sum, so the result
  // is thread-count invariant without any reduction-order bookkeeping.
  std::vector<std::int64_t> counts(static_cast<std::size_t>(chunks) * n, 0);
  reduce::for_each_chunk(n_paths, threads, [&](std::int64_t c, std::int64_t b, std::int64_t e) {
    std::int64_t* row = counts.data() + static_cast<std::size_t>(c) * n;
    for (std::int64_t j = b; j < e; ++j) {
      const SeedSpec seed{master_seed, static_cast<std::uint64_t>(j)};
      double v = params.v0;
      for (int k = 0; k < n_steps; ++k) {
        const auto [z0, z1] = gaussian_pair(seed, static_cast<std::uint64_t>(k));
        // Mid-step evaluation at t_k + dt/2: an extra Brownian increment over
        // half a step, independent of the chain's own full-step increment.
        const double z_mid = compute_z(v, params, 0.5 * dt, sqrt_half_dt * z1);
        if (z_mid <= 0.0) ++row[k];
        v = step_variance(kind, v, params, dt, sqrt_dt * z0);
      }
    }
  });

  NegativityEstimate out;
  out.n_paths = n_paths;
  out.p_hat.resize(n);
  out.std_err.resize(n);
  const double m = static_cast<double>(n_paths);
  for (std::size_t k = 0; k < n; ++k) {
    std::int64_t hits = 0;
    for (std::int64_t c = 0; c < chunks; ++c) hits += counts[static_cast<std::size_t>(c) * n + k];
    const double p = static_cast<double>(hits) / m;
    out.p_hat[k] = p;
    out.std_err[k] = std::sqrt(p * (1.0 - p) / m);
  }
  return out;
}

}  // namespace heston
