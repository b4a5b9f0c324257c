#include "heston/mc.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "heston/reduce.hpp"
#include "heston/rng.hpp"

namespace heston {

BudgetExceeded::BudgetExceeded(const std::string& what, McEstimate partial_)
    : std::runtime_error(what), partial(partial_) {}

namespace {

bool is_power_of_two(long long n) { return n > 0 && (n & (n - 1)) == 0; }

double elapsed_seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

McEstimate moments_from_sums(double total, double total_sq, std::int64_t n,
                             std::uint64_t master_seed) {
  const double mean = total / static_cast<double>(n);
  const double ss = std::fmax(total_sq - total * total / static_cast<double>(n), 0.0);
  const double sample_var = n > 1 ? ss / static_cast<double>(n - 1) : 0.0;
  return {mean, std::sqrt(sample_var / static_cast<double>(n)), n, master_seed};
}

}  // namespace

McEstimate estimate(SchemeKind kind, const HestonParams& params, const Payoff& payoff,
                    int n_steps, std::int64_t n_paths, std::uint64_t master_seed,
                    const McOptions& opt) {
  params.validate();
  if (n_steps < 1) throw std::invalid_argument("estimate: n_steps must be >= 1");
  if (n_paths < 2) throw std::invalid_argument("estimate: need at least 2 paths");
  if (opt.max_paths > 0 && n_paths > opt.max_paths)
    throw BudgetExceeded("estimate: requested paths exceed the path budget",
                         {0.0, 0.0, 0, master_seed});

  const GridSpec grid = GridSpec::uniform(params.maturity, n_steps);
  const int threads = reduce::resolve_threads(opt.threads);
  const std::int64_t chunks = reduce::chunk_count(n_paths);

  std::vector<double> sums(chunks, 0.0);
  std::vector<double> sumsqs(chunks, 0.0);
  std::vector<unsigned char> done(chunks, 0);
  std::atomic<bool> out_of_time{false};
  const auto start = std::chrono::steady_clock::now();

  reduce::for_each_chunk(n_paths, threads, [&](std::int64_t c, std::int64_t b, std::int64_t e) {
    if (opt.max_seconds > 0.0) {
      if (out_of_time.load(std::memory_order_relaxed)) return;
      if (elapsed_seconds(start) > opt.max_seconds) {
        out_of_time.store(true, std::memory_order_relaxed);
        return;
      }
    }
    std::vector<double> vals(static_cast<std::size_t>(e - b));
    std::vector<double> sqs(static_cast<std::size_t>(e - b));
    for (std::int64_t j = b; j < e; ++j) {
      const Terminal end =
          simulate_terminal(kind, params, grid, {master_seed, static_cast<std::uint64_t>(j)});
      const double g = eval_payoff(payoff, params, end);
      vals[static_cast<std::size_t>(j - b)] = g;
      sqs[static_cast<std::size_t>(j - b)] = g * g;
    }
    sums[c] = reduce::pairwise_sum(vals);
    sumsqs[c] = reduce::pairwise_sum(sqs);
    done[c] = 1;
  });

  if (out_of_time.load()) {
    std::vector<double> part_sums, part_sqs;
    std::int64_t n_done = 0;
    for (std::int64_t c = 0; c < chunks; ++c) {
      if (!done[c]) continue;
      part_sums.push_back(sums[c]);
      part_sqs.push_back(sumsqs[c]);
      const std::int64_t b = c * reduce::kChunk;
      n_done += std::min(b + reduce::kChunk, n_paths) - b;
    }
    McEstimate partial{0.0, 0.0, n_done, master_seed};
    if (n_done > 0)
      partial = moments_from_sums(reduce::pairwise_sum(part_sums), reduce::pairwise_sum(part_sqs),
                                  n_done, master_seed);
    throw BudgetExceeded("estimate: wall-clock budget exceeded", partial);
  }

  return moments_from_sums(reduce::pairwise_sum(sums), reduce::pairwise_sum(sumsqs), n_paths,
                           master_seed);
}

double weak_error(const McEstimate& estimate, const ReferencePrice& ref) {
  return std::fabs(ref.value - estimate.mean);
}

ConvergenceStudy fit_rate(std::span<const int> grid_sizes, std::span<const double> errors) {
  if (grid_sizes.size() != errors.size())
    throw std::invalid_argument("fit_rate: grid_sizes and errors differ in length");
  if (grid_sizes.size() < 3) throw std::invalid_argument("fit_rate: need at least 3 points");
  for (std::size_t i = 1; i < grid_sizes.size(); ++i)
    if (grid_sizes[i] <= grid_sizes[i - 1])
      throw std::invalid_argument("fit_rate: grid sizes must be strictly ascending");
  for (double e : errors)
    if (!(e > 0.0))
      throw ZeroWeakError("fit_rate: zero weak error encountered; raise the sample count M");

  const std::size_t n = grid_sizes.size();
  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = std::log2(static_cast<double>(grid_sizes[i]));
    ys[i] = std::log2(errors[i]);
  }
  double mean_x = 0.0, mean_y = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mean_x += xs[i];
    mean_y += ys[i];
  }
  mean_x /= static_cast<double>(n);
  mean_y /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - mean_x) * (xs[i] - mean_x);
    sxy += (xs[i] - mean_x) * (ys[i] - mean_y);
    syy += (ys[i] - mean_y) * (ys[i] - mean_y);
  }
  const double slope = sxy / sxx;
  const double intercept = mean_y - slope * mean_x;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double resid = ys[i] - (slope * xs[i] + intercept);
    ss_res += resid * resid;
  }
  const double r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;

  ConvergenceStudy study;
  study.grid_sizes.assign(grid_sizes.begin(), grid_sizes.end());
  study.errors.assign(errors.begin(), errors.end());
  study.rate = -slope;
  study.intercept = intercept;
  study.r_squared = r_squared;
  return study;
}

ReferencePrice resolve_reference(const Payoff& payoff, const HestonParams& params,
                                 const QuadratureConfig& cfg) {
  switch (payoff.kind) {
    case PayoffKind::Call: return price_call(params, cfg);
    case PayoffKind::Put: return price_put(params, cfg);
    case PayoffKind::Digital: return price_digital(params, cfg);
    case PayoffKind::SmoothV:
      return {cir_mean(params, params.maturity), 0.0, PriceMethod::CirMean};
    case PayoffKind::SmoothX:
      return {logprice_mean(params, params.maturity), 0.0, PriceMethod::LogPriceMean};
  }
  throw std::logic_error("resolve_reference: unreachable");
}

StudyResult run_study(SchemeKind kind, const HestonParams& params, const Payoff& payoff,
                      std::span<const int> grid_sizes, std::int64_t n_paths,
                      std::uint64_t master_seed, const McOptions& opt) {
  if (grid_sizes.size() < 3)
    throw std::invalid_argument("run_study: need at least 3 grid sizes");
  for (std::size_t i = 0; i < grid_sizes.size(); ++i) {
    if (!is_power_of_two(grid_sizes[i]))
      throw std::invalid_argument("run_study: grid sizes must be powers of two");
    if (i > 0 && grid_sizes[i] <= grid_sizes[i - 1])
      throw std::invalid_argument("run_study: grid sizes must be strictly ascending");
  }
  if (params.maturity / grid_sizes.front() >= 1.0 / params.kappa)
    std::fprintf(stderr,
                 "warning: coarsest step dt = %g is not below 1/kappa = %g; "
                 "the theory starts around dt ~ 1/kappa\n",
                 params.maturity / grid_sizes.front(), 1.0 / params.kappa);

  StudyResult result;
  result.reference = resolve_reference(payoff, params, opt.quadrature);
  std::vector<double> errors;
  errors.reserve(grid_sizes.size());
  for (int n_steps : grid_sizes) {
    const std::uint64_t seed_n =
        rng::derive_seed(master_seed, static_cast<std::uint64_t>(n_steps));
    const McEstimate est = estimate(kind, params, payoff, n_steps, n_paths, seed_n, opt);
    const double err = weak_error(est, result.reference);
    errors.push_back(err);
    result.rows.push_back({n_steps, est, result.reference.value, err});
  }
  result.fit = fit_rate(grid_sizes, errors);
  return result;
}

IncrementMoments increment_second_moments(SchemeKind kind, const HestonParams& params,
                                          int n_steps, std::int64_t n_paths,
                                          std::uint64_t master_seed, const McOptions& opt) {
  params.validate();
  if (n_steps < 1) throw std::invalid_argument("increment_second_moments: n_steps must be >= 1");
  if (n_paths < 1) throw std::invalid_argument("increment_second_moments: need paths");

  const GridSpec grid = GridSpec::uniform(params.maturity, n_steps);
  const double dt = grid.dt;
  const double sqrt_dt = std::sqrt(dt);
  const double rho_bar = std::sqrt(1.0 - params.rho * params.rho);
  const int threads = reduce::resolve_threads(opt.threads);
  const std::int64_t chunks = reduce::chunk_count(n_paths);
  const std::size_t n = static_cast<std::size_t>(n_steps);

  // One row of per-step accumulators per chunk, merged pairwise per step.
  std::vector<double> sv(static_cast<std::size_t>(chunks) * n, 0.0);
  std::vector<double> sx(static_cast<std::size_t>(chunks) * n, 0.0);

  reduce::for_each_chunk(n_paths, threads, [&](std::int64_t c, std::int64_t b, std::int64_t e) {
    double* row_v = sv.data() + static_cast<std::size_t>(c) * n;
    double* row_x = sx.data() + static_cast<std::size_t>(c) * n;
    for (std::int64_t j = b; j < e; ++j) {
      const SeedSpec seed{master_seed, static_cast<std::uint64_t>(j)};
      double x = std::log(params.s0);
      double v = params.v0;
      for (int k = 0; k < n_steps; ++k) {
        const auto [z0, z1] = gaussian_pair(seed, static_cast<std::uint64_t>(k));
        const double dw = sqrt_dt * z0;
        const double db = sqrt_dt * z1;
        const double sqrt_v = std::sqrt(v);
        const double x_next = x + (params.r - 0.5 * v) * dt + sqrt_v * (params.rho * dw + rho_bar * db);
        const double z = v + params.kappa * (params.theta - v) * dt + params.sigma * sqrt_v * dw;
        const double v_next = kind == SchemeKind::Symmetrized ? std::fabs(z) : std::fmax(z, 0.0);
        row_v[k] += (v_next - v) * (v_next - v);
        row_x[k] += (x_next - x) * (x_next - x);
        x = x_next;
        v = v_next;
      }
    }
  });

  IncrementMoments out;
  out.variance_sq.resize(n);
  out.logprice_sq.resize(n);
  std::vector<double> column(static_cast<std::size_t>(chunks));
  for (std::size_t k = 0; k < n; ++k) {
    for (std::int64_t c = 0; c < chunks; ++c)
      column[static_cast<std::size_t>(c)] = sv[static_cast<std::size_t>(c) * n + k];
    out.variance_sq[k] = reduce::pairwise_sum(column) / static_cast<double>(n_paths);
    for (std::int64_t c = 0; c < chunks; ++c)
      column[static_cast<std::size_t>(c)] = sx[static_cast<std::size_t>(c) * n + k];
    out.logprice_sq[k] = reduce::pairwise_sum(column) / static_cast<double>(n_paths);
  }
  return out;
}

double max_fourth_moment(SchemeKind kind, const HestonParams& params, int n_steps,
                         std::int64_t n_paths, std::uint64_t master_seed, const McOptions& opt) {
  params.validate();
  const GridSpec grid = GridSpec::uniform(params.maturity, n_steps);
  const double dt = grid.dt;
  const double sqrt_dt = std::sqrt(dt);
  const int threads = reduce::resolve_threads(opt.threads);
  const std::int64_t chunks = reduce::chunk_count(n_paths);
  const std::size_t n = static_cast<std::size_t>(n_steps);

  std::vector<double> acc(static_cast<std::size_t>(chunks) * n, 0.0);
  reduce::for_each_chunk(n_paths, threads, [&](std::int64_t c, std::int64_t b, std::int64_t e) {
    double* row = acc.data() + static_cast<std::size_t>(c) * n;
    for (std::int64_t j = b; j < e; ++j) {
      const SeedSpec seed{master_seed, static_cast<std::uint64_t>(j)};
      double v = params.v0;
      for (int k = 0; k < n_steps; ++k) {
        const auto [z0, z1] = gaussian_pair(seed, static_cast<std::uint64_t>(k));
        (void)z1;
        v = step_variance(kind, v, params, dt, sqrt_dt * z0);
        row[k] += v * v * v * v;
      }
    }
  });

  double worst = params.v0 * params.v0 * params.v0 * params.v0;  // k = 0
  std::vector<double> column(static_cast<std::size_t>(chunks));
  for (std::size_t k = 0; k < n; ++k) {
    for (std::int64_t c = 0; c < chunks; ++c)
      column[static_cast<std::size_t>(c)] = acc[static_cast<std::size_t>(c) * n + k];
    worst = std::fmax(worst, reduce::pairwise_sum(column) / static_cast<double>(n_paths));
  }
  return worst;
}

}  // namespace heston
