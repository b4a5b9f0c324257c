#include <doctest.h>

#include <cmath>
#include <limits>

#include "heston/mc.hpp"
#include "heston/model.hpp"
#include "heston/rng.hpp"
#include "heston/schemes.hpp"

using namespace heston;

namespace {

// Uniform draw in [lo, hi] from a mixed counter, for hand-rolled property tests.
double draw(std::uint64_t& state, double lo, double hi) {
  state = rng::mix64(state);
  return lo + (hi - lo) * rng::to_unit_open(state);
}

HestonParams random_params(std::uint64_t& state) {
  HestonParams p;
  p.s0 = draw(state, 10.0, 200.0);
  p.v0 = draw(state, 1e-4, 0.5);
  p.kappa = draw(state, 0.5, 8.0);
  p.theta = draw(state, 0.005, 0.5);
  p.sigma = draw(state, 0.05, 1.5);
  p.rho = draw(state, -0.95, 0.95);
  p.r = draw(state, -0.05, 0.1);
  p.maturity = draw(state, 0.25, 5.0);
  p.strike = draw(state, 50.0, 150.0);
  return p;
}

}  // namespace

TEST_CASE("compute_z") {
  HestonParams p = model_preset("model1");

  SUBCASE("drift vanishes at the mean") {
    CHECK(compute_z(p.theta, p, 0.1, 0.0) == p.theta);
  }

  SUBCASE("diffusion term vanishes at v = 0") {
    CHECK(compute_z(0.0, p, 0.05, 123.0) == p.kappa * p.theta * 0.05);
  }

  SUBCASE("hand-evaluated affine update") {
    // v=0.01, kappa=1, theta=0, sigma=1, dt=0.1, dW=-0.2 -> -0.011
    HestonParams q = p;
    q.kappa = 1.0;
    q.theta = 0.0;
    q.sigma = 1.0;
    const double z = compute_z(0.01, q, 0.1, -0.2);
    CHECK(z == doctest::Approx(-0.011).epsilon(1e-12));
  }

  SUBCASE("negative variance is rejected") {
    CHECK_THROWS_AS(compute_z(-1e-9, p, 0.1, 0.0), std::invalid_argument);
  }
}

TEST_CASE("step_variance applies the scheme fix") {
  HestonParams q = model_preset("model1");
  q.kappa = 1.0;
  q.theta = 0.0;
  q.sigma = 1.0;

  SUBCASE("negative update: reflect vs absorb") {
    const double z = compute_z(0.01, q, 0.1, -0.2);
    REQUIRE(z == doctest::Approx(-0.011).epsilon(1e-12));
    CHECK(step_variance(SchemeKind::Symmetrized, 0.01, q, 0.1, -0.2) == std::fabs(z));
    CHECK(step_variance(SchemeKind::Absorbed, 0.01, q, 0.1, -0.2) == 0.0);
  }

  SUBCASE("nonnegative updates are untouched by both fixes") {
    std::uint64_t state = 5;
    for (int i = 0; i < 500; ++i) {
      const HestonParams p = random_params(state);
      const double v = draw(state, 0.0, 0.5);
      const double dt = draw(state, 1e-3, 0.5);
      const double dw = draw(state, -0.3, 0.3);
      const double z = compute_z(v, p, dt, dw);
      if (z < 0.0) continue;
      CHECK(step_variance(SchemeKind::Symmetrized, v, p, dt, dw) == z);
      CHECK(step_variance(SchemeKind::Absorbed, v, p, dt, dw) == z);
    }
  }

  SUBCASE("theta is a fixed point of the drift for both variants") {
    const HestonParams p = model_preset("model2");
    CHECK(step_variance(SchemeKind::Symmetrized, p.theta, p, 0.25, 0.0) == p.theta);
    CHECK(step_variance(SchemeKind::Absorbed, p.theta, p, 0.25, 0.0) == p.theta);
  }
}

TEST_CASE("step_logprice") {
  HestonParams p = model_preset("model1");

  SUBCASE("zero variance leaves only the deterministic drift") {
    CHECK(step_logprice(1.5, 0.0, p, 0.25, 0.4, -0.2) == 1.5 + p.r * 0.25);
  }

  SUBCASE("at rho = +-1 the second Brownian motion drops out") {
    for (double rho : {-1.0, 1.0}) {
      HestonParams q = p;
      q.rho = rho;
      const double a = step_logprice(0.0, 0.04, q, 0.25, 0.1, 5.0);
      const double b = step_logprice(0.0, 0.04, q, 0.25, 0.1, -5.0);
      CHECK(a == b);
    }
  }

  SUBCASE("hand-evaluated step") {
    // x=0, r=0, v=0.04, dt=0.25, dW=0.1, dB=0.1, rho=-0.7:
    // -0.005 + 0.2*(-0.07 + 0.1*sqrt(0.51)) = -0.00471714...
    HestonParams q = p;
    q.r = 0.0;
    CHECK(step_logprice(0.0, 0.04, q, 0.25, 0.1, 0.1) ==
          doctest::Approx(-0.0047171431429143).epsilon(1e-12));
    CHECK(step_logprice(0.0, 0.04, q, 0.25, 0.1, -0.1) ==
          doctest::Approx(-0.0332828568570857).epsilon(1e-12));
  }
}

TEST_CASE("one deterministic step from the stationary start") {
  // with v0 = theta and zero increments: x_1 = log s0 + (r - theta/2) T, v_1 = theta
  HestonParams p = model_preset("model1");
  p.v0 = p.theta;
  const double dt = p.maturity;
  const double x1 = step_logprice(std::log(p.s0), p.v0, p, dt, 0.0, 0.0);
  CHECK(x1 == doctest::Approx(std::log(p.s0) + (p.r - 0.5 * p.theta) * p.maturity).epsilon(1e-14));
  CHECK(step_variance(SchemeKind::Symmetrized, p.v0, p, dt, 0.0) == p.theta);
}

TEST_CASE("simulate_terminal equals the composed per-step operations") {
  const HestonParams p = model_preset("model3");
  const GridSpec grid = GridSpec::uniform(p.maturity, 16);
  const double sqrt_dt = std::sqrt(grid.dt);
  for (std::uint64_t stream : {0ull, 5ull, 11ull}) {
    const SeedSpec seed{99, stream};
    double x = std::log(p.s0);
    double v = p.v0;
    for (int k = 0; k < grid.n_steps; ++k) {
      const GaussianPair g = gaussian_pair(seed, static_cast<std::uint64_t>(k));
      const double dw = sqrt_dt * g.z0;
      const double db = sqrt_dt * g.z1;
      const double x_next = step_logprice(x, v, p, grid.dt, dw, db);
      v = step_variance(SchemeKind::Absorbed, v, p, grid.dt, dw);
      x = x_next;
    }
    const Terminal end = simulate_terminal(SchemeKind::Absorbed, p, grid, seed);
    CHECK(end.log_price == x);
    CHECK(end.variance == v);
  }
}

TEST_CASE("golden terminal states, model 1, seed 42, N = 8") {
  // Frozen from an independent re-simulation (separate transcription of the
  // counter generator, the quantile function and the recursions).
  const HestonParams p = model_preset("model1");
  const GridSpec grid = GridSpec::uniform(p.maturity, 8);

  const Terminal s0 = simulate_terminal(SchemeKind::Symmetrized, p, grid, {42, 0});
  CHECK(s0.log_price == doctest::Approx(4.739585313286076).epsilon(1e-13));
  CHECK(s0.variance == doctest::Approx(0.03392317607921492).epsilon(1e-13));
  const Terminal s1 = simulate_terminal(SchemeKind::Symmetrized, p, grid, {42, 1});
  CHECK(s1.log_price == doctest::Approx(4.324823513198492).epsilon(1e-13));
  CHECK(s1.variance == doctest::Approx(0.1858237907199019).epsilon(1e-13));

  const Terminal a0 = simulate_terminal(SchemeKind::Absorbed, p, grid, {42, 0});
  CHECK(a0.log_price == doctest::Approx(4.74503137095429).epsilon(1e-13));
  CHECK(a0.variance == doctest::Approx(0.03548463139776439).epsilon(1e-13));
  const Terminal a1 = simulate_terminal(SchemeKind::Absorbed, p, grid, {42, 1});
  CHECK(a1.log_price == doctest::Approx(4.3105760217954225).epsilon(1e-13));
  CHECK(a1.variance == doctest::Approx(0.18470955767009803).epsilon(1e-13));

  // stream 7 never dips below zero, so the two schemes coincide exactly
  const Terminal s7 = simulate_terminal(SchemeKind::Symmetrized, p, grid, {42, 7});
  const Terminal a7 = simulate_terminal(SchemeKind::Absorbed, p, grid, {42, 7});
  CHECK(s7.log_price == a7.log_price);
  CHECK(s7.variance == a7.variance);
  CHECK(s7.variance == doctest::Approx(0.04875068905395802).epsilon(1e-13));
}

TEST_CASE("variance stays nonnegative for random parameters, seeds and schemes") {
  std::uint64_t state = 1234;
  for (int trial = 0; trial < 200; ++trial) {
    const HestonParams p = random_params(state);
    state = rng::mix64(state);
    const int n_steps = 1 + static_cast<int>(state % 64);
    const GridSpec grid = GridSpec::uniform(p.maturity, n_steps);
    const double sqrt_dt = std::sqrt(grid.dt);
    for (SchemeKind kind : {SchemeKind::Symmetrized, SchemeKind::Absorbed}) {
      const SeedSpec seed{state, static_cast<std::uint64_t>(trial)};
      double v = p.v0;
      for (int k = 0; k < n_steps; ++k) {
        v = step_variance(kind, v, p, grid.dt, sqrt_dt * gaussian_pair(seed, k).z0);
        REQUIRE(v >= 0.0);
      }
      const Terminal end = simulate_terminal(kind, p, grid, seed);
      REQUIRE(end.variance >= 0.0);
      REQUIRE(std::isfinite(end.log_price));
    }
  }
}

TEST_CASE("increment scaling law E|dv|^2 ~ dt (and the log-price analogue)") {
  const HestonParams p = model_preset("model1");
  McOptions opt;
  opt.threads = 2;
  const std::vector<int> grid = {16, 32, 64, 128, 256, 512};
  for (SchemeKind kind : {SchemeKind::Symmetrized, SchemeKind::Absorbed}) {
    std::vector<double> worst_v, worst_x;
    for (int n : grid) {
      const IncrementMoments m = increment_second_moments(kind, p, n, 50000, 17, opt);
      double mv = 0.0, mx = 0.0;
      for (double v : m.variance_sq) mv = std::fmax(mv, v);
      for (double v : m.logprice_sq) mx = std::fmax(mx, v);
      worst_v.push_back(mv);
      worst_x.push_back(mx);
    }
    // rate from fit_rate is the slope against log dt (dt = T/N, T fixed)
    const double slope_v = fit_rate(grid, worst_v).rate;
    const double slope_x = fit_rate(grid, worst_x).rate;
    CHECK(slope_v >= 0.9);
    CHECK(slope_v <= 1.5);
    CHECK(slope_x >= 0.9);
    CHECK(slope_x <= 1.5);
  }
}

TEST_CASE("moment stability: max_k E[v_k^4] is flat across grids") {
  const HestonParams p = model_preset("model1");
  McOptions opt;
  opt.threads = 2;
  for (SchemeKind kind : {SchemeKind::Symmetrized, SchemeKind::Absorbed}) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (int n = 8; n <= 512; n *= 2) {
      const double m4 = max_fourth_moment(kind, p, n, 50000, 23, opt);
      lo = std::fmin(lo, m4);
      hi = std::fmax(hi, m4);
    }
    CHECK(hi < 2.0 * lo);
  }
}
