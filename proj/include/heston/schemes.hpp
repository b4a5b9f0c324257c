#pragma once

#include <cmath>
#include <stdexcept>
#include <string_view>

#include "heston/model.hpp"
#include "heston/rng.hpp"

namespace heston {

// The two fixes that keep the discretized CIR variance nonnegative:
// Symmetrized reflects negative intermediate values, Absorbed clips them.
enum class SchemeKind { Symmetrized, Absorbed };

SchemeKind scheme_from_string(std::string_view s);
std::string_view to_string(SchemeKind kind);

// Pre-fix affine update over a partial step dt_partial <= dt:
//   Z = v + kappa (theta - v) dt_partial + sigma sqrt(v) dW.
inline double compute_z(double v, const HestonParams& params, double dt_partial, double dw) {
  if (!(v >= 0.0)) throw std::invalid_argument("compute_z: variance must be nonnegative");
  return v + params.kappa * (params.theta - v) * dt_partial + params.sigma * std::sqrt(v) * dw;
}

// One variance step; the result is nonnegative by construction.
inline double step_variance(SchemeKind kind, double v, const HestonParams& params, double dt,
                            double dw) {
  const double z = compute_z(v, params, dt, dw);
  return kind == SchemeKind::Symmetrized ? std::fabs(z) : std::fmax(z, 0.0);
}

// Euler step of the log-price, driven by the SAME dW as the variance step
// plus an independent dB; v is the variance at the start of the step.
inline double step_logprice(double x, double v, const HestonParams& params, double dt, double dw,
                            double db) {
  const double rho_bar = std::sqrt(1.0 - params.rho * params.rho);
  return x + (params.r - 0.5 * v) * dt + std::sqrt(v) * (params.rho * dw + rho_bar * db);
}

// Full path to maturity from x_0 = log s0, v_0 = params.v0; step k consumes
// gaussian_pair(seed, k) with dW_k = sqrt(dt) z0, dB_k = sqrt(dt) z1.
// Returns (x_N, v_N) with v_N >= 0.
Terminal simulate_terminal(SchemeKind kind, const HestonParams& params, const GridSpec& grid,
                           const SeedSpec& seed);

}  // namespace heston
