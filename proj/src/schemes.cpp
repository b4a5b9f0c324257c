#include "heston/schemes.hpp"

#include <cassert>
#include <cmath>

namespace heston {

SchemeKind scheme_from_string(std::string_view s) {
  if (s == "sym") return SchemeKind::Symmetrized;
  if (s == "abs") return SchemeKind::Absorbed;
  throw std::invalid_argument("unknown scheme '" + std::string(s) + "' (valid: sym abs)");
}

std::string_view to_string(SchemeKind kind) {
  return kind == SchemeKind::Symmetrized ? "sym" : "abs";
}

Terminal simulate_terminal(SchemeKind kind, const HestonParams& params, const GridSpec& grid,
                           const SeedSpec& seed) {
  const double dt = grid.dt;
  const double sqrt_dt = std::sqrt(dt);
  const double rho_bar = std::sqrt(1.0 - params.rho * params.rho);

  double x = std::log(params.s0);
  double v = params.v0;
  for (int k = 0; k < grid.n_steps; ++k) {
    const auto [z0, z1] = gaussian_pair(seed, static_cast<std::uint64_t>(k));
    const double dw = sqrt_dt * z0;
    const double db = sqrt_dt * z1;
    // Same operations as step_logprice / step_variance, with sqrt(v) shared;
    // both updates read the pre-step variance v_k.
    const double sqrt_v = std::sqrt(v);
    x = x + (params.r - 0.5 * v) * dt + sqrt_v * (params.rho * dw + rho_bar * db);
    const double z = v + params.kappa * (params.theta - v) * dt + params.sigma * sqrt_v * dw;
    v = kind == SchemeKind::Symmetrized ? std::fabs(z) : std::fmax(z, 0.0);
    assert(v >= 0.0);
  }
  return {x, v};
}

}  // namespace heston
