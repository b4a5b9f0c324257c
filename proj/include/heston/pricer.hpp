#pragma once

#include <stdexcept>
#include <string>

#include "heston/model.hpp"

namespace heston {

// Defaults are tight enough that the two routes agree to ~1e-12 on the
// probabilities for all presets, well inside the 1e-9 freeze tolerance.
struct QuadratureConfig {
  double rel_tol = 1e-12;   // adaptive refinement target per segment
  double tail_rel = 1e-14;  // stop extending the upper limit once a whole
                            // segment contributes less than this fraction
  double max_u = 2.0e6;     // hard cap for the truncation search
  int max_depth = 48;       // bisection depth limit per segment
};

struct QuadratureError : std::runtime_error {
  QuadratureError(const std::string& what, double residual);
  double residual;
};

// CirMean / LogPriceMean tag the analytic moment references used for the
// smooth test functionals.
enum class PriceMethod { CallFormula, PutParity, DigitalP2, CirMean, LogPriceMean };

std::string_view to_string(PriceMethod m);

// Semi-analytic reference value; abs_tolerance is the observed disagreement
// of the two independent quadrature routes propagated to the price.
struct ReferencePrice {
  double value;
  double abs_tolerance;
  PriceMethod method;
};

enum class QuadRoute { AdaptiveSimpson, GaussLegendrePanels };

// In-the-money probabilities P_1, P_2 of the Heston call formula,
//   P_j = 1/2 + (1/pi) \int_0^inf Re[ e^{-iu ln K} f_j(u) / (iu) ] du,
// with the branch-cut-safe characteristic function evaluation.
double heston_prob(int j, const HestonParams& params, QuadRoute route,
                   const QuadratureConfig& cfg = {});

struct ProbPair {
  double value;  // from the adaptive Simpson route
  double gap;    // |Simpson - Gauss panels|
};
ProbPair heston_prob_dual(int j, const HestonParams& params, const QuadratureConfig& cfg = {});

// Call via s0 P1 - K e^{-rT} P2, put via parity, digital via e^{-rT}(1 - P2).
ReferencePrice price_call(const HestonParams& params, const QuadratureConfig& cfg = {});
ReferencePrice price_put(const HestonParams& params, const QuadratureConfig& cfg = {});
ReferencePrice price_digital(const HestonParams& params, const QuadratureConfig& cfg = {});

double black_scholes_call(double s0, double strike, double r, double maturity, double vol);

}  // namespace heston
