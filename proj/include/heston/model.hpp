#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace heston {

// Parameters of the log-Heston model under the risk-neutral drift r, plus the
// strike of the payoff under study. Immutable value type; validate() enforces
// the domain constraints once, everything downstream assumes them.
struct HestonParams {
  double s0;        // initial asset price, > 0
  double v0;        // initial variance, > 0
  double kappa;     // mean-reversion speed, > 0
  double theta;     // long-run variance, > 0
  double sigma;     // vol-of-vol, > 0
  double rho;       // correlation in [-1, 1]
  double r;         // risk-free drift
  double maturity;  // T > 0
  double strike;    // K > 0

  // Feller index 2*kappa*theta/sigma^2 of the CIR variance process.
  double feller() const { return 2.0 * kappa * theta / (sigma * sigma); }

  void validate() const;  // throws std::invalid_argument
};

// The four built-in parameter sets ("model1" .. "model4").
HestonParams model_preset(std::string_view name);
const std::vector<std::string>& model_preset_names();

// Equidistant time grid t_k = k*dt, k = 0..n_steps, with t_N == maturity.
struct GridSpec {
  int n_steps;
  double dt;
  double maturity;

  static GridSpec uniform(double maturity, int n_steps);

  double time_at(int k) const;

  // n(t) = max{k : t_k <= t} and eta(t) = t_{n(t)} for t in [0, maturity].
  int floor_index(double t) const;
  double floor_time(double t) const { return time_at(floor_index(t)); }
};

enum class PayoffKind { Call, Put, Digital, SmoothV, SmoothX };

PayoffKind payoff_kind_from_string(std::string_view s);
std::string_view to_string(PayoffKind kind);

struct Payoff {
  PayoffKind kind;
};

// Terminal state (x_N, v_N) of one simulated path.
struct Terminal {
  double log_price;
  double variance;
};

// Discounted payoff at the terminal state:
//   Call     e^{-rT} max(S_T - K, 0)
//   Put      e^{-rT} max(K - S_T, 0)
//   Digital  e^{-rT} 1[S_T <= K]
// with S_T = exp(log_price). SmoothV / SmoothX return the raw coordinate
// v_N / x_N without discounting (test functionals for the moment oracles).
// Throws std::invalid_argument on a non-finite state.
double eval_payoff(const Payoff& payoff, const HestonParams& params, const Terminal& end);

// Exact CIR mean E[V_t] = theta + (v0 - theta) e^{-kappa t}.
double cir_mean(const HestonParams& params, double t);

// Exact log-price mean
//   E[X_t] = log s0 + r t - (theta t + (v0 - theta)(1 - e^{-kappa t})/kappa)/2.
double logprice_mean(const HestonParams& params, double t);

}  // namespace heston
