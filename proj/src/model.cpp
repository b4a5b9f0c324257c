#include "heston/model.hpp"

#include <cmath>
#include <stdexcept>

namespace heston {

void HestonParams::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("HestonParams: ") + what);
  };
  require(std::isfinite(s0) && s0 > 0.0, "s0 must be finite and > 0");
  require(std::isfinite(v0) && v0 > 0.0, "v0 must be finite and > 0");
  require(std::isfinite(kappa) && kappa > 0.0, "kappa must be finite and > 0");
  require(std::isfinite(theta) && theta > 0.0, "theta must be finite and > 0");
  require(std::isfinite(sigma) && sigma > 0.0, "sigma must be finite and > 0");
  require(std::isfinite(rho) && rho >= -1.0 && rho <= 1.0, "rho must lie in [-1, 1]");
  require(std::isfinite(r), "r must be finite");
  require(std::isfinite(maturity) && maturity > 0.0, "maturity must be finite and > 0");
  require(std::isfinite(strike) && strike > 0.0, "strike must be finite and > 0");
  require(std::isfinite(feller()) && feller() > 0.0, "Feller index must be finite and > 0");
}

HestonParams model_preset(std::string_view name) {
  if (name == "model1")
    return {100.0, 0.04, 5.0, 0.04, 0.61, -0.7, 0.0319, 1.0, 100.0};
  if (name == "model2")
    return {100.0, 0.0457, 5.07, 0.0457, 0.48, -0.767, 0.0, 2.0, 100.0};
  if (name == "model3")
    return {100.0, 0.010201, 6.21, 0.019, 0.61, -0.7, 0.0319, 1.0, 100.0};
  if (name == "model4")
    return {100.0, 0.09, 2.0, 0.09, 1.0, -0.3, 0.05, 5.0, 100.0};
  throw std::invalid_argument("unknown model preset '" + std::string(name) +
                              "' (valid: model1 model2 model3 model4)");
}

const std::vector<std::string>& model_preset_names() {
  static const std::vector<std::string> names = {"model1", "model2", "model3", "model4"};
  return names;
}

GridSpec GridSpec::uniform(double maturity, int n_steps) {
  if (!(maturity > 0.0)) throw std::invalid_argument("GridSpec: maturity must be > 0");
  if (n_steps < 1) throw std::invalid_argument("GridSpec: n_steps must be >= 1");
  return {n_steps, maturity / n_steps, maturity};
}

double GridSpec::time_at(int k) const {
  // t_N is pinned to the maturity so the grid ends exactly at T.
  return k == n_steps ? maturity : k * dt;
}

int GridSpec::floor_index(double t) const {
  if (!(t >= 0.0 && t <= maturity)) throw std::invalid_argument("GridSpec: t outside [0, T]");
  int k = static_cast<int>(t / dt);
  if (k > n_steps) k = n_steps;
  while (k + 1 <= n_steps && time_at(k + 1) <= t) ++k;
  while (k > 0 && time_at(k) > t) --k;
  return k;
}

PayoffKind payoff_kind_from_string(std::string_view s) {
  if (s == "call") return PayoffKind::Call;
  if (s == "put") return PayoffKind::Put;
  if (s == "digital") return PayoffKind::Digital;
  if (s == "smooth_v") return PayoffKind::SmoothV;
  if (s == "smooth_x") return PayoffKind::SmoothX;
  throw std::invalid_argument("unknown payoff '" + std::string(s) +
                              "' (valid: call put digital smooth_v smooth_x)");
}

std::string_view to_string(PayoffKind kind) {
  switch (kind) {
    case PayoffKind::Call: return "call";
    case PayoffKind::Put: return "put";
    case PayoffKind::Digital: return "digital";
    case PayoffKind::SmoothV: return "smooth_v";
    case PayoffKind::SmoothX: return "smooth_x";
  }
  return "?";
}

double eval_payoff(const Payoff& payoff, const HestonParams& params, const Terminal& end) {
  if (!std::isfinite(end.log_price) || !std::isfinite(end.variance))
    throw std::invalid_argument("eval_payoff: non-finite terminal state");
  switch (payoff.kind) {
    case PayoffKind::SmoothV: return end.variance;
    case PayoffKind::SmoothX: return end.log_price;
    default: break;
  }
  const double discount = std::exp(-params.r * params.maturity);
  const double s = std::exp(end.log_price);
  switch (payoff.kind) {
    case PayoffKind::Call: return discount * std::fmax(s - params.strike, 0.0);
    case PayoffKind::Put: return discount * std::fmax(params.strike - s, 0.0);
    case PayoffKind::Digital: return s <= params.strike ? discount : 0.0;
    default: break;
  }
  throw std::logic_error("eval_payoff: unreachable");
}

double cir_mean(const HestonParams& params, double t) {
  return params.theta + (params.v0 - params.theta) * std::exp(-params.kappa * t);
}

double logprice_mean(const HestonParams& params, double t) {
  const double integral_ev =
      params.theta * t + (params.v0 - params.theta) * (1.0 - std::exp(-params.kappa * t)) / params.kappa;
  return std::log(params.s0) + params.r * t - 0.5 * integral_ev;
}

}  // namespace heston
