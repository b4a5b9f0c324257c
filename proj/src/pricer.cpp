#include "heston/pricer.hpp"

#include <cmath>
#include <complex>
#include <functional>
#include <vector>

namespace heston {

QuadratureError::QuadratureError(const std::string& what, double residual_)
    : std::runtime_error(what), residual(residual_) {}

std::string_view to_string(PriceMethod m) {
  switch (m) {
    case PriceMethod::CallFormula: return "call_formula";
    case PriceMethod::PutParity: return "put_parity";
    case PriceMethod::DigitalP2: return "digital_p2";
    case PriceMethod::CirMean: return "cir_mean";
    case PriceMethod::LogPriceMean: return "logprice_mean";
  }
  return "?";
}

namespace {

using cd = std::complex<double>;

// Exponent of the Heston characteristic function f_j(u), including the i u x0
// term, in the branch-cut-safe convention (the exponential e^{-d tau} decays,
// so the complex log never crosses the cut for long maturities).
//
// (zeta - d)/sigma^2 is evaluated as -m/(zeta + d), which removes the
// sigma^2-sized cancellation; together with a series for the log term at tiny
// |g| this keeps the evaluation exact down to sigma -> 0, where the model
// degenerates to Black-Scholes.
cd log_cf(double u, int j, const HestonParams& p) {
  const cd i(0.0, 1.0);
  const double x0 = std::log(p.s0);
  const double a = p.kappa * p.theta;
  const double b = j == 1 ? p.kappa - p.rho * p.sigma : p.kappa;
  const double uj = j == 1 ? 0.5 : -0.5;
  const double sig2 = p.sigma * p.sigma;
  const double tau = p.maturity;

  const cd zeta(b, -p.rho * p.sigma * u);
  const cd m(u * u, -2.0 * uj * u);
  const cd d = std::sqrt(zeta * zeta + sig2 * m);

  // H = (zeta - d)/sigma^2. Re(zeta) = b > 0 makes zeta + d cancellation-free.
  const cd H = b > 0.0 ? -m / (zeta + d) : (zeta - d) / sig2;
  const cd g = sig2 * H / (zeta + d);
  const cd E = std::exp(-d * tau);

  cd C = p.r * i * u * tau + a * H * tau;
  if (std::abs(g) < 1e-6) {
    // log((1-gE)/(1-g)) = g(1-E) + g^2(1-E^2)/2 + O(g^3), divided by sigma^2
    // up front so no large intermediate ever forms.
    const cd g_over_sig2 = H / (zeta + d);
    C -= 2.0 * a * (g_over_sig2 * (1.0 - E) + g * g_over_sig2 * (1.0 - E * E) * 0.5);
  } else {
    C -= 2.0 * (a / sig2) * std::log((1.0 - g * E) / (1.0 - g));
  }
  const cd D = H * (1.0 - E) / (1.0 - g * E);
  return C + D * p.v0 + i * u * x0;
}

// Integrand of the P_j inversion. Re[w/(iu)] = Im(w)/u, which is stable for
// u -> 0; the value at u = 0 is taken as the limit via a tiny offset.
double prob_integrand(double u, int j, const HestonParams& p, double log_strike) {
  if (u < 1e-9) u = 1e-9;
  const cd w = std::exp(log_cf(u, j, p) - cd(0.0, u * log_strike));
  return w.imag() / u;
}

// ----- route A: adaptive Simpson ---------------------------------------

struct SimpsonWorker {
  const std::function<double(double)>& f;
  int max_depth;

  double recurse(double a, double fa, double m, double fm, double b, double fb, double whole,
                 double eps, int depth) const {
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (std::fabs(delta) <= 15.0 * eps) return left + right + delta / 15.0;
    if (depth <= 0)
      throw QuadratureError("adaptive Simpson did not converge within depth limit",
                            std::fabs(delta));
    return recurse(a, fa, lm, flm, m, fm, left, 0.5 * eps, depth - 1) +
           recurse(m, fm, rm, frm, b, fb, right, 0.5 * eps, depth - 1);
  }

  double segment(double a, double b, double eps) const {
    const double m = 0.5 * (a + b);
    const double fa = f(a);
    const double fm = f(m);
    const double fb = f(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return recurse(a, fa, m, fm, b, fb, whole, eps, max_depth);
  }
};

double integrate_simpson(const std::function<double(double)>& f, const QuadratureConfig& cfg) {
  SimpsonWorker worker{f, cfg.max_depth};
  double total = 0.0;
  double lo = 0.0;
  double hi = 32.0;
  int quiet_segments = 0;
  while (true) {
    const double seg = worker.segment(lo, hi, cfg.rel_tol);
    total += seg;
    if (std::fabs(seg) < cfg.tail_rel * (std::fabs(total) + 1e-30)) {
      if (++quiet_segments >= 2) break;
    } else {
      quiet_segments = 0;
    }
    lo = hi;
    hi *= 2.0;
    if (hi > cfg.max_u)
      throw QuadratureError("integrand tail did not decay before max_u", std::fabs(seg));
  }
  return total;
}

// ----- route B: composite Gauss-Legendre panels -------------------------

struct GlRule {
  std::vector<double> nodes;    // on (-1, 1)
  std::vector<double> weights;
};

// Nodes/weights by Newton iteration on the Legendre polynomial.
GlRule gauss_legendre(int n) {
  GlRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::fabs(dx) < 1e-15) break;
    }
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

double integrate_gauss_panels(const std::function<double(double)>& f, double panel_width,
                              const QuadratureConfig& cfg) {
  static const GlRule rule = gauss_legendre(32);
  double total = 0.0;
  double lo = 0.0;
  int quiet_panels = 0;
  while (true) {
    const double hi = lo + panel_width;
    const double mid = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    double panel = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i)
      panel += rule.weights[i] * f(mid + half * rule.nodes[i]);
    panel *= half;
    total += panel;
    if (std::fabs(panel) < cfg.tail_rel * (std::fabs(total) + 1e-30)) {
      if (++quiet_panels >= 3) break;
    } else {
      quiet_panels = 0;
    }
    lo = hi;
    if (lo > cfg.max_u)
      throw QuadratureError("integrand tail did not decay before max_u", std::fabs(panel));
  }
  return total;
}

double clamp_probability(double p, const char* what) {
  if (p < -1e-6 || p > 1.0 + 1e-6)
    throw QuadratureError(std::string(what) + ": probability outside [0,1] beyond tolerance",
                          std::fmax(-p, p - 1.0));
  return std::fmin(std::fmax(p, 0.0), 1.0);
}

}  // namespace

double heston_prob(int j, const HestonParams& params, QuadRoute route,
                   const QuadratureConfig& cfg) {
  if (j != 1 && j != 2) throw std::invalid_argument("heston_prob: j must be 1 or 2");
  params.validate();
  const double log_strike = std::log(params.strike);
  const std::function<double(double)> f = [&](double u) {
    return prob_integrand(u, j, params, log_strike);
  };
  double integral;
  if (route == QuadRoute::AdaptiveSimpson) {
    integral = integrate_simpson(f, cfg);
  } else {
    // Keep several Gauss points per oscillation of e^{-iu ln(K/s0)}.
    const double osc = std::fabs(std::log(params.s0 / params.strike)) +
                       std::fabs(params.r) * params.maturity + 2.0;
    const double width = std::fmin(2.0, 25.0 / osc);
    integral = integrate_gauss_panels(f, width, cfg);
  }
  return clamp_probability(0.5 + integral / M_PI, "heston_prob");
}

ProbPair heston_prob_dual(int j, const HestonParams& params, const QuadratureConfig& cfg) {
  const double simpson = heston_prob(j, params, QuadRoute::AdaptiveSimpson, cfg);
  const double gauss = heston_prob(j, params, QuadRoute::GaussLegendrePanels, cfg);
  return {simpson, std::fabs(simpson - gauss)};
}

ReferencePrice price_call(const HestonParams& params, const QuadratureConfig& cfg) {
  const ProbPair p1 = heston_prob_dual(1, params, cfg);
  const ProbPair p2 = heston_prob_dual(2, params, cfg);
  const double discounted_strike = params.strike * std::exp(-params.r * params.maturity);
  const double value = params.s0 * p1.value - discounted_strike * p2.value;
  const double tol = params.s0 * p1.gap + discounted_strike * p2.gap + 1e-12;
  return {value, tol, PriceMethod::CallFormula};
}

ReferencePrice price_put(const HestonParams& params, const QuadratureConfig& cfg) {
  const ReferencePrice call = price_call(params, cfg);
  const double value =
      call.value - params.s0 + params.strike * std::exp(-params.r * params.maturity);
  return {value, call.abs_tolerance, PriceMethod::PutParity};
}

ReferencePrice price_digital(const HestonParams& params, const QuadratureConfig& cfg) {
  const ProbPair p2 = heston_prob_dual(2, params, cfg);
  const double discount = std::exp(-params.r * params.maturity);
  return {discount * (1.0 - p2.value), discount * p2.gap + 1e-14, PriceMethod::DigitalP2};
}

double black_scholes_call(double s0, double strike, double r, double maturity, double vol) {
  const auto norm_cdf = [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); };
  const double stddev = vol * std::sqrt(maturity);
  const double d1 = (std::log(s0 / strike) + (r + 0.5 * vol * vol) * maturity) / stddev;
  const double d2 = d1 - stddev;
  return s0 * norm_cdf(d1) - strike * std::exp(-r * maturity) * norm_cdf(d2);
}

}  // namespace heston
