// Batch front-end for the weak-convergence lab: model presets, flat key=value
// config files, CSV emission. Exit codes: 0 ok, 2 config error, 3 quadrature
// failure, 4 zero weak error (raise M), 5 lemma violation.

#include <CLI11.hpp>

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "heston/lemmas.hpp"
#include "heston/mc.hpp"
#include "heston/model.hpp"
#include "heston/pricer.hpp"
#include "heston/schemes.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitQuadrature = 3;
constexpr int kExitZeroError = 4;
constexpr int kExitLemmaViolation = 5;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ----- flat key=value config --------------------------------------------

const std::vector<std::string>& known_config_keys() {
  static const std::vector<std::string> keys = {
      "model",   "scheme",  "payoff",     "grid_sizes", "samples",     "seed",
      "threads", "steps",   "epsilons",   "n_list",     "output_path", "max_seconds",
      "mc_samples"};
  return keys;
}

std::map<std::string, std::string> load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::map<std::string, std::string> kv;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key=value");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    bool known = false;
    for (const auto& k : known_config_keys()) known = known || k == key;
    if (!known)
      throw ConfigError(path + ":" + std::to_string(line_no) + ": unknown key '" + key + "'");
    kv[key] = value;
  }
  return kv;
}

// Pre-scan for --config so its values can seed the option defaults; explicit
// flags still win because CLI11 parses them afterwards.
std::map<std::string, std::string> preload_config(int argc, char** argv) {
  for (int i = 1; i + 1 < argc; ++i)
    if (std::string(argv[i]) == "--config") return load_config(argv[i + 1]);
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg.rfind("--config=", 0) == 0) return load_config(arg.substr(9));
  }
  return {};
}

std::vector<int> parse_int_list(const std::string& text, const char* what) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw ConfigError(std::string(what) + ": bad integer '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError(std::string(what) + ": empty list");
  return out;
}

std::vector<double> parse_double_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigError(std::string(what) + ": bad number '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError(std::string(what) + ": empty list");
  return out;
}

bool is_power_of_two(long long n) { return n > 0 && (n & (n - 1)) == 0; }

// ----- CSV helpers --------------------------------------------------------

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

struct CsvWriter {
  std::string path;
  std::ofstream out;

  CsvWriter(const std::string& path_, const std::string& header) : path(path_), out(path_) {
    if (!out) throw ConfigError("cannot write output file '" + path_ + "'");
    out << header << "\n";
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
    out << "\n";
  }
};

std::string summary_path(const std::string& path) {
  const std::filesystem::path p(path);
  std::filesystem::path q = p;
  q.replace_filename(p.stem().string() + "_summary" + p.extension().string());
  return q.string();
}

// ----- shared option bundle ----------------------------------------------

struct CommonOpts {
  std::string config_path;
  std::string model = "model1";
  std::string scheme = "sym";
  std::string payoff = "call";
  std::int64_t samples = 4000000;
  std::uint64_t seed = 42;
  int threads = 0;
  std::string out;
  double max_seconds = 0.0;
};

void add_common(CLI::App* cmd, CommonOpts& o, const std::map<std::string, std::string>& cfg) {
  auto from_cfg = [&cfg](const char* key) -> std::optional<std::string> {
    auto it = cfg.find(key);
    if (it == cfg.end()) return std::nullopt;
    return it->second;
  };
  if (auto v = from_cfg("model")) o.model = *v;
  if (auto v = from_cfg("scheme")) o.scheme = *v;
  if (auto v = from_cfg("payoff")) o.payoff = *v;
  if (auto v = from_cfg("samples")) o.samples = std::stoll(*v);
  if (auto v = from_cfg("seed")) o.seed = std::stoull(*v);
  if (auto v = from_cfg("threads")) o.threads = std::stoi(*v);
  if (auto v = from_cfg("output_path")) o.out = *v;
  if (auto v = from_cfg("max_seconds")) o.max_seconds = std::stod(*v);

  cmd->add_option("--config", o.config_path, "flat key=value config file");
  cmd->add_option("--model", o.model, "model preset (model1..model4)");
  cmd->add_option("--scheme", o.scheme, "variance scheme: sym|abs");
  cmd->add_option("--payoff", o.payoff, "payoff: call|put|digital|smooth_v|smooth_x");
  cmd->add_option("--samples", o.samples, "Monte Carlo paths M");
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--threads", o.threads, "worker cap (0 = all); results do not depend on it")
      ->envname("HESTON_LAB_THREADS");
  cmd->add_option("--out", o.out, "output CSV path");
  cmd->add_option("--max-seconds", o.max_seconds, "wall-clock budget for one estimate (0 = off)");
}

heston::McOptions mc_options(const CommonOpts& o) {
  heston::McOptions opt;
  opt.threads = o.threads;
  opt.max_seconds = o.max_seconds;
  return opt;
}

void validate_samples(std::int64_t samples) {
  if (samples < 2) throw ConfigError("samples must be >= 2 (std error undefined otherwise)");
}

// ----- commands -----------------------------------------------------------

constexpr const char* kRowHeader = "model,scheme,payoff,N,M,seed,estimate,std_error,ref,abs_error";

void emit_row(CsvWriter& csv, const CommonOpts& o, int n_steps, const heston::McEstimate& est,
              const heston::ReferencePrice& ref) {
  csv.row({o.model, o.scheme, o.payoff, std::to_string(n_steps), std::to_string(est.n_samples),
           std::to_string(o.seed), fmt(est.mean), fmt(est.std_error), fmt(ref.value),
           fmt(heston::weak_error(est, ref))});
}

int cmd_price(const CommonOpts& o, int steps) {
  validate_samples(o.samples);
  if (steps < 1) throw ConfigError("steps must be >= 1");
  const heston::HestonParams params = heston::model_preset(o.model);
  const heston::SchemeKind kind = heston::scheme_from_string(o.scheme);
  const heston::Payoff payoff{heston::payoff_kind_from_string(o.payoff)};
  const heston::McOptions opt = mc_options(o);
  const heston::ReferencePrice ref = heston::resolve_reference(payoff, params, opt.quadrature);
  const heston::McEstimate est =
      heston::estimate(kind, params, payoff, steps, o.samples, o.seed, opt);

  CsvWriter csv(o.out.empty() ? "price.csv" : o.out, kRowHeader);
  emit_row(csv, o, steps, est, ref);
  std::printf("wrote %s (estimate=%s abs_error=%s)\n", csv.path.c_str(), fmt(est.mean).c_str(),
              fmt(heston::weak_error(est, ref)).c_str());
  return 0;
}

int cmd_converge(const CommonOpts& o, std::vector<int> grid, bool paper_scale,
                 bool samples_given, bool grid_given) {
  std::int64_t samples = o.samples;
  if (paper_scale && !samples_given) samples = 20000000;
  if (paper_scale && !grid_given) grid = {8, 16, 32, 64, 128, 256};
  validate_samples(samples);
  if (grid.size() < 3) throw ConfigError("grid_sizes needs at least 3 entries");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!is_power_of_two(grid[i]))
      throw ConfigError("grid_sizes must be powers of two (got " + std::to_string(grid[i]) + ")");
    if (i > 0 && grid[i] <= grid[i - 1])
      throw ConfigError("grid_sizes must be strictly ascending");
  }
  const heston::HestonParams params = heston::model_preset(o.model);
  const heston::SchemeKind kind = heston::scheme_from_string(o.scheme);
  const heston::Payoff payoff{heston::payoff_kind_from_string(o.payoff)};
  const heston::StudyResult study =
      heston::run_study(kind, params, payoff, grid, samples, o.seed, mc_options(o));

  const std::string out = o.out.empty() ? "converge.csv" : o.out;
  CsvWriter rows(out, kRowHeader);
  for (const auto& row : study.rows) emit_row(rows, o, row.n_steps, row.estimate, study.reference);

  CsvWriter summary(summary_path(out),
                    "model,scheme,payoff,rate,intercept,r_squared,min_N,max_N,M,seed");
  summary.row({o.model, o.scheme, o.payoff, fmt(study.fit.rate), fmt(study.fit.intercept),
               fmt(study.fit.r_squared), std::to_string(grid.front()),
               std::to_string(grid.back()), std::to_string(samples), std::to_string(o.seed)});
  std::printf("wrote %s and %s (rate=%s r_squared=%s)\n", rows.path.c_str(),
              summary.path.c_str(), fmt(study.fit.rate).c_str(),
              fmt(study.fit.r_squared).c_str());
  return 0;
}

int cmd_reference(const CommonOpts& o) {
  const heston::HestonParams params = heston::model_preset(o.model);
  const heston::QuadratureConfig cfg;
  const heston::ReferencePrice call = heston::price_call(params, cfg);
  const heston::ReferencePrice put = heston::price_put(params, cfg);
  const heston::ReferencePrice digital = heston::price_digital(params, cfg);
  const double parity_residual =
      (call.value - put.value) -
      (params.s0 - params.strike * std::exp(-params.r * params.maturity));

  CsvWriter csv(o.out.empty() ? "reference.csv" : o.out,
                "model,payoff,method,value,dual_gap,parity_residual");
  auto emit = [&](const char* payoff, const heston::ReferencePrice& ref) {
    csv.row({o.model, payoff, std::string(heston::to_string(ref.method)), fmt(ref.value),
             fmt(ref.abs_tolerance), fmt(parity_residual)});
  };
  emit("call", call);
  emit("put", put);
  emit("digital", digital);
  std::printf("wrote %s (call=%s put=%s digital=%s)\n", csv.path.c_str(),
              fmt(call.value).c_str(), fmt(put.value).c_str(), fmt(digital.value).c_str());
  return 0;
}

int cmd_verify_lemmas(const CommonOpts& o, std::vector<int> n_list, std::vector<double> epsilons,
                      std::int64_t mc_samples, bool model_given, bool n_given) {
  std::vector<std::string> models;
  if (model_given)
    models.push_back(o.model);
  else
    models = heston::model_preset_names();
  if (epsilons.empty())
    epsilons.assign(heston::epsilon_grid().begin(), heston::epsilon_grid().end());
  for (double eps : epsilons)
    if (!(eps > 0.0 && eps <= 0.5))
      throw ConfigError("epsilon must lie in (0, 1/2], got " + fmt(eps));
  if (mc_samples < 1) throw ConfigError("mc_samples must be >= 1");

  CsvWriter csv(o.out.empty() ? "verify_lemmas.csv" : o.out,
                "model,N,epsilon,alpha_N,max_cj_slack,min_aj,plugin_bound,mc_estimate,"
                "mc_stderr,pass");
  const heston::SchemeKind kind = heston::scheme_from_string(o.scheme);
  bool any_failure = false;

  for (const auto& model : models) {
    const heston::HestonParams params = heston::model_preset(model);
    std::vector<int> ns = n_list;
    if (!n_given) {
      for (int n = 8; n <= 4096; n *= 2)
        if (params.maturity / n < 1.0 / params.kappa) ns.push_back(n);
    } else {
      for (int n : ns)
        if (!(params.maturity / n < 1.0 / params.kappa))
          throw ConfigError("N=" + std::to_string(n) + " violates dt < 1/kappa for " + model);
    }
    for (int n : ns) {
      const heston::NegativityEstimate mc = heston::estimate_negativity(
          kind, params, n, mc_samples, heston::rng::derive_seed(o.seed, n), mc_options(o));
      std::size_t worst_k = 0;
      for (std::size_t k = 1; k < mc.p_hat.size(); ++k)
        if (mc.p_hat[k] > mc.p_hat[worst_k]) worst_k = k;
      for (double eps : epsilons) {
        const heston::SequenceCheck check = heston::check_sequence(params, n, eps);
        bool dominance = true;
        for (std::size_t k = 0; k < mc.p_hat.size(); ++k)
          dominance = dominance &&
                      mc.p_hat[k] <= check.plugin_bound + 3.0 * mc.std_err[k];
        const bool pass = check.all_ok() && dominance;
        any_failure = any_failure || !pass;
        const double alpha = 0.5 * (1.0 - params.kappa * params.maturity / n);
        csv.row({model, std::to_string(n), fmt(eps), fmt(alpha), fmt(check.max_c_slack),
                 fmt(check.min_a), fmt(check.plugin_bound), fmt(mc.p_hat[worst_k]),
                 fmt(mc.std_err[worst_k]), pass ? "1" : "0"});
      }
    }
  }
  std::printf("wrote %s (%s)\n", csv.path.c_str(), any_failure ? "FAIL" : "all pass");
  return any_failure ? kExitLemmaViolation : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo lab for symmetrized/absorbed Euler discretizations of log-Heston"};
  app.require_subcommand(1);

  CommonOpts price_opts, conv_opts, ref_opts, lemma_opts;
  CLI::App* price = nullptr;
  CLI::App* conv = nullptr;
  CLI::App* ref = nullptr;
  CLI::App* lemmas = nullptr;
  CLI::Option* grid_opt = nullptr;
  CLI::Option* n_opt = nullptr;
  std::map<std::string, std::string> cfg;
  int steps = 128;
  std::string grid_text = "8,16,32,64,128";
  bool paper_scale = false;
  std::string n_text, eps_text;
  std::int64_t mc_samples = 100000;

  // Config values become option defaults, so malformed numbers surface here.
  try {
    cfg = preload_config(argc, argv);

    price = app.add_subcommand("price", "one estimate vs the semi-analytic reference");
    add_common(price, price_opts, cfg);
    if (auto it = cfg.find("steps"); it != cfg.end()) steps = std::stoi(it->second);
    price->add_option("--steps", steps, "number of time steps N");

    conv = app.add_subcommand("converge", "weak-convergence study over a grid of N");
    add_common(conv, conv_opts, cfg);
    if (auto it = cfg.find("grid_sizes"); it != cfg.end()) grid_text = it->second;
    grid_opt = conv->add_option("--grid", grid_text, "comma list of N (powers of two)");
    conv->add_flag("--paper-scale", paper_scale,
                   "paper-scale defaults: M = 2e7, N in {2^3..2^8}");

    ref = app.add_subcommand("reference", "semi-analytic prices for all three payoffs");
    add_common(ref, ref_opts, cfg);

    lemmas = app.add_subcommand("verify-lemmas", "deterministic lemma suite + MC dominance");
    add_common(lemmas, lemma_opts, cfg);
    if (auto it = cfg.find("n_list"); it != cfg.end()) n_text = it->second;
    if (auto it = cfg.find("epsilons"); it != cfg.end()) eps_text = it->second;
    n_opt = lemmas->add_option("--n-list", n_text,
                               "comma list of N (default: 2^3..2^12 with dt < 1/kappa)");
    lemmas->add_option("--epsilons", eps_text, "comma list of epsilon in (0, 1/2]");
    if (auto it = cfg.find("mc_samples"); it != cfg.end()) mc_samples = std::stoll(it->second);
    lemmas->add_option("--mc-samples", mc_samples, "paths for the negativity frequency estimate");
  } catch (const std::exception& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (price->parsed()) return cmd_price(price_opts, steps);
    if (conv->parsed()) {
      const bool samples_given = conv->count("--samples") > 0 || cfg.count("samples") > 0;
      const bool grid_given = grid_opt->count() > 0 || cfg.count("grid_sizes") > 0;
      return cmd_converge(conv_opts, parse_int_list(grid_text, "grid_sizes"), paper_scale,
                          samples_given, grid_given);
    }
    if (ref->parsed()) return cmd_reference(ref_opts);
    if (lemmas->parsed()) {
      const bool model_given = lemmas->count("--model") > 0 || cfg.count("model") > 0;
      const bool n_given = n_opt->count() > 0 || cfg.count("n_list") > 0;
      std::vector<int> ns;
      if (n_given) ns = parse_int_list(n_text, "n_list");
      std::vector<double> eps;
      if (!eps_text.empty()) eps = parse_double_list(eps_text, "epsilons");
      return cmd_verify_lemmas(lemma_opts, ns, eps, mc_samples, model_given, n_given);
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const heston::ZeroWeakError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kExitZeroError;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const heston::QuadratureError& e) {
    std::fprintf(stderr, "quadrature failure: %s (residual %g)\n", e.what(), e.residual);
    return kExitQuadrature;
  } catch (const heston::BudgetExceeded& e) {
    std::fprintf(stderr, "budget exceeded: %s (partial over %" PRId64 " paths: %g)\n", e.what(),
                 e.partial.n_samples, e.partial.mean);
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
