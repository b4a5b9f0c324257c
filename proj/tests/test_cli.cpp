#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#ifndef HESTON_CLI_PATH
#error "HESTON_CLI_PATH must point at the heston-weak-lab binary"
#endif

namespace {

namespace fs = std::filesystem;

fs::path scratch_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "heston_cli_tests";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

int run_cli(const std::string& args, const std::string& env = "") {
  const std::string cmd =
      env + " " + std::string(HESTON_CLI_PATH) + " " + args + " >/dev/null 2>/dev/null";
  const int rc = std::system(cmd.c_str());
  REQUIRE(rc != -1);
  return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string first_line(const std::string& text) { return text.substr(0, text.find('\n')); }

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

}  // namespace

TEST_CASE("cli: csv headers are pinned byte-for-byte") {
  const fs::path dir = scratch_dir();
  const std::string out = (dir / "hdr").string();

  REQUIRE(run_cli("price --model model1 --steps 8 --samples 2000 --out " + out + "_p.csv") == 0);
  CHECK(first_line(slurp(out + "_p.csv")) ==
        "model,scheme,payoff,N,M,seed,estimate,std_error,ref,abs_error");

  REQUIRE(run_cli("converge --model model1 --grid 8,16,32 --samples 2000 --out " + out +
                  "_c.csv") == 0);
  CHECK(first_line(slurp(out + "_c.csv")) ==
        "model,scheme,payoff,N,M,seed,estimate,std_error,ref,abs_error");
  CHECK(first_line(slurp(out + "_c_summary.csv")) ==
        "model,scheme,payoff,rate,intercept,r_squared,min_N,max_N,M,seed");

  REQUIRE(run_cli("reference --model model1 --out " + out + "_r.csv") == 0);
  CHECK(first_line(slurp(out + "_r.csv")) == "model,payoff,method,value,dual_gap,parity_residual");

  REQUIRE(run_cli("verify-lemmas --model model1 --n-list 64 --epsilons 0.5 --mc-samples 2000 "
                  "--out " +
                  out + "_v.csv") == 0);
  CHECK(first_line(slurp(out + "_v.csv")) ==
        "model,N,epsilon,alpha_N,max_cj_slack,min_aj,plugin_bound,mc_estimate,mc_stderr,pass");
}

TEST_CASE("cli: identical config reruns and thread counts give identical bytes") {
  const fs::path dir = scratch_dir();
  const std::string base = "converge --model model3 --scheme abs --payoff put --grid 8,16,32 "
                           "--samples 20000 --seed 7 --out ";
  const std::string a = (dir / "a.csv").string();
  const std::string b = (dir / "b.csv").string();
  const std::string c = (dir / "c.csv").string();
  REQUIRE(run_cli(base + a + " --threads 1") == 0);
  REQUIRE(run_cli(base + b + " --threads 2") == 0);
  REQUIRE(run_cli(base + c + " --threads 1") == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK(slurp(a) == slurp(c));
  CHECK(slurp(dir / "a_summary.csv") == slurp(dir / "b_summary.csv"));

  // env-provided default for --threads changes nothing either
  const std::string d = (dir / "d.csv").string();
  REQUIRE(run_cli(base + d, "HESTON_LAB_THREADS=2") == 0);
  CHECK(slurp(a) == slurp(d));
}

TEST_CASE("cli: config file values are used and flags override them") {
  const fs::path dir = scratch_dir();
  const fs::path cfg = dir / "study.cfg";
  {
    std::ofstream out(cfg);
    out << "# study configuration\n"
        << "model = model2\n"
        << "scheme = abs\n"
        << "payoff = digital\n"
        << "samples = 2000\n"
        << "seed = 13\n"
        << "steps = 8\n";
  }
  const std::string out1 = (dir / "cfg1.csv").string();
  REQUIRE(run_cli("price --config " + cfg.string() + " --out " + out1) == 0);
  auto cells = split(split(slurp(out1), '\n').at(1), ',');
  CHECK(cells.at(0) == "model2");
  CHECK(cells.at(1) == "abs");
  CHECK(cells.at(2) == "digital");
  CHECK(cells.at(5) == "13");

  const std::string out2 = (dir / "cfg2.csv").string();
  REQUIRE(run_cli("price --config " + cfg.string() + " --model model3 --out " + out2) == 0);
  cells = split(split(slurp(out2), '\n').at(1), ',');
  CHECK(cells.at(0) == "model3");  // flag wins

  const fs::path bad = dir / "bad.cfg";
  {
    std::ofstream out(bad);
    out << "modle = model2\n";  // typo must be rejected
  }
  CHECK(run_cli("price --config " + bad.string()) == 2);

  const fs::path garbled = dir / "garbled.cfg";
  {
    std::ofstream out(garbled);
    out << "samples = plenty\n";
  }
  CHECK(run_cli("price --config " + garbled.string()) == 2);
  CHECK(run_cli("price --config " + (dir / "missing.cfg").string()) == 2);
}

TEST_CASE("cli: exit codes for configuration errors") {
  CHECK(run_cli("price --model model9") == 2);
  CHECK(run_cli("price --model model1 --samples 1") == 2);
  CHECK(run_cli("converge --model model1 --grid 8,12,16 --samples 2000") == 2);
  CHECK(run_cli("converge --model model1 --grid 32,16,8 --samples 2000") == 2);
  CHECK(run_cli("verify-lemmas --epsilons 0.6") == 2);
  CHECK(run_cli("verify-lemmas --model model4 --n-list 8") == 2);
  CHECK(run_cli("price --model model1 --payoff swaption") == 2);
}

TEST_CASE("cli: reference output values") {
  const fs::path dir = scratch_dir();
  const std::string out = (dir / "refs.csv").string();

  // frozen dual-quadrature oracle, model 3
  REQUIRE(run_cli("reference --model model3 --out " + out) == 0);
  const auto lines = split(slurp(out), '\n');
  REQUIRE(lines.size() >= 4);
  const auto call = split(lines.at(1), ',');
  const auto put = split(lines.at(2), ',');
  const auto digital = split(lines.at(3), ',');
  CHECK(std::fabs(std::stod(call.at(3)) - 6.806113313462) < 1e-7);
  CHECK(std::fabs(std::stod(put.at(3)) - 3.666457071472) < 1e-7);
  CHECK(std::fabs(std::stod(digital.at(3)) - 0.340850940691) < 1e-7);
  CHECK(call.at(2) == "call_formula");
  CHECK(put.at(2) == "put_parity");
  CHECK(digital.at(2) == "digital_p2");

  for (const auto& model : {"model1", "model2", "model3", "model4"}) {
    const std::string path = (dir / (std::string("refs_") + model + ".csv")).string();
    REQUIRE(run_cli(std::string("reference --model ") + model + " --out " + path) == 0);
    const auto rows = split(slurp(path), '\n');
    const auto c = split(rows.at(1), ',');
    const auto d = split(rows.at(3), ',');
    CHECK(std::fabs(std::stod(c.at(5))) < 1e-10);  // parity residual
    const double dig = std::stod(d.at(3));
    CHECK(dig >= 0.0);
    CHECK(dig <= 1.0);
  }
}

TEST_CASE("cli: verify-lemmas passes on every preset by default") {
  const fs::path dir = scratch_dir();
  const std::string out = (dir / "lemmas.csv").string();
  REQUIRE(run_cli("verify-lemmas --mc-samples 5000 --out " + out) == 0);
  const auto lines = split(slurp(out), '\n');
  CHECK(lines.size() > 100);  // 4 models x grids x 10 epsilons
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto cells = split(lines[i], ',');
    CHECK(cells.back() == "1");
  }
}
