#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <nflab/config.hpp>
#include <nflab/errors.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

using namespace nflab;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spill(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

// Runs the CLI binary; returns the exit code, captures stdout+stderr.
int run_cli(const std::string& args, std::string* output = nullptr) {
  const std::string log = std::string("/tmp/nflab_cli_test_out.txt");
  const std::string cmd = std::string(NFLAB_CLI_PATH) + " " + args + " > " + log + " 2>&1";
  const int rc = std::system(cmd.c_str());
  if (output) *output = slurp(log);
  std::remove(log.c_str());
  return WEXITSTATUS(rc);
}

const std::string kShipped = std::string(NFLAB_CONFIG_DIR) + "/convnls_zero_potential.json";

}  // namespace

TEST_CASE("config serialization round trips to a fixed point") {
  const RunConfig base = config_from_json("{}");
  const std::string once = config_to_json(base);
  const std::string twice = config_to_json(config_from_json(once));
  CHECK(once == twice);

  // shipped configs round trip too
  const RunConfig shipped = load_config(kShipped);
  CHECK(config_to_json(config_from_json(config_to_json(shipped))) == config_to_json(shipped));
}

TEST_CASE("config rejects unknown fields by their dotted path") {
  try {
    (void)config_from_json(R"({"model": {"C_zero": 2.0}})");
    FAIL("expected rejection");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("model.C_zero") != std::string::npos);
  }
  CHECK_THROWS_AS((void)config_from_json(R"({"simulate": {"K": "big"}})"), ConfigError);
  CHECK_THROWS_AS((void)config_from_json(R"({"format": "xml"})"), ConfigError);
  CHECK_THROWS_AS((void)config_from_json("{"), ConfigError);
}

TEST_CASE("cli: help and argument errors") {
  std::string out;
  CHECK(run_cli("--help", &out) == 0);
  CHECK(out.find("verify") != std::string::npos);
  CHECK(out.find("simulate") != std::string::npos);
  CHECK(run_cli("", nullptr) == 2);             // a subcommand is required
  CHECK(run_cli("frobnicate", nullptr) == 2);   // unknown subcommand
  CHECK(run_cli("verify --format xml", nullptr) == 2);
}

TEST_CASE("cli: verify passes on shipped configs and flags property failures") {
  std::string out;
  CHECK(run_cli("verify --config " + kShipped, &out) == 0);
  CHECK(out.find("\"pass\"") != std::string::npos);

  // fractional growth with beta pinned to 2 violates the upper window
  spill("/tmp/nflab_badbeta.json",
        R"({"model": {"family": "fractional", "beta": 2.0}, "verify": {"k_max": 16}})");
  CHECK(run_cli("verify --config /tmp/nflab_badbeta.json", &out) == 1);
  CHECK(out.find("\"pass\": false") != std::string::npos);

  // unknown config fields are config errors, not property failures
  spill("/tmp/nflab_unknown.json", R"({"model": {"C_zero": 2.0}})");
  CHECK(run_cli("verify --config /tmp/nflab_unknown.json", &out) == 2);
  CHECK(out.find("model.C_zero") != std::string::npos);

  spill("/tmp/nflab_broken.json", "{ not json");
  CHECK(run_cli("verify --config /tmp/nflab_broken.json", nullptr) == 2);
}

TEST_CASE("cli: stability emits the documented csv and is deterministic") {
  std::string out;
  const std::string base = "stability --config " + kShipped;
  CHECK(run_cli(base + " --out /tmp/nflab_stab_a.csv", &out) == 0);
  CHECK(run_cli(base + " --out /tmp/nflab_stab_b.csv", &out) == 0);
  const std::string a = slurp("/tmp/nflab_stab_a.csv");
  CHECK(a == slurp("/tmp/nflab_stab_b.csv"));
  CHECK(a.rfind("eps,d,N,T,regime\n", 0) == 0);
  // horizons print as mantissa/exponent pairs beyond double range
  CHECK(a.find("e+") != std::string::npos);
}

TEST_CASE("cli: measure csv schema, determinism, seed sensitivity") {
  const std::string base = "measure --config " + kShipped;
  CHECK(run_cli(base + " --out /tmp/nflab_meas_a.csv") == 0);
  CHECK(run_cli(base + " --out /tmp/nflab_meas_b.csv") == 0);
  const std::string a = slurp("/tmp/nflab_meas_a.csv");
  CHECK(a == slurp("/tmp/nflab_meas_b.csv"));
  CHECK(a.rfind("family,gamma,N,d,fraction,ci_low,ci_high,samples,seed\n", 0) == 0);

  CHECK(run_cli(base + " --seed 99 --out /tmp/nflab_meas_c.csv") == 0);
  CHECK(slurp("/tmp/nflab_meas_c.csv") != a);
}

TEST_CASE("cli: simulate trajectory csv") {
  const std::string base = "simulate --config " + kShipped;
  CHECK(run_cli(base + " --out /tmp/nflab_sim_a.csv") == 0);
  CHECK(run_cli(base + " --out /tmp/nflab_sim_b.csv") == 0);
  const std::string a = slurp("/tmp/nflab_sim_a.csv");
  CHECK(a == slurp("/tmp/nflab_sim_b.csv"));
  CHECK(a.rfind("t,norm_s,norm_l2,energy,norm_low,norm_high\n", 0) == 0);

  std::string json_out;
  CHECK(run_cli(base + " --format json", &json_out) == 0);
  CHECK(json_out.find("\"escape_time\"") != std::string::npos);
}

TEST_CASE("cli: normalform json is deterministic") {
  const std::string base = "normalform --config " + kShipped;
  CHECK(run_cli(base + " --out /tmp/nflab_nf_a.json") == 0);
  CHECK(run_cli(base + " --out /tmp/nflab_nf_b.json") == 0);
  const std::string a = slurp("/tmp/nflab_nf_a.json");
  CHECK(a == slurp("/tmp/nflab_nf_b.json"));
  CHECK(a.find("\"Z0\"") != std::string::npos);
  CHECK(a.find("\"perturbation\"") != std::string::npos);
}

TEST_CASE("cli: budget violations exit with code 3") {
  // tau* = 6 metric membership over a deep lattice exceeds the scan budget
  spill("/tmp/nflab_budget.json", R"({
    "lattice": {"dim": 3, "k_max": 30},
    "measure": {"family": "beam", "N": 30, "d": 2, "samples": 10, "gamma": [0.001]}
  })");
  CHECK(run_cli("measure --config /tmp/nflab_budget.json", nullptr) == 3);
}

TEST_CASE("cli: demo aggregates every module and stays deterministic") {
  CHECK(run_cli("demo --config " + kShipped + " --out /tmp/nflab_demo_a.json") == 0);
  CHECK(run_cli("demo --config " + kShipped + " --out /tmp/nflab_demo_b.json") == 0);
  const std::string a = slurp("/tmp/nflab_demo_a.json");
  CHECK(a == slurp("/tmp/nflab_demo_b.json"));
  for (const char* key : {"\"ledger\"", "\"balance\"", "\"normalform\"", "\"measure\"",
                          "\"simulate\""})
    CHECK(a.find(key) != std::string::npos);
}
