#include <doctest.h>

#include <cmath>
#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include "crharq/analytic.hpp"
#include "crharq/config.hpp"
#include "crharq/sweep.hpp"

using namespace crharq;

namespace {

namespace fs = std::filesystem;

fs::path scratch() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("crharq_cli_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

fs::path write_file(const std::string& name, const std::string& text) {
  const auto p = scratch() / name;
  std::ofstream(p) << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " \"" CRHARQ_CLI_PATH "\" " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

const char* kSmall = R"(scenario:
  snr_db: 3
  k: 50
  r: 2
  n_max: 5
  seed: 7
sweep:
  axis: p_th
  values: [0.001, 0.1]
  engine: mc
  sessions: 20000
  optimize: false
  series:
    - name: siso
      schemes: [ti:local, ir:local, ir:ideal]
)";

std::string config_error(const std::string& text) {
  try {
    parse_config(text, "x.yaml");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("config parsing") {
  const auto spec = parse_config(kSmall);
  CHECK(spec.base.snr == doctest::Approx(db_to_linear(3.0)));
  CHECK(spec.base.seed == 7);
  CHECK(spec.values.size() == 2);
  CHECK_FALSE(spec.optimize);
  REQUIRE(spec.series.size() == 1);
  CHECK(spec.series[0].schemes.size() == 3);

  const auto list = parse_config("scenario:\n  m_t: 4\n  m_r: [1, 2, 1]\n  b: inf\n");
  CHECK(list.base.m_r_per_rrh == std::vector<int>{1, 2, 1});
  CHECK_FALSE(list.base.b.has_value());
}

TEST_CASE("config errors carry line and column") {
  CHECK(config_error("scenario:\n  snr_db: 3\n  bogus: 1\n").rfind("x.yaml:3:", 0) == 0);
  CHECK(config_error("scenario:\n  k: fifty\n").rfind("x.yaml:2:", 0) == 0);
  CHECK(config_error("sweep:\n  engine: quantum\n").rfind("x.yaml:2:", 0) == 0);
  CHECK(config_error("sweep:\n  axis: colour\n").rfind("x.yaml:2:", 0) == 0);
  CHECK(config_error("scenario:\n  snr: 2\n  snr_db: 3\n") != "");
  CHECK(config_error("toplevel: 1\n") != "");
}

TEST_CASE("scheme parsing and labels") {
  const auto s = Scheme::parse("ir:soft:3");
  CHECK(s.protocol == Protocol::kIncrementalRedundancy);
  CHECK(s.policy == Policy::kSoft);
  CHECK(s.b == 3);
  CHECK(s.policy_label() == "soft:3");
  CHECK_FALSE(Scheme::parse("ir:soft:inf").b.has_value());
  CHECK(Scheme::parse("cc:local").policy == Policy::kLocal);
  CHECK_THROWS(Scheme::parse("ir"));
  CHECK_THROWS(Scheme::parse("xx:local"));
}

TEST_CASE("field assignment") {
  ScenarioConfig c;
  assign_field(c, "snr_db", "10");
  CHECK(c.snr == doctest::Approx(10.0));
  assign_field(c, "m", "4");
  CHECK(c.m_t == 4);
  CHECK(c.m_r_per_rrh == std::vector<int>{4});
  assign_field(c, "L", "3");
  CHECK(c.m_r_per_rrh == std::vector<int>{4, 4, 4});
  assign_field(c, "b", "6");
  CHECK(c.b == 6);
  CHECK(c.b_prime == 4);
  assign_field(c, "b", "inf");
  CHECK_FALSE(c.b.has_value());
  CHECK_THROWS(assign_field(c, "nope", "1"));
}

TEST_CASE("presets") {
  CHECK(preset("fig4").base.k == 50);
  CHECK(preset("fig4").base.n_max == 5);
  CHECK(preset("fig10").base.snr == doctest::Approx(db_to_linear(4.0)));
  CHECK(preset("fig7").base.r == 5.0);
  CHECK(preset("fig8").base.r == 5.0);
  for (const auto& name : preset_names()) CHECK_NOTHROW(preset(name));
  CHECK_THROWS(preset("fig99"));
}

TEST_CASE("single-point ideal TI sweep matches the identity") {
  SweepSpec spec;
  spec.base.snr = db_to_linear(3.0);
  spec.axis = "k";
  spec.values = {50};
  spec.engine = SweepEngine::kAnalytic;
  spec.series = {{"", {}, {Scheme::parse("ti:ideal")}}};
  const auto res = run_sweep(spec);
  REQUIRE(res.rows.size() == 1);
  CHECK(std::abs(res.rows[0].report.throughput_t - 2.0 * (1.0 - siso_mean_error_prob(2.0, 50, spec.base.snr))) <
        1e-12);
}

TEST_CASE("both engines emit paired rows") {
  auto spec = parse_config(kSmall);
  spec.engine = SweepEngine::kBoth;
  spec.sessions = 100000;
  const auto res = run_sweep(spec);
  REQUIRE(res.rows.size() == 12);
  for (std::size_t i = 0; i + 1 < res.rows.size(); i += 2) {
    const auto& a = res.rows[i];
    const auto& b = res.rows[i + 1];
    REQUIRE(a.scheme.label() == b.scheme.label());
    CHECK(a.engine != b.engine);
    CHECK(std::abs(a.report.throughput_t - b.report.throughput_t) <
          3 * std::hypot(a.report.throughput_se, b.report.throughput_se) + 1e-12);
  }
}

TEST_CASE("empty sweep writes a header-only CSV") {
  SweepSpec spec;
  const auto res = run_sweep(spec);
  CHECK(res.rows.empty());
  std::ostringstream out;
  write_csv(out, res.rows);
  std::istringstream in(out.str());
  CHECK(validate_csv(in) == 0);
  CHECK(out.str().rfind("axis,protocol,policy", 0) == 0);

  const auto cfg = write_file("empty.yaml", "sweep:\n  values: []\n");
  const auto csv = scratch() / "empty.csv";
  CHECK(run_cli("sweep --config " + cfg.string() + " --out " + csv.string()) == 0);
  const std::string text = slurp(csv);
  CHECK(std::count(text.begin(), text.end(), '\n') == 1);
}

TEST_CASE("CSV validation rejects broken rows") {
  std::ostringstream out;
  write_csv(out, run_sweep(parse_config(kSmall)).rows);
  std::istringstream good(out.str());
  CHECK(validate_csv(good) == 6);
  std::string text = out.str();
  const auto line2 = text.find('\n') + 1;
  auto bad = text;
  bad.replace(bad.find(",local,", line2), 7, ",local,0.5,9");
  std::istringstream in(bad);
  CHECK_THROWS(validate_csv(in));
}

TEST_CASE("CLI output is deterministic across runs and worker counts") {
  const auto cfg = write_file("small.yaml", kSmall);
  const auto a = scratch() / "a.csv";
  const auto b = scratch() / "b.csv";
  const auto c = scratch() / "c.csv";
  REQUIRE(run_cli("sweep --config " + cfg.string() + " --out " + a.string(), "CRHARQ_WORKERS=1") == 0);
  REQUIRE(run_cli("sweep --config " + cfg.string() + " --out " + b.string(), "CRHARQ_WORKERS=4") == 0);
  REQUIRE(run_cli("sweep --config " + cfg.string() + " --out " + c.string(), "CRHARQ_WORKERS=4") == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK(slurp(b) == slurp(c));
  std::ifstream in(a);
  CHECK(validate_csv(in) == 6);

  const auto d = scratch() / "d.csv";
  REQUIRE(run_cli("sweep --config " + cfg.string() + " --seed 8 --out " + d.string()) == 0);
  CHECK(slurp(a) != slurp(d));
}

TEST_CASE("CLI exit codes") {
  CHECK(run_cli("") != 0);
  CHECK(run_cli("sweep --config " + write_file("bad.yaml", "scenario:\n  k: [\n").string()) == 2);
  CHECK(run_cli("sweep --config " + write_file("bad2.yaml", "scenario:\n  n_max: 0\n").string()) == 2);
  const auto cc_mimo = write_file("ccmimo.yaml", "scenario:\n  m_t: 2\n  protocol: cc\n  policy: ideal\n");
  CHECK(run_cli("optimize-threshold --config " + cc_mimo.string()) == 2);
  const auto infeasible = write_file("inf.yaml",
                                     "scenario:\n  snr_db: 3\n  protocol: ti\n  policy: local\n  ps_min: 1\n"
                                     "sweep:\n  engine: analytic\n");
  CHECK(run_cli("optimize-threshold --config " + infeasible.string()) == 3);
  const auto feasible = write_file("ok.yaml",
                                   "scenario:\n  snr_db: 3\n  protocol: ti\n  policy: local\n  ps_min: 0.1\n"
                                   "sweep:\n  engine: analytic\n");
  CHECK(run_cli("optimize-threshold --config " + feasible.string()) == 0);
  const auto soft = write_file("soft.yaml",
                               "scenario:\n  snr_db: 0\n  m_t: 2\n  m_r: [1, 1]\n  r: 4\n  n_max: 2\n"
                               "  protocol: ir\n  policy: soft\n  b: 2\n  b_prime: 1\n  ps_min: 0.999999\n"
                               "codebook_search:\n  max_trials: 2\n  sessions: 2000\n  amplitude_samples: 2000\n");
  const auto cb = scratch() / "cb.txt";
  CHECK(run_cli("search-codebook --config " + soft.string() + " --out " + cb.string()) == 4);
  CHECK(fs::exists(cb));
  CHECK(slurp(cb).rfind("crharq-codebook 1", 0) == 0);
}
