// Command-line driver: scenario sweeps, figure presets, threshold
// optimization and soft-feedback codebook search.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "crharq/codebook_search.hpp"
#include "crharq/config.hpp"
#include "crharq/optimize.hpp"
#include "crharq/sweep.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitCodebook = 4;

struct Overrides {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> sessions;
  std::optional<std::string> engine;
};

void add_common(CLI::App* cmd, Overrides& o, bool config_required) {
  auto* c = cmd->add_option("--config", o.config, "YAML experiment file");
  if (config_required) c->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", o.out, "output path");
  cmd->add_option("--seed", o.seed, "64-bit master seed");
  cmd->add_option("--sessions", o.sessions, "Monte Carlo sessions (or integration samples) per point");
  cmd->add_option("--engine", o.engine, "mc, analytic or both")->check(CLI::IsMember({"mc", "analytic", "both"}));
}

void apply(crharq::SweepSpec& spec, const Overrides& o) {
  if (o.seed) spec.base.seed = *o.seed;
  if (o.sessions) {
    spec.sessions = *o.sessions;
    spec.codebook.sessions = std::max<std::uint64_t>(spec.codebook.sessions, *o.sessions);
  }
  if (o.engine) spec.engine = crharq::parse_engine(*o.engine);
  if (!o.out.empty()) spec.output_path = o.out;
}

int emit_sweep(const crharq::SweepSpec& spec) {
  const crharq::SweepResult res = crharq::run_sweep(spec);
  for (const auto& why : res.skipped) std::cerr << "skipped: " << why << '\n';
  if (spec.output_path.empty() || spec.output_path == "-") {
    crharq::write_csv(std::cout, res.rows);
  } else {
    std::ofstream f(spec.output_path);
    if (!f) throw std::runtime_error("cannot write " + spec.output_path);
    crharq::write_csv(f, res.rows);
    std::cerr << "wrote " << res.rows.size() << " rows to " << spec.output_path << '\n';
  }
  if (res.attempted > 0 && res.rows.empty()) return kExitConfig;
  return kExitOk;
}

crharq::EngineKind single_engine(const crharq::SweepSpec& spec) {
  return spec.engine == crharq::SweepEngine::kAnalytic ? crharq::EngineKind::kAnalytic
                                                       : crharq::EngineKind::kMonteCarlo;
}

void print_report(const crharq::OptimizationResult& r) {
  const auto& m = r.report;
  std::printf("feasible    %s\n", r.feasible ? "yes" : "no");
  std::printf("p_th        %.10g\n", r.p_th);
  std::printf("T           %.6f +- %.6f\n", m.throughput_t, m.throughput_se);
  std::printf("Ps          %.6f +- %.6f (lower %.6f)\n", m.ps, m.ps_se, m.ps_lower);
  std::printf("E[N]        %.6f +- %.6f\n", m.expected_n, m.expected_n_se);
  std::printf("D_c / D_s   %.6f / %.6f\n", m.d_conventional, m.d_separated);
  if (!r.feasible) std::printf("max Ps      %.6f at p_th %.10g\n", r.max_ps, r.max_ps_p_th);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HARQ with local feedback for BBU Hoteling and C-RAN: sweeps and optimization"};
  app.require_subcommand(1);

  Overrides sweep_o, preset_o, opt_o, search_o;
  auto* sweep = app.add_subcommand("sweep", "run the sweep described by a config file");
  add_common(sweep, sweep_o, true);

  std::string preset_name;
  auto* preset = app.add_subcommand("preset", "run a figure preset sweep");
  preset->add_option("name", preset_name, "fig4 ... fig10")->required()->check(CLI::IsMember(crharq::preset_names()));
  add_common(preset, preset_o, false);

  std::string codebook_path;
  auto* optimize = app.add_subcommand("optimize-threshold", "optimize p_th of the configured scenario");
  add_common(optimize, opt_o, true);
  optimize->add_option("--codebook", codebook_path, "codebook file for soft feedback")->check(CLI::ExistingFile);

  int max_trials = 0;
  auto* search = app.add_subcommand("search-codebook", "search a soft-feedback codebook meeting ps_min");
  add_common(search, search_o, true);
  search->add_option("--max-trials", max_trials, "candidate codebooks to try");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sweep) {
      crharq::SweepSpec spec = crharq::load_config(sweep_o.config);
      apply(spec, sweep_o);
      return emit_sweep(spec);
    }
    if (*preset) {
      crharq::SweepSpec spec = crharq::preset(preset_name);
      if (!preset_o.config.empty()) {
        const crharq::SweepSpec file = crharq::load_config(preset_o.config);
        spec.threshold = file.threshold;
        spec.codebook = file.codebook;
      }
      apply(spec, preset_o);
      return emit_sweep(spec);
    }
    if (*optimize) {
      crharq::SweepSpec spec = crharq::load_config(opt_o.config);
      apply(spec, opt_o);
      if (spec.engine == crharq::SweepEngine::kBoth) throw crharq::ConfigError("choose one engine");
      std::optional<crharq::Codebook> codebook;
      if (spec.base.policy == crharq::Policy::kSoft) {
        if (!codebook_path.empty()) {
          std::ifstream f(codebook_path);
          codebook.emplace(crharq::Codebook::read(f));
        } else {
          codebook.emplace(crharq::search_codebook(spec.base, spec.codebook).codebook);
        }
      }
      const auto res = crharq::optimize_scenario(spec.base, single_engine(spec), spec.sessions,
                                                 codebook ? &*codebook : nullptr, spec.threshold);
      print_report(res);
      return res.feasible ? kExitOk : kExitInfeasible;
    }
    if (*search) {
      crharq::SweepSpec spec = crharq::load_config(search_o.config);
      apply(spec, search_o);
      if (max_trials > 0) spec.codebook.max_trials = max_trials;
      const std::string out = search_o.out.empty() ? "codebook.txt" : search_o.out;
      try {
        const auto res = crharq::search_codebook(spec.base, spec.codebook);
        std::ofstream f(out);
        res.codebook.write(f);
        std::printf("accepted after %d trial(s), written to %s\n", res.trials, out.c_str());
        print_report(res.optimization);
        return kExitOk;
      } catch (const crharq::CodebookSearchFailure& e) {
        std::ofstream f(out);
        e.best().write(f);
        std::fprintf(stderr, "%s after %d trials; best Ps lower bound %.6f, written to %s\n", e.what(), e.trials(),
                     e.best_ps(), out.c_str());
        return kExitCodebook;
      }
    }
  } catch (const crharq::ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFailure;
  }
  return kExitOk;
}
