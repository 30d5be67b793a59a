#include "crharq/codebook_search.hpp"

#include <cmath>
#include <memory>

#include "crharq/engine.hpp"

namespace crharq {

Codebook generate_candidate_codebook(const ScenarioConfig& cfg, int trial, std::uint64_t amplitude_samples) {
  if (!cfg.b) return Codebook::passthrough(cfg.m_t);
  const int b = *cfg.b;
  const int b_prime = cfg.b_prime;
  const auto index = static_cast<std::uint64_t>(trial);

  RandomStream dir_rng = RandomStream::derive(cfg.seed, StreamFamily::kCodebook, index);
  auto directions = generate_direction_codebook(b_prime, cfg.m_t, dir_rng);

  RandomStream amp_rng = RandomStream::derive(cfg.seed, StreamFamily::kAmplitudeTraining, index);
  std::vector<double> norms(amplitude_samples);
  for (auto& a : norms) {
    double sq = 0.0;
    for (int j = 0; j < cfg.m_t; ++j) sq += std::norm(amp_rng.complex_normal());
    a = std::sqrt(sq);
  }
  auto amplitude = optimize_amplitude_quantizer(norms, std::size_t{1} << (b - b_prime));
  return Codebook(b, b_prime, std::move(directions), std::move(amplitude));
}

CodebookSearchResult search_codebook(const ScenarioConfig& cfg, const CodebookSearchOptions& options) {
  cfg.validate();
  if (cfg.policy != Policy::kSoft) throw ConfigError("codebook search needs the soft policy");
  if (options.max_trials < 1) throw ConfigError("max_trials must be at least 1");

  std::optional<Codebook> best;
  double best_ps = -1.0;
  const int trials = cfg.b ? options.max_trials : 1;
  for (int t = 0; t < trials; ++t) {
    Codebook candidate = generate_candidate_codebook(cfg, t, options.amplitude_samples);
    OptimizationResult opt =
        optimize_scenario(cfg, EngineKind::kMonteCarlo, options.sessions, &candidate, options.threshold);
    if (!cfg.b || opt.feasible) return {std::move(candidate), t + 1, std::move(opt)};
    if (opt.max_ps > best_ps) {
      best_ps = opt.max_ps;
      best.emplace(std::move(candidate));
    }
  }
  throw CodebookSearchFailure("no codebook met the success constraint", std::move(*best), best_ps, trials);
}

}  // namespace crharq
