#pragma once

#include <cstdint>
#include <stdexcept>

#include "crharq/metrics.hpp"
#include "crharq/optimize.hpp"
#include "crharq/quantizer.hpp"
#include "crharq/scenario.hpp"

namespace crharq {

struct CodebookSearchOptions {
  int max_trials = 50;
  std::uint64_t sessions = 200000;            ///< sessions per candidate
  std::uint64_t amplitude_samples = 1000000;  ///< ||h|| draws for Lloyd-Max
  ThresholdSearch threshold;
};

struct CodebookSearchResult {
  Codebook codebook;
  int trials = 0;          ///< candidates generated, including the accepted one
  OptimizationResult optimization;
};

/// Thrown when no candidate meets ps_min; carries the candidate with the
/// largest Wilson lower bound on Ps.
class CodebookSearchFailure : public std::runtime_error {
 public:
  CodebookSearchFailure(const std::string& what, Codebook best, double best_ps, int trials)
      : std::runtime_error(what), best_(std::move(best)), best_ps_(best_ps), trials_(trials) {}

  const Codebook& best() const { return best_; }
  double best_ps() const { return best_ps_; }
  int trials() const { return trials_; }

 private:
  Codebook best_;
  double best_ps_;
  int trials_;
};

/// Candidate `trial` of a scenario: random directions from stream
/// (seed, codebook, trial) and a Lloyd-Max amplitude quantizer trained on
/// fresh ||h|| samples from stream (seed, amplitude training, trial).
Codebook generate_candidate_codebook(const ScenarioConfig& cfg, int trial,
                                     std::uint64_t amplitude_samples = 1000000);

/// Draws candidates until one reaches Wilson-lower-bound Ps >= cfg.ps_min at
/// its optimized threshold. Unset cfg.b means unquantized feedback and
/// returns the passthrough codebook.
CodebookSearchResult search_codebook(const ScenarioConfig& cfg, const CodebookSearchOptions& options = {});

}  // namespace crharq
