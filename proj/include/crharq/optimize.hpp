#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "crharq/engine.hpp"
#include "crharq/metrics.hpp"
#include "crharq/quantizer.hpp"
#include "crharq/scenario.hpp"

namespace crharq {

/// Metrics of a scenario as a function of its threshold. Must be safe to
/// call concurrently.
using ThresholdEvaluator = std::function<MetricsReport(double p_th)>;

struct ThresholdSearch {
  double min = 1e-6;
  double max = 0.99;
  int grid_points = 49;
  double relative_tolerance = 1e-4;
};

struct ThresholdPoint {
  double p_th = 0.0;
  MetricsReport report;
};

struct OptimizationResult {
  bool feasible = false;
  double p_th = 0.0;         ///< maximizer, or the Ps maximizer when infeasible
  MetricsReport report;
  double max_ps = 0.0;       ///< largest constrained Ps statistic seen
  double max_ps_p_th = 0.0;
  std::vector<ThresholdPoint> grid;
};

/// Log-spaced grid over [min, max].
std::vector<double> threshold_grid(const ThresholdSearch& search);

/// Maximizes T subject to ps_lower >= ps_min: grid evaluation, then
/// golden-section refinement in log p_th around the best grid point.
OptimizationResult optimize_threshold(const ThresholdEvaluator& evaluator, double ps_min,
                                      const ThresholdSearch& search = {});

enum class EngineKind { kMonteCarlo, kAnalytic };

/// Replays a simulated path batch. Sessions are shared by every threshold.
ThresholdEvaluator mc_evaluator(std::shared_ptr<const PathBatch> batch);

/// Analytic evaluator; IR paths are sampled once and reused.
ThresholdEvaluator analytic_evaluator(const ScenarioConfig& cfg, std::uint64_t mc_samples = 1000000);

ThresholdEvaluator make_evaluator(const ScenarioConfig& cfg, EngineKind engine, std::uint64_t sessions,
                                  const Codebook* codebook = nullptr);

/// Ideal feedback has no threshold and is evaluated once; other policies are
/// optimized under cfg.ps_min.
OptimizationResult optimize_scenario(const ScenarioConfig& cfg, EngineKind engine, std::uint64_t sessions,
                                     const Codebook* codebook = nullptr, const ThresholdSearch& search = {});

}  // namespace crharq
