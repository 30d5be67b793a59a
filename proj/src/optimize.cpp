#include "crharq/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "crharq/analytic.hpp"
#include "crharq/parallel.hpp"

namespace crharq {

std::vector<double> threshold_grid(const ThresholdSearch& s) {
  if (!(s.min > 0.0) || !(s.max >= s.min) || s.max > 1.0)
    throw ConfigError("threshold search range must satisfy 0 < min <= max <= 1");
  if (s.grid_points < 2) throw ConfigError("threshold grid needs at least two points");
  std::vector<double> g(static_cast<std::size_t>(s.grid_points));
  const double a = std::log(s.min);
  const double b = std::log(s.max);
  for (int i = 0; i < s.grid_points; ++i)
    g[static_cast<std::size_t>(i)] = std::exp(a + (b - a) * i / (s.grid_points - 1));
  g.front() = s.min;
  g.back() = s.max;
  return g;
}

namespace {

bool is_feasible(const MetricsReport& m, double ps_min) { return m.ps_lower >= ps_min; }

struct Tracker {
  double ps_min;
  OptimizationResult& out;

  void offer(double p_th, const MetricsReport& m) {
    if (m.ps_lower > out.max_ps || out.grid.empty()) {
      out.max_ps = m.ps_lower;
      out.max_ps_p_th = p_th;
    }
    if (is_feasible(m, ps_min) && (!out.feasible || m.throughput_t > out.report.throughput_t)) {
      out.feasible = true;
      out.p_th = p_th;
      out.report = m;
    }
  }
};

}  // namespace

OptimizationResult optimize_threshold(const ThresholdEvaluator& evaluator, double ps_min,
                                      const ThresholdSearch& search) {
  const std::vector<double> grid = threshold_grid(search);
  std::vector<MetricsReport> reports(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) { reports[i] = evaluator(grid[i]); });

  OptimizationResult out;
  Tracker tracker{ps_min, out};
  int best = -1;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    tracker.offer(grid[i], reports[i]);
    out.grid.push_back({grid[i], reports[i]});
    if (out.feasible && out.p_th == grid[i]) best = static_cast<int>(i);
  }
  if (!out.feasible) {
    const auto it = std::find_if(out.grid.begin(), out.grid.end(),
                                 [&](const ThresholdPoint& p) { return p.p_th == out.max_ps_p_th; });
    out.p_th = it->p_th;
    out.report = it->report;
    return out;
  }

  const int last = static_cast<int>(grid.size()) - 1;
  double lo = std::log(grid[static_cast<std::size_t>(std::max(best - 1, 0))]);
  double hi = std::log(grid[static_cast<std::size_t>(std::min(best + 1, last))]);
  const auto score = [&](double x) {
    const double p = std::exp(x);
    const MetricsReport m = evaluator(p);
    tracker.offer(p, m);
    return is_feasible(m, ps_min) ? m.throughput_t : -1.0;
  };
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - phi * (hi - lo);
  double x2 = lo + phi * (hi - lo);
  double f1 = score(x1);
  double f2 = score(x2);
  const double tol = std::log1p(search.relative_tolerance);
  while (hi - lo > tol) {
    if (f1 >= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - phi * (hi - lo);
      f1 = score(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + phi * (hi - lo);
      f2 = score(x2);
    }
  }
  return out;
}

ThresholdEvaluator mc_evaluator(std::shared_ptr<const PathBatch> batch) {
  if (!batch) throw std::invalid_argument("null path batch");
  return [batch](double p_th) {
    const ScenarioConfig& cfg = batch->config();
    return estimate_from_tally(batch->evaluate(std::max(p_th, batch->threshold_floor())), cfg.r, cfg.l_f);
  };
}

ThresholdEvaluator analytic_evaluator(const ScenarioConfig& cfg, std::uint64_t mc_samples) {
  cfg.validate();
  if (cfg.policy == Policy::kHard || cfg.policy == Policy::kSoft)
    throw ConfigError("hard and soft feedback have no analytic evaluator; use the mc engine");
  if (cfg.protocol == Protocol::kIncrementalRedundancy && cfg.policy == Policy::kLocal) {
    auto paths = std::make_shared<const IrErrorPaths>(
        IrErrorPaths::sample(cfg.r, cfg.k, cfg.snr, cfg.m_t, cfg.m_r_per_rrh, cfg.n_max, mc_samples, cfg.seed));
    return [paths, r = cfg.r, l_f = cfg.l_f](double p_th) {
      return report_from_profile(paths->local_profile(p_th), r, l_f);
    };
  }
  if (cfg.policy == Policy::kIdeal) {
    const MetricsReport fixed = report_from_profile(analytic_profile(cfg, cfg.p_th, mc_samples), cfg.r, cfg.l_f);
    return [fixed](double) { return fixed; };
  }
  return [cfg, mc_samples](double p_th) {
    return report_from_profile(analytic_profile(cfg, p_th, mc_samples), cfg.r, cfg.l_f);
  };
}

ThresholdEvaluator make_evaluator(const ScenarioConfig& cfg, EngineKind engine, std::uint64_t sessions,
                                  const Codebook* codebook) {
  if (engine == EngineKind::kAnalytic) return analytic_evaluator(cfg, sessions);
  return mc_evaluator(std::make_shared<const PathBatch>(PathBatch::simulate(cfg, codebook, sessions)));
}

OptimizationResult optimize_scenario(const ScenarioConfig& cfg, EngineKind engine, std::uint64_t sessions,
                                     const Codebook* codebook, const ThresholdSearch& search) {
  const ThresholdEvaluator eval = make_evaluator(cfg, engine, sessions, codebook);
  if (cfg.policy == Policy::kIdeal) {
    OptimizationResult out;
    out.report = eval(1.0);
    out.p_th = std::nan("");
    out.max_ps = out.report.ps_lower;
    out.max_ps_p_th = out.p_th;
    out.feasible = out.report.ps_lower >= cfg.ps_min;
    return out;
  }
  return optimize_threshold(eval, cfg.ps_min, search);
}

}  // namespace crharq
