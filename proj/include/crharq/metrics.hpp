#pragma once

#include <cstdint>
#include <span>
#include <string_view>

#include "crharq/analytic.hpp"
#include "crharq/engine.hpp"

namespace crharq {

enum class MetricsSource { kAnalytic, kMonteCarlo };

std::string_view to_string(MetricsSource s);

struct MetricsReport {
  double throughput_t = 0.0;    ///< bit/symbol
  double ps = 0.0;
  double expected_n = 1.0;
  double d_conventional = 0.0;  ///< slots
  double d_separated = 0.0;     ///< slots
  double throughput_se = 0.0;
  double ps_se = 0.0;
  double expected_n_se = 0.0;
  /// Wilson lower 95% bound on Ps for Monte Carlo reports; ps otherwise.
  double ps_lower = 0.0;
  MetricsSource source = MetricsSource::kAnalytic;
  /// Built from an upper-bound profile: T and Ps are lower bounds.
  bool from_bound = false;
};

struct Latency {
  double conventional = 0.0;
  double separated = 0.0;
};

/// E[N] = sum_{n < n_max} n P(STOP_n) + n_max P(RTX_{n_max-1}).
double expected_transmissions(const ProbabilityProfile& profile);
/// 1 - P(RTX_{n_max}).
double ps_ideal(const ProbabilityProfile& profile);
/// sum_n P(D_n | STOP_n) P(STOP_n).
double ps_local(const ProbabilityProfile& profile);
/// r Ps / E[N].
double throughput(double r, double ps, double expected_n);
/// D_c = E[N] (1 + L_f), D_s = E[N].
Latency latency(double expected_n, double l_f);

/// Wilson score lower bound; z = 1.96 gives the 95% two-sided interval.
double wilson_lower_bound(std::uint64_t successes, std::uint64_t trials, double z = 1.96);

MetricsReport report_from_profile(const ProbabilityProfile& profile, double r, double l_f);
MetricsReport estimate_from_tally(const SessionTally& tally, double r, double l_f);
MetricsReport estimate_from_sessions(std::span<const SessionOutcome> outcomes, double r, double l_f);

}  // namespace crharq
