#include "crharq/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace crharq {

std::string_view to_string(MetricsSource s) {
  return s == MetricsSource::kAnalytic ? "analytic" : "mc";
}

double expected_transmissions(const ProbabilityProfile& profile) {
  const int n_max = profile.n_max();
  if (n_max < 1) throw std::invalid_argument("empty profile");
  double en = 0.0;
  for (int n = 1; n < n_max; ++n) en += n * profile.stop_prob(n);
  en += n_max * profile.rtx_probs[static_cast<std::size_t>(n_max - 1)];
  return std::clamp(en, 1.0, static_cast<double>(n_max));
}

double ps_ideal(const ProbabilityProfile& profile) {
  return std::clamp(1.0 - profile.rtx_probs.back(), 0.0, 1.0);
}

double ps_local(const ProbabilityProfile& profile) {
  if (static_cast<int>(profile.stop_decode_probs.size()) != profile.n_max())
    throw std::invalid_argument("profile has no P(D|STOP) entries");
  double ps = 0.0;
  for (int n = 1; n <= profile.n_max(); ++n) {
    const double stop = profile.stop_prob(n);
    if (stop > 0.0) ps += profile.stop_decode_probs[static_cast<std::size_t>(n - 1)] * stop;
  }
  return std::clamp(ps, 0.0, ps_ideal(profile));
}

double throughput(double r, double ps, double expected_n) {
  if (!(expected_n > 0.0)) throw std::invalid_argument("E[N] must be positive");
  return r * ps / expected_n;
}

Latency latency(double expected_n, double l_f) {
  return {expected_n * (1.0 + l_f), expected_n};
}

double wilson_lower_bound(std::uint64_t successes, std::uint64_t trials, double z) {
  if (trials == 0) return 0.0;
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double centre = p + z2 / (2.0 * n);
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
  return std::max(0.0, (centre - half) / (1.0 + z2 / n));
}

namespace {

void fill_derived(MetricsReport& m, double r, double l_f) {
  m.throughput_t = throughput(r, m.ps, m.expected_n);
  const Latency d = latency(m.expected_n, l_f);
  m.d_conventional = d.conventional;
  m.d_separated = d.separated;
}

}  // namespace

MetricsReport report_from_profile(const ProbabilityProfile& profile, double r, double l_f) {
  MetricsReport m;
  m.source = MetricsSource::kAnalytic;
  m.from_bound = profile.is_bound();
  const bool ideal = profile.stop_decode_probs.empty();
  m.expected_n = expected_transmissions(profile);
  m.ps = ideal ? ps_ideal(profile) : ps_local(profile);

  // E[N] = 1 + sum_{n < n_max} P(RTX_n); errors are propagated linearly.
  const int n_max = profile.n_max();
  const bool has_err = static_cast<int>(profile.rtx_error.size()) == n_max + 1;
  if (has_err) {
    for (int n = 1; n < n_max; ++n) m.expected_n_se += profile.rtx_error[static_cast<std::size_t>(n)];
    if (ideal) {
      m.ps_se = profile.rtx_error.back();
    } else {
      for (int n = 1; n <= n_max; ++n) {
        const auto j = static_cast<std::size_t>(n - 1);
        const double d = profile.stop_decode_probs[j];
        const double de = profile.stop_decode_error.size() > j ? profile.stop_decode_error[j] : 0.0;
        m.ps_se += d * (profile.rtx_error[j] + profile.rtx_error[j + 1]) + de * profile.stop_prob(n);
      }
    }
  }
  fill_derived(m, r, l_f);
  if (!std::isnan(profile.ps_error)) {
    m.ps_se = profile.ps_error;
    m.expected_n_se = profile.expected_n_error;
    const double ratio = m.ps / m.expected_n;
    const double var = m.ps_se * m.ps_se - 2.0 * ratio * profile.ps_n_covariance +
                       ratio * ratio * m.expected_n_se * m.expected_n_se;
    m.throughput_se = r / m.expected_n * std::sqrt(std::max(0.0, var));
  } else {
    m.throughput_se = r * (m.ps_se / m.expected_n + m.ps * m.expected_n_se / (m.expected_n * m.expected_n));
  }
  m.ps_lower = m.ps;
  return m;
}

MetricsReport estimate_from_tally(const SessionTally& t, double r, double l_f) {
  if (t.sessions == 0) throw std::invalid_argument("no sessions to estimate from");
  MetricsReport m;
  m.source = MetricsSource::kMonteCarlo;
  const double n = static_cast<double>(t.sessions);
  const double ps = static_cast<double>(t.successes) / n;
  const double en = t.sum_n / n;
  m.ps = ps;
  m.expected_n = en;
  fill_derived(m, r, l_f);
  if (t.sessions > 1) {
    const double var_x = ps * (1.0 - ps) * n / (n - 1.0);
    const double var_y = std::max(0.0, (t.sum_n2 / n - en * en) * n / (n - 1.0));
    const double cov = (t.sum_success_n / n - ps * en) * n / (n - 1.0);
    m.ps_se = std::sqrt(var_x / n);
    m.expected_n_se = std::sqrt(var_y / n);
    // First-order expansion of the ratio r * mean(X) / mean(Y).
    const double ratio = ps / en;
    const double var_t = std::max(0.0, var_x - 2.0 * ratio * cov + ratio * ratio * var_y);
    m.throughput_se = r / en * std::sqrt(var_t / n);
  }
  m.ps_lower = wilson_lower_bound(t.successes, t.sessions);
  return m;
}

MetricsReport estimate_from_sessions(std::span<const SessionOutcome> outcomes, double r, double l_f) {
  if (outcomes.empty()) throw std::invalid_argument("no sessions to estimate from");
  int n_max = 1;
  for (const auto& o : outcomes) n_max = std::max(n_max, o.n_used);
  SessionTally t(n_max);
  for (const auto& o : outcomes) t.add(o);
  return estimate_from_tally(t, r, l_f);
}

}  // namespace crharq
