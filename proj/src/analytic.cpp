#include "crharq/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/gamma.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "crharq/channel.hpp"
#include "crharq/fbl.hpp"
#include "crharq/parallel.hpp"
#include "crharq/random.hpp"

namespace crharq {

namespace {

using Kronrod = boost::math::quadrature::gauss_kronrod<double, 31>;
constexpr unsigned kMaxDepth = 18;
constexpr double kTailMass = 1e-12;
constexpr std::uint64_t kShardSize = 4096;
constexpr double kDeltaFloor = 1e-250;

double siso_error_prob(double r, int k, double snr, double power) {
  const double lambda = std::max(0.0, power);
  return fbl::error_prob(r, k, std::span<const double>(&lambda, 1), snr, 1);
}

/// Channel power where a SISO slot's capacity equals r.
double capacity_knot(double r, double snr) {
  return snr > 0.0 ? std::expm1(r * std::log(2.0)) / snr : std::numeric_limits<double>::infinity();
}

/// Integral of g over [a, b] split at the interior knots.
double integrate_split(const std::function<double(double)>& g, double a, double b,
                       std::vector<double> knots, double tolerance, double* err) {
  knots.push_back(a);
  knots.push_back(b);
  std::sort(knots.begin(), knots.end());
  double total = 0.0;
  double total_err = 0.0;
  double lo = a;
  for (double x : knots) {
    if (!(x > lo) || x > b) continue;
    double e = 0.0;
    total += Kronrod::integrate(g, lo, x, kMaxDepth, tolerance, &e);
    total_err += e;
    lo = x;
  }
  if (err) *err = total_err;
  return total;
}

/// Integral of g(t) e^{-(t - a)} over [a, infinity).
double shifted_exponential_integral(const std::function<double(double)>& g, double a, double knot,
                                    double tolerance, double* err) {
  constexpr double kSpan = 45.0;
  const auto w = [&](double t) { return g(t) * std::exp(-(t - a)); };
  double e = 0.0;
  const double v = integrate_split(w, a, a + kSpan, {knot}, tolerance, &e);
  if (err) *err = e + std::exp(-kSpan);
  return v;
}

void check_siso_args(double r, int k, int n_max) {
  if (!(r > 0.0)) throw ConfigError("rate must be positive");
  if (k < 1) throw ConfigError("blocklength must be at least 1");
  if (n_max < 1) throw ConfigError("n_max must be at least 1");
}

/// Runs fn(rng, i) for samples 0..count-1 on deterministic shards.
template <typename Fn>
void for_each_sample(std::uint64_t count, std::uint64_t seed, Fn&& fn) {
  const std::uint64_t shards = (count + kShardSize - 1) / kShardSize;
  parallel_for(shards, [&](std::size_t s) {
    RandomStream rng = RandomStream::derive(seed, StreamFamily::kIntegration, s);
    const std::uint64_t end = std::min(count, (s + 1) * kShardSize);
    for (std::uint64_t i = s * kShardSize; i < end; ++i) fn(rng, i);
  });
}

}  // namespace

double gamma_expectation(const std::function<double(double)>& f, int attempts, double knot,
                         double* err, double tolerance, double sup_f) {
  if (attempts < 1) throw std::invalid_argument("need at least one attempt");
  const boost::math::gamma_distribution<double> law(attempts, 1.0);
  const double upper = boost::math::quantile(boost::math::complement(law, kTailMass));
  const auto g = [&](double x) { return f(x) * boost::math::pdf(law, x); };
  std::vector<double> knots;
  if (knot > 0.0 && knot < upper) knots.push_back(knot);
  if (attempts > 1) knots.push_back(attempts - 1.0);
  double e = 0.0;
  const double v = integrate_split(g, 0.0, upper, knots, tolerance, &e);
  if (err) *err = e + kTailMass * sup_f;
  return v;
}

double siso_mean_error_prob(double r, int k, double snr, double* err) {
  if (snr <= 0.0) {
    if (err) *err = 0.0;
    return 1.0;
  }
  return gamma_expectation([&](double x) { return siso_error_prob(r, k, snr, x); }, 1,
                           capacity_knot(r, snr), err);
}

double gamma_threshold(double r, int k, double p_th, double snr) {
  if (p_th <= 0.0) return std::numeric_limits<double>::infinity();
  if (p_th >= 1.0) return 0.0;
  if (snr <= 0.0) throw ConfigError("gamma threshold needs positive SNR");
  const auto pe = [&](double x) { return siso_error_prob(r, k, snr, x); };
  double hi = capacity_knot(r, snr);
  while (pe(hi) > p_th) {
    hi *= 2.0;
    if (!std::isfinite(hi)) return std::numeric_limits<double>::infinity();
  }
  double lo = 0.0;
  double mid = hi;
  for (int it = 0; it < 400; ++it) {
    mid = 0.5 * (lo + hi);
    const double p = pe(mid);
    if (std::abs(p - p_th) <= 1e-10) break;
    if (p > p_th) lo = mid;
    else hi = mid;
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) break;
  }
  return mid;
}

ProbabilityProfile ti_ideal_profile(double r, int k, double snr, int m_t, int m_r, int n_max,
                                    std::uint64_t mc_samples, std::uint64_t seed) {
  check_siso_args(r, k, n_max);
  if (m_t < 1 || m_r < 1) throw ConfigError("antenna counts must be positive");
  double mean = 0.0;
  double mean_err = 0.0;
  ProbabilityProfile p;
  if (m_t == 1 && m_r == 1) {
    mean = siso_mean_error_prob(r, k, snr, &mean_err);
    p.method = ProfileMethod::kExact;
  } else {
    if (mc_samples < 2) throw ConfigError("Monte Carlo integration needs at least two samples");
    std::vector<double> pe(mc_samples);
    for_each_sample(mc_samples, seed, [&](RandomStream& rng, std::uint64_t i) {
      const auto ch = sample_channel(m_r, m_t, rng);
      pe[i] = fbl::error_prob(r, k, ch.eigenvalues, snr, m_t);
    });
    mean = std::accumulate(pe.begin(), pe.end(), 0.0) / static_cast<double>(mc_samples);
    double ss = 0.0;
    for (double v : pe) ss += (v - mean) * (v - mean);
    mean_err = std::sqrt(ss / static_cast<double>(mc_samples - 1) / static_cast<double>(mc_samples));
    p.method = ProfileMethod::kMcIntegration;
  }
  p.rtx_probs.assign(n_max + 1, 1.0);
  p.rtx_error.assign(n_max + 1, 0.0);
  for (int n = 1; n <= n_max; ++n) {
    p.rtx_probs[n] = std::pow(mean, n);
    p.rtx_error[n] = n * std::pow(mean, n - 1) * mean_err;
  }
  return p;
}

ProbabilityProfile ti_local_profile(double r, int k, double snr, double p_th, int n_max) {
  check_siso_args(r, k, n_max);
  const double gamma = gamma_threshold(r, k, p_th, snr);
  ProbabilityProfile p;
  p.method = ProfileMethod::kExact;
  p.rtx_probs.assign(n_max + 1, 1.0);
  p.rtx_error.assign(n_max + 1, 0.0);
  const double nak = std::isinf(gamma) ? 1.0 : -std::expm1(-gamma);
  for (int n = 1; n <= n_max; ++n) p.rtx_probs[n] = std::pow(nak, n);

  double d = 1.0;
  double err = 0.0;
  if (std::isinf(gamma)) {
    p.limit_flagged.push_back(1);
  } else {
    d = shifted_exponential_integral([&](double t) { return 1.0 - siso_error_prob(r, k, snr, t); },
                                     gamma, capacity_knot(r, snr), 1e-12, &err);
  }
  p.stop_decode_probs.assign(n_max, d);
  p.stop_decode_error.assign(n_max, err);
  return p;
}

ProbabilityProfile cc_ideal_bound(double r, int k, double snr, int n_max) {
  check_siso_args(r, k, n_max);
  ProbabilityProfile p;
  p.method = ProfileMethod::kUpperBound;
  p.rtx_probs.assign(n_max + 1, 1.0);
  p.rtx_error.assign(n_max + 1, 0.0);
  if (snr <= 0.0) return p;
  const auto pe = [&](double x) { return siso_error_prob(r, k, snr, x); };
  for (int n = 1; n <= n_max; ++n) {
    double err = 0.0;
    p.rtx_probs[n] = std::clamp(gamma_expectation(pe, n, capacity_knot(r, snr), &err), 0.0, 1.0);
    p.rtx_error[n] = err;
  }
  return p;
}

ProbabilityProfile cc_local_profile(double r, int k, double snr, double p_th, int n_max) {
  check_siso_args(r, k, n_max);
  const double gamma = gamma_threshold(r, k, p_th, snr);
  ProbabilityProfile p;
  p.method = ProfileMethod::kExact;
  p.rtx_probs.assign(n_max + 1, 1.0);
  p.rtx_error.assign(n_max + 1, 0.0);
  p.stop_decode_probs.assign(n_max, 1.0);
  p.stop_decode_error.assign(n_max, 0.0);
  if (std::isinf(gamma)) {
    for (int n = 1; n <= n_max; ++n) p.limit_flagged.push_back(n);
    return p;
  }
  for (int n = 1; n <= n_max; ++n) p.rtx_probs[n] = boost::math::gamma_p(n, gamma);

  const double knot = capacity_knot(r, snr);
  const auto decoded = [&](double t) { return 1.0 - siso_error_prob(r, k, snr, t); };
  // First attempt, and the value the conditional tends to as Delta vanishes.
  double first_err = 0.0;
  const double first = shifted_exponential_integral(decoded, gamma, knot, 1e-12, &first_err);

  for (int n = 1; n <= n_max; ++n) {
    const auto i = static_cast<std::size_t>(n - 1);
    if (n == 1) {
      p.stop_decode_probs[i] = first;
      p.stop_decode_error[i] = first_err;
      continue;
    }
    const double delta = boost::math::gamma_p_derivative(static_cast<double>(n), gamma);
    if (!(delta > kDeltaFloor) || gamma <= 0.0) {
      p.stop_decode_probs[i] = first;
      p.stop_decode_error[i] = first_err;
      p.limit_flagged.push_back(n);
      continue;
    }
    // Outer: combined gain x of the first n-1 attempts below gamma.
    // Inner: last gain y with x + y >= gamma.
    const boost::math::gamma_distribution<double> prior(n - 1, 1.0);
    double inner_err_max = 0.0;
    const auto outer = [&](double x) {
      const double lo = gamma - x;
      double e = 0.0;
      const double inner = shifted_exponential_integral(
          [&](double y) { return decoded(x + y); }, lo, knot - x, 1e-10, &e);
      inner_err_max = std::max(inner_err_max, e);
      return boost::math::pdf(prior, x) * std::exp(-lo) * inner;
    };
    double outer_err = 0.0;
    const double numerator = integrate_split(outer, 0.0, gamma, {}, 1e-10, &outer_err);
    const double value = numerator / delta;
    p.stop_decode_probs[i] = std::clamp(value, 0.0, 1.0);
    p.stop_decode_error[i] = (outer_err + inner_err_max * boost::math::gamma_p(n - 1, gamma)) / delta;
  }
  return p;
}

IrErrorPaths IrErrorPaths::sample(double r, int k, double snr, int m_t, const std::vector<int>& m_r_per_rrh,
                                  int n_max, std::uint64_t samples, std::uint64_t seed) {
  check_siso_args(r, k, n_max);
  if (samples < 2) throw ConfigError("Monte Carlo integration needs at least two samples");
  if (m_t < 1 || m_r_per_rrh.empty()) throw ConfigError("antenna counts must be positive");
  int m_r = 0;
  for (int m : m_r_per_rrh) {
    if (m < 1) throw ConfigError("antenna counts must be positive");
    m_r += m;
  }
  IrErrorPaths t;
  t.n_max_ = n_max;
  t.samples_ = samples;
  t.pe_.resize(samples * static_cast<std::uint64_t>(n_max));
  for_each_sample(samples, seed, [&](RandomStream& rng, std::uint64_t i) {
    fbl::ChannelStats acc;
    double* row = t.pe_.data() + i * static_cast<std::uint64_t>(n_max);
    for (int n = 0; n < n_max; ++n) {
      const auto ch = sample_channel(m_r, m_t, rng);
      acc += fbl::channel_stats(ch.eigenvalues, snr, m_t);
      row[n] = fbl::error_prob(r, k, acc);
    }
  });
  return t;
}

ProbabilityProfile IrErrorPaths::ideal_bound() const {
  ProbabilityProfile p;
  p.method = ProfileMethod::kUpperBound;
  p.rtx_probs.assign(n_max_ + 1, 1.0);
  p.rtx_error.assign(n_max_ + 1, 0.0);
  const double N = static_cast<double>(samples_);
  for (int n = 1; n <= n_max_; ++n) {
    double sum = 0.0;
    double sum2 = 0.0;
    for (std::uint64_t i = 0; i < samples_; ++i) {
      const double v = error_prob(i, n);
      sum += v;
      sum2 += v * v;
    }
    const double mean = sum / N;
    p.rtx_probs[n] = mean;
    p.rtx_error[n] = std::sqrt(std::max(0.0, sum2 / N - mean * mean) / (N - 1.0));
  }
  return p;
}

ProbabilityProfile IrErrorPaths::local_profile(double p_th) const {
  ProbabilityProfile p;
  p.method = ProfileMethod::kMcIntegration;
  const auto nm = static_cast<std::size_t>(n_max_);
  std::vector<double> stops(nm, 0.0);
  std::vector<double> decoded(nm, 0.0);
  std::vector<double> decoded2(nm, 0.0);
  double sum_s = 0.0, sum_s2 = 0.0, sum_n = 0.0, sum_n2 = 0.0, sum_sn = 0.0;
  for (std::uint64_t i = 0; i < samples_; ++i) {
    double success = 0.0;
    double used = n_max_;
    for (int n = 1; n <= n_max_; ++n) {
      const double pe = error_prob(i, n);
      if (pe <= p_th) {
        const auto j = static_cast<std::size_t>(n - 1);
        stops[j] += 1.0;
        decoded[j] += 1.0 - pe;
        decoded2[j] += (1.0 - pe) * (1.0 - pe);
        success = 1.0 - pe;
        used = n;
        break;
      }
    }
    sum_s += success;
    sum_s2 += success * success;
    sum_n += used;
    sum_n2 += used * used;
    sum_sn += success * used;
  }
  const double N = static_cast<double>(samples_);
  const double ms = sum_s / N;
  const double mn = sum_n / N;
  p.ps_error = std::sqrt(std::max(0.0, sum_s2 / N - ms * ms) / (N - 1.0));
  p.expected_n_error = std::sqrt(std::max(0.0, sum_n2 / N - mn * mn) / (N - 1.0));
  p.ps_n_covariance = (sum_sn / N - ms * mn) / (N - 1.0);
  p.rtx_probs.assign(nm + 1, 1.0);
  p.rtx_error.assign(nm + 1, 0.0);
  p.stop_decode_probs.assign(nm, 1.0);
  p.stop_decode_error.assign(nm, 0.0);
  double alive = N;
  for (std::size_t j = 0; j < nm; ++j) {
    alive -= stops[j];
    const double q = alive / N;
    p.rtx_probs[j + 1] = q;
    p.rtx_error[j + 1] = std::sqrt(q * (1.0 - q) / N);
    if (stops[j] > 0.0) {
      const double ratio = decoded[j] / stops[j];
      p.stop_decode_probs[j] = ratio;
      // (1-pe) - ratio summed in squares over the STOP paths.
      const double ss = std::max(0.0, decoded2[j] - 2.0 * ratio * decoded[j] + ratio * ratio * stops[j]);
      p.stop_decode_error[j] = std::sqrt(ss) / stops[j];
    } else if (p.rtx_probs[j] > 0.0) {
      p.limit_flagged.push_back(static_cast<int>(j + 1));
    }
  }
  return p;
}

ProbabilityProfile ir_ideal_bound(double r, int k, double snr, int m_t, const std::vector<int>& m_r_per_rrh,
                                  int n_max, std::uint64_t mc_samples, std::uint64_t seed) {
  return IrErrorPaths::sample(r, k, snr, m_t, m_r_per_rrh, n_max, mc_samples, seed).ideal_bound();
}

ProbabilityProfile ir_local_profile(double r, int k, double snr, double p_th, int n_max,
                                    std::uint64_t mc_samples, std::uint64_t seed) {
  return IrErrorPaths::sample(r, k, snr, 1, {1}, n_max, mc_samples, seed).local_profile(p_th);
}

ProbabilityProfile analytic_profile(const ScenarioConfig& cfg, double p_th, std::uint64_t mc_samples) {
  cfg.validate();
  const int m_r = cfg.total_receive_antennas();
  switch (cfg.policy) {
    case Policy::kHard:
    case Policy::kSoft:
      throw ConfigError("hard and soft feedback have no analytic evaluator; use the mc engine");
    case Policy::kIdeal:
      switch (cfg.protocol) {
        case Protocol::kTypeI:
          return ti_ideal_profile(cfg.r, cfg.k, cfg.snr, cfg.m_t, m_r, cfg.n_max, mc_samples, cfg.seed);
        case Protocol::kChaseCombining:
          return cc_ideal_bound(cfg.r, cfg.k, cfg.snr, cfg.n_max);
        case Protocol::kIncrementalRedundancy:
          return ir_ideal_bound(cfg.r, cfg.k, cfg.snr, cfg.m_t, cfg.m_r_per_rrh, cfg.n_max, mc_samples,
                                cfg.seed);
      }
      break;
    case Policy::kLocal:
      switch (cfg.protocol) {
        case Protocol::kTypeI:
          if (!cfg.is_siso()) throw ConfigError("analytic TI local feedback is SISO only");
          return ti_local_profile(cfg.r, cfg.k, cfg.snr, p_th, cfg.n_max);
        case Protocol::kChaseCombining:
          return cc_local_profile(cfg.r, cfg.k, cfg.snr, p_th, cfg.n_max);
        case Protocol::kIncrementalRedundancy:
          return IrErrorPaths::sample(cfg.r, cfg.k, cfg.snr, cfg.m_t, cfg.m_r_per_rrh, cfg.n_max,
                                      mc_samples, cfg.seed)
              .local_profile(p_th);
      }
      break;
  }
  throw ConfigError("unsupported scenario");
}

}  // namespace crharq
