#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "crharq/analytic.hpp"
#include "crharq/engine.hpp"
#include "crharq/fbl.hpp"
#include "crharq/metrics.hpp"

using namespace crharq;

namespace {

const double kS3dB = 1.99526231496888;

double pe_siso(double r, int k, double s, double x) {
  return fbl::error_prob(r, k, std::vector<double>{x}, s, 1);
}

void check_profile(const ProbabilityProfile& p) {
  REQUIRE(p.rtx_probs.size() >= 2);
  CHECK(p.rtx_probs[0] == 1.0);
  for (std::size_t n = 1; n < p.rtx_probs.size(); ++n) {
    CHECK(p.rtx_probs[n] >= 0.0);
    CHECK(p.rtx_probs[n] <= p.rtx_probs[n - 1] + 1e-15);
  }
  double total = p.rtx_probs.back();
  for (int n = 1; n <= p.n_max(); ++n) {
    CHECK(p.stop_prob(n) >= -1e-15);
    total += p.stop_prob(n);
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  for (double d : p.stop_decode_probs) {
    CHECK(d >= 0.0);
    CHECK(d <= 1.0);
  }
}

ScenarioConfig fig4(Protocol p, Policy q, double p_th) {
  ScenarioConfig c;
  c.snr = kS3dB;
  c.k = 50;
  c.r = 2.0;
  c.n_max = 5;
  c.protocol = p;
  c.policy = q;
  c.p_th = p_th;
  return c;
}

void check_cross_engine(const ScenarioConfig& cfg, const ProbabilityProfile& profile, std::uint64_t sessions) {
  const auto mc = estimate_from_tally(PathBatch::simulate(cfg, nullptr, sessions).evaluate(cfg.p_th), cfg.r, cfg.l_f);
  const auto an = report_from_profile(profile, cfg.r, cfg.l_f);
  CHECK(std::abs(mc.ps - an.ps) < 3 * std::hypot(mc.ps_se, an.ps_se));
  CHECK(std::abs(mc.expected_n - an.expected_n) < 3 * std::hypot(mc.expected_n_se, an.expected_n_se));
  CHECK(std::abs(mc.throughput_t - an.throughput_t) < 3 * std::hypot(mc.throughput_se, an.throughput_se));
}

}  // namespace

TEST_CASE("TI ideal approaches outage probability at large k") {
  const double r = 0.02;
  const double outage = -std::expm1(-(std::exp2(r) - 1.0) / kS3dB);
  const auto p = ti_ideal_profile(r, 1000000, kS3dB, 1, 1, 3);
  CHECK(std::abs(p.rtx_probs[1] - outage) < 1e-3);
  CHECK(p.method == ProfileMethod::kExact);
  check_profile(p);
}

TEST_CASE("TI ideal at zero SNR never succeeds") {
  const auto p = ti_ideal_profile(2.0, 50, 0.0, 1, 1, 4);
  for (double v : p.rtx_probs) CHECK(v == 1.0);
}

TEST_CASE("SISO mean error probability against brute-force Monte Carlo") {
  double err = 0.0;
  const double q = siso_mean_error_prob(2.0, 50, kS3dB, &err);
  CHECK(err < 1e-9);
  RandomStream rng(21);
  const int n = 10000000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double pe = pe_siso(2.0, 50, kS3dB, std::norm(rng.complex_normal()));
    sum += pe;
    sum2 += pe * pe;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sum2 / n - mean * mean) / n);
  CHECK(std::abs(mean - q) < 3 * se);
  CHECK(ti_ideal_profile(2.0, 50, kS3dB, 1, 1, 5).rtx_probs[3] == doctest::Approx(q * q * q).epsilon(1e-14));
}

TEST_CASE("MIMO TI ideal uses eigenvalue sampling") {
  const auto p = ti_ideal_profile(3.0, 100, 2.0, 2, 2, 3, 200000, 5);
  CHECK(p.method == ProfileMethod::kMcIntegration);
  CHECK(p.rtx_error[1] > 0.0);
  check_profile(p);
  const auto bound = ir_ideal_bound(3.0, 100, 2.0, 2, {2}, 1, 200000, 6);
  CHECK(std::abs(bound.rtx_probs[1] - p.rtx_probs[1]) < 3 * std::hypot(bound.rtx_error[1], p.rtx_error[1]));
}

TEST_CASE("gamma threshold") {
  CHECK(gamma_threshold(2.0, 50, 0.98499, kS3dB) == doctest::Approx(1.0).epsilon(5e-4));
  CHECK(gamma_threshold(2.0, 50, 0.5, kS3dB) == doctest::Approx(3.0 / kS3dB).epsilon(1e-8));
  CHECK(std::isinf(gamma_threshold(2.0, 50, 0.0, kS3dB)));
  CHECK(gamma_threshold(2.0, 50, 1.0, kS3dB) == 0.0);
  double previous = 0.0;
  for (double p : {0.999, 0.9, 0.5, 0.1, 1e-2, 1e-4, 1e-6}) {
    const double g = gamma_threshold(2.0, 50, p, kS3dB);
    CHECK(std::abs(pe_siso(2.0, 50, kS3dB, g) - p) <= 1e-10);
    CHECK(g > previous);
    previous = g;
  }
}

TEST_CASE("TI local limits and cross-engine agreement") {
  const double q = siso_mean_error_prob(2.0, 50, kS3dB);
  const auto all = ti_local_profile(2.0, 50, kS3dB, 1.0, 5);
  CHECK(all.rtx_probs[1] == 0.0);
  CHECK(all.stop_decode_probs[0] == doctest::Approx(1.0 - q).epsilon(1e-9));
  const auto none = ti_local_profile(2.0, 50, kS3dB, 0.0, 5);
  CHECK(none.rtx_probs[5] == 1.0);
  const auto mid = ti_local_profile(2.0, 50, kS3dB, 0.1, 5);
  check_profile(mid);
  check_cross_engine(fig4(Protocol::kTypeI, Policy::kLocal, 0.1), mid, 400000);
}

TEST_CASE("CC ideal bound") {
  const auto p = cc_ideal_bound(2.0, 50, kS3dB, 5);
  CHECK(p.is_bound());
  CHECK(p.rtx_probs[1] == doctest::Approx(siso_mean_error_prob(2.0, 50, kS3dB)).epsilon(1e-10));
  check_profile(p);
  const auto t = PathBatch::simulate(fig4(Protocol::kChaseCombining, Policy::kIdeal, 0.5), nullptr, 400000)
                     .evaluate_ideal();
  std::uint64_t alive = t.sessions;
  for (int n = 1; n <= 5; ++n) {
    alive -= t.stops[n - 1];
    const double mc = static_cast<double>(alive) / t.sessions;
    const double se = std::sqrt(mc * (1 - mc) / t.sessions);
    CHECK(p.rtx_probs[n] >= mc - 3 * se);
  }
}

TEST_CASE("CC local: Delta identity and closed form") {
  const double r = 2.0, s = kS3dB;
  const int k = 50;
  for (double p_th : {0.3, 0.05, 1e-3}) {
    const double g = gamma_threshold(r, k, p_th, s);
    const auto prof = cc_local_profile(r, k, s, p_th, 5);
    check_profile(prof);
    CHECK(prof.limit_flagged.empty());
    // Closed form of the nested integral: the last gain above the boundary is
    // a shifted unit exponential whatever the earlier gains were.
    double tail = 0.0;
    for (double t = g; t < g + 40.0; t += 1e-4) {
      const double a = t + 0.5e-4;
      tail += (1.0 - pe_siso(r, k, s, a)) * std::exp(-(a - g)) * 1e-4;
    }
    for (int n = 1; n <= 5; ++n) {
      CHECK(prof.stop_decode_probs[n - 1] == doctest::Approx(tail).epsilon(1e-6));
      const double delta_cdf = (n == 1 ? 1.0 : boost::math::gamma_p(n - 1, g)) - boost::math::gamma_p(n, g);
      const double delta_closed = std::exp(-g) * std::pow(g, n - 1) / boost::math::factorial<double>(n - 1);
      CHECK(delta_cdf == doctest::Approx(delta_closed).epsilon(1e-10));
      CHECK(prof.stop_prob(n) == doctest::Approx(delta_closed).epsilon(1e-10));
    }
  }
  CHECK(cc_local_profile(r, k, s, 0.2, 5).stop_decode_probs[0] ==
        doctest::Approx(ti_local_profile(r, k, s, 0.2, 5).stop_decode_probs[0]).epsilon(1e-12));
}

TEST_CASE("CC local Delta against two-dimensional Monte Carlo") {
  const double g = gamma_threshold(2.0, 50, 0.05, kS3dB);
  RandomStream rng(22);
  const int n = 1000000;
  for (int attempt = 2; attempt <= 4; ++attempt) {
    int hits = 0;
    for (int i = 0; i < n; ++i) {
      double prior = 0.0;
      for (int j = 0; j < attempt - 1; ++j) prior += std::norm(rng.complex_normal());
      const double last = std::norm(rng.complex_normal());
      if (prior < g && prior + last >= g) ++hits;
    }
    const double p = static_cast<double>(hits) / n;
    const double expected = std::exp(-g) * std::pow(g, attempt - 1) / boost::math::factorial<double>(attempt - 1);
    CHECK(std::abs(p - expected) < 3 * std::sqrt(expected * (1 - expected) / n));
  }
}

TEST_CASE("CC local degenerate limits") {
  const auto p1 = cc_local_profile(2.0, 50, kS3dB, 1.0, 4);
  CHECK(p1.rtx_probs[1] == 0.0);
  CHECK(p1.limit_flagged.size() == 3);
  const double q = siso_mean_error_prob(2.0, 50, kS3dB);
  for (double d : p1.stop_decode_probs) CHECK(d == doctest::Approx(1.0 - q).epsilon(1e-9));
  const auto p0 = cc_local_profile(2.0, 50, kS3dB, 0.0, 4);
  CHECK(p0.rtx_probs[4] == 1.0);
}

TEST_CASE("CC local cross-engine agreement") {
  const auto cfg = fig4(Protocol::kChaseCombining, Policy::kLocal, 0.05);
  check_cross_engine(cfg, cc_local_profile(2.0, 50, kS3dB, 0.05, 5), 400000);
}

TEST_CASE("SISO quadratures are stable under tighter tolerance") {
  for (int n = 1; n <= 5; ++n) {
    const auto f = [](double x) { return pe_siso(2.0, 50, kS3dB, x); };
    const double a = gamma_expectation(f, n, 3.0 / kS3dB, nullptr, 1e-10);
    const double b = gamma_expectation(f, n, 3.0 / kS3dB, nullptr, 1e-13);
    CHECK(std::abs(a - b) < 1e-8);
  }
}

TEST_CASE("IR ideal bound") {
  const auto p = ir_ideal_bound(2.0, 50, kS3dB, 1, {1}, 5, 400000, 3);
  check_profile(p);
  const double q = siso_mean_error_prob(2.0, 50, kS3dB);
  CHECK(std::abs(p.rtx_probs[1] - q) < 3 * p.rtx_error[1]);
  const auto paths = IrErrorPaths::sample(2.0, 50, kS3dB, 1, {1}, 5, 100000, 4);
  for (std::uint64_t i = 0; i < paths.samples(); ++i)
    for (int n = 2; n <= 5; ++n) CHECK(paths.error_prob(i, n) <= paths.error_prob(i, n - 1) + 1e-12);
}

TEST_CASE("C-RAN IR ideal bound against the engine") {
  ScenarioConfig cfg;
  cfg.snr = db_to_linear(10.0);
  cfg.m_t = 4;
  cfg.m_r_per_rrh = {1, 1, 1};
  cfg.r = 5.0;
  cfg.k = 100;
  cfg.n_max = 10;
  cfg.protocol = Protocol::kIncrementalRedundancy;
  cfg.policy = Policy::kIdeal;
  const auto bound = ir_ideal_bound(cfg.r, cfg.k, cfg.snr, cfg.m_t, cfg.m_r_per_rrh, cfg.n_max, 200000, 7);
  check_profile(bound);
  const auto t = PathBatch::simulate(cfg, nullptr, 200000).evaluate_ideal();
  std::uint64_t alive = t.sessions;
  for (int n = 1; n <= cfg.n_max; ++n) {
    alive -= t.stops[n - 1];
    const double mc = static_cast<double>(alive) / t.sessions;
    const double se = std::hypot(std::sqrt(mc * (1 - mc) / t.sessions), bound.rtx_error[n]);
    CHECK(bound.rtx_probs[n] >= mc - 3 * se);
    if (n == 1) CHECK(std::abs(bound.rtx_probs[1] - mc) < 3 * se);
  }
}

TEST_CASE("IR local profile") {
  const auto paths = IrErrorPaths::sample(2.0, 50, kS3dB, 1, {1}, 5, 200000, 8);
  const auto all = paths.local_profile(1.0);
  CHECK(all.rtx_probs[1] == 0.0);
  const auto mid = paths.local_profile(0.05);
  check_profile(mid);
  CHECK(mid.method == ProfileMethod::kMcIntegration);
  check_cross_engine(fig4(Protocol::kIncrementalRedundancy, Policy::kLocal, 0.05),
                     ir_local_profile(2.0, 50, kS3dB, 0.05, 5, 400000, 9), 400000);
}

TEST_CASE("analytic dispatch") {
  auto hard = fig4(Protocol::kIncrementalRedundancy, Policy::kHard, 0.1);
  CHECK_THROWS_AS(analytic_profile(hard, 0.1), ConfigError);
  auto ti = fig4(Protocol::kTypeI, Policy::kLocal, 0.1);
  ti.m_t = 2;
  CHECK_THROWS_AS(analytic_profile(ti, 0.1), ConfigError);
  const auto cc = analytic_profile(fig4(Protocol::kChaseCombining, Policy::kIdeal, 0.1), 0.1);
  CHECK(cc.is_bound());
}
