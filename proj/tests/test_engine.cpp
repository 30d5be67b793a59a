#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <random>
#include <vector>

#include "crharq/analytic.hpp"
#include "crharq/engine.hpp"
#include "crharq/fbl.hpp"

using namespace crharq;

namespace {

const double kS3dB = 1.99526231496888;

ScenarioConfig fig4(Protocol p, Policy q, double p_th = 0.5) {
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

ComplexMatrix gain(double g) {
  ComplexMatrix h(1, 1);
  h(0, 0) = std::sqrt(g);
  return h;
}

void check_outcome_shape(const SessionOutcome& o, const ScenarioConfig& cfg) {
  REQUIRE(o.n_used == static_cast<int>(o.attempts.size()));
  REQUIRE(o.n_used >= 1);
  REQUIRE(o.n_used <= cfg.n_max);
  for (int i = 0; i + 1 < o.n_used; ++i) CHECK(o.attempts[i].decision == Decision::kRetransmit);
  if (o.success) {
    CHECK(o.attempts.back().decision == Decision::kStop);
    CHECK(o.attempts.back().decodable);
  }
  if (o.attempts.back().decision == Decision::kRetransmit) CHECK(o.n_used == cfg.n_max);
}

}  // namespace

TEST_CASE("decision rules") {
  CHECK(decide_ideal(true) == Decision::kStop);
  CHECK(decide_ideal(false) == Decision::kRetransmit);
  CHECK(decide_local_rrh(0.3, 0.5) == Feedback::kAck);
  CHECK(decide_local_rrh(0.98499, 0.5) == Feedback::kNak);
  CHECK(decide_local_rrh(0.5, 0.5) == Feedback::kAck);
  CHECK(decide_hard(std::vector<double>{0.9, 0.2, 0.8}, 0.5) == Decision::kStop);
  CHECK(decide_hard(std::vector<double>{0.9, 0.6, 0.8}, 0.5) == Decision::kRetransmit);
  CHECK_THROWS(decide_hard(std::vector<double>{}, 0.5));
}

TEST_CASE("hard feedback with one RRH equals the local rule") {
  std::mt19937_64 g(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 10000; ++i) {
    const double p = u(g), t = i % 10 == 0 ? p : u(g);
    const bool stop = decide_hard(std::vector<double>{p}, t) == Decision::kStop;
    CHECK(stop == (decide_local_rrh(p, t) == Feedback::kAck));
  }
}

TEST_CASE("soft decision on reconstructed channels") {
  std::vector<ChannelRealization> zero{ChannelRealization::from_entries(ComplexMatrix::Zero(3, 4))};
  CHECK(decide_soft(zero, 5.0, 100, 0.9, 10.0, 4) == Decision::kRetransmit);
  std::vector<ChannelRealization> unit{ChannelRealization::from_entries(gain(1.0))};
  CHECK(decide_soft(unit, 2.0, 50, 0.99, kS3dB, 1) == Decision::kStop);
  CHECK(decide_soft(unit, 2.0, 50, 0.98, kS3dB, 1) == Decision::kRetransmit);
}

TEST_CASE("certain decoding stops at the first attempt") {
  auto cfg = fig4(Protocol::kTypeI, Policy::kIdeal);
  cfg.n_max = 1;
  RandomStream rng(1);
  const auto o = run_session(cfg, nullptr, rng, [](int, int) { return gain(1e6); });
  CHECK(o.attempts[0].bbu_error_prob == 0.0);
  CHECK(o.success);
  CHECK(o.n_used == 1);
}

TEST_CASE("zero threshold never stops") {
  for (auto p : {Protocol::kTypeI, Protocol::kChaseCombining, Protocol::kIncrementalRedundancy}) {
    auto cfg = fig4(p, Policy::kLocal, 0.0);
    RandomStream rng(2);
    const auto o = run_session(cfg, nullptr, rng, [](int, int) { return gain(0.7); });
    CHECK(o.n_used == cfg.n_max);
    CHECK_FALSE(o.success);
    for (const auto& a : o.attempts) CHECK(a.decision == Decision::kRetransmit);
  }
}

TEST_CASE("injected channels of the wrong shape are rejected") {
  auto cfg = fig4(Protocol::kTypeI, Policy::kIdeal);
  RandomStream rng(3);
  CHECK_THROWS(run_session(cfg, nullptr, rng, [](int, int) { return ComplexMatrix::Zero(2, 1).eval(); }));
}

TEST_CASE("configuration errors are raised before simulation") {
  auto cfg = fig4(Protocol::kChaseCombining, Policy::kIdeal);
  cfg.m_t = 2;
  RandomStream rng(4);
  CHECK_THROWS_AS(run_session(cfg, nullptr, rng), ConfigError);
  auto soft = fig4(Protocol::kIncrementalRedundancy, Policy::kSoft);
  CHECK_THROWS_AS(run_session(soft, nullptr, rng), ConfigError);
}

TEST_CASE("TI local with unit threshold stops at once and succeeds w.p. 1 - E[Pe]") {
  const auto cfg = fig4(Protocol::kTypeI, Policy::kLocal, 1.0);
  const auto batch = PathBatch::simulate(cfg, nullptr, 1000000);
  const auto t = batch.evaluate(1.0);
  CHECK(t.stops[0] == t.sessions);
  const double expected = 1.0 - siso_mean_error_prob(2.0, 50, kS3dB);
  const double ps = static_cast<double>(t.successes) / t.sessions;
  const double se = std::sqrt(expected * (1.0 - expected) / t.sessions);
  CHECK(std::abs(ps - expected) < 3 * se);
}

TEST_CASE("session transcripts respect the protocol invariants") {
  std::mt19937_64 g(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto p : {Protocol::kTypeI, Protocol::kChaseCombining, Protocol::kIncrementalRedundancy}) {
    for (auto q : {Policy::kIdeal, Policy::kLocal, Policy::kHard}) {
      auto cfg = fig4(p, q, u(g));
      for (int s = 0; s < 2000; ++s) {
        RandomStream rng = session_stream(cfg, static_cast<std::uint64_t>(s));
        const auto o = run_session(cfg, nullptr, rng);
        check_outcome_shape(o, cfg);
        if (q == Policy::kIdeal) {
          CHECK(o.success == o.attempts.back().decodable);
          for (const auto& a : o.attempts) CHECK((a.decision == Decision::kStop) == a.decodable);
        }
        if (p != Protocol::kTypeI) {
          for (int i = 1; i < o.n_used; ++i)
            CHECK(o.attempts[i].bbu_error_prob <= o.attempts[i - 1].bbu_error_prob + 1e-12);
        }
      }
    }
  }
}

TEST_CASE("per-attempt decodability has marginal 1 - Pe") {
  // With p_th = 0 every session runs all attempts, so each attempt's
  // decodability can be compared with its own error probability.
  for (auto p : {Protocol::kTypeI, Protocol::kChaseCombining, Protocol::kIncrementalRedundancy}) {
    auto cfg = fig4(p, Policy::kLocal, 0.0);
    const int sessions = 200000;
    std::vector<double> diff(5, 0.0), diff2(5, 0.0);
    for (int s = 0; s < sessions; ++s) {
      RandomStream rng = session_stream(cfg, static_cast<std::uint64_t>(s));
      const auto o = run_session(cfg, nullptr, rng);
      for (int n = 0; n < 5; ++n) {
        const double d = (o.attempts[n].decodable ? 1.0 : 0.0) - (1.0 - o.attempts[n].bbu_error_prob);
        diff[n] += d;
        diff2[n] += d * d;
      }
    }
    for (int n = 0; n < 5; ++n) {
      const double mean = diff[n] / sessions;
      const double se = std::sqrt((diff2[n] / sessions - mean * mean) / sessions);
      CHECK(std::abs(mean) < 3.5 * se);
    }
  }
}

TEST_CASE("hard feedback with one RRH reproduces local sessions") {
  for (auto p : {Protocol::kTypeI, Protocol::kChaseCombining, Protocol::kIncrementalRedundancy}) {
    auto local = fig4(p, Policy::kLocal, 0.2);
    auto hard = fig4(p, Policy::kHard, 0.2);
    for (int s = 0; s < 3000; ++s) {
      RandomStream a = session_stream(local, static_cast<std::uint64_t>(s));
      RandomStream b = session_stream(hard, static_cast<std::uint64_t>(s));
      const auto x = run_session(local, nullptr, a);
      const auto y = run_session(hard, nullptr, b);
      REQUIRE(x.n_used == y.n_used);
      CHECK(x.success == y.success);
    }
  }
}

TEST_CASE("unquantized soft feedback equals local feedback on the same channels") {
  auto local = fig4(Protocol::kIncrementalRedundancy, Policy::kLocal, 0.1);
  local.m_t = 3;
  auto soft = local;
  soft.policy = Policy::kSoft;
  const Codebook perfect = Codebook::passthrough(3);
  for (int s = 0; s < 3000; ++s) {
    RandomStream a = session_stream(local, static_cast<std::uint64_t>(s));
    RandomStream b = session_stream(soft, static_cast<std::uint64_t>(s));
    const auto x = run_session(local, nullptr, a);
    const auto y = run_session(soft, &perfect, b);
    REQUIRE(x.n_used == y.n_used);
    CHECK(x.success == y.success);
  }
}

TEST_CASE("path batches replay sessions exactly") {
  std::mt19937_64 g(10);
  std::uniform_real_distribution<double> logu(std::log(1e-6), 0.0);
  ScenarioConfig cran = fig4(Protocol::kIncrementalRedundancy, Policy::kHard);
  cran.m_t = 4;
  cran.m_r_per_rrh = {1, 1};
  cran.r = 5.0;
  cran.k = 100;
  cran.n_max = 6;
  std::vector<ScenarioConfig> cfgs{cran};
  for (auto p : {Protocol::kTypeI, Protocol::kChaseCombining, Protocol::kIncrementalRedundancy})
    for (auto q : {Policy::kIdeal, Policy::kLocal}) cfgs.push_back(fig4(p, q));
  for (const auto& base : cfgs) {
    const auto batch = PathBatch::simulate(base, nullptr, 3000);
    for (int rep = 0; rep < 4; ++rep) {
      ScenarioConfig cfg = base;
      cfg.p_th = rep == 0 ? 1e-6 : std::exp(logu(g));
      SessionTally direct(cfg.n_max);
      for (std::uint64_t s = 0; s < batch.sessions(); ++s) {
        RandomStream rng = session_stream(cfg, s);
        const auto o = run_session(cfg, nullptr, rng);
        const auto r = batch.replay(s, cfg.p_th);
        REQUIRE(o.n_used == r.n_used);
        CHECK(o.success == r.success);
        for (int n = 0; n < o.n_used; ++n) CHECK(o.attempts[n].decodable == r.attempts[n].decodable);
        direct.add(o);
      }
      const auto replayed = batch.evaluate(cfg.p_th);
      CHECK(replayed.successes == direct.successes);
      CHECK(replayed.sum_n == direct.sum_n);
      CHECK(replayed.sum_n2 == direct.sum_n2);
      CHECK(replayed.stops == direct.stops);
      CHECK(replayed.undecodable_stops == direct.undecodable_stops);
      CHECK(replayed.decodable_retransmissions == direct.decodable_retransmissions);
    }
    if (base.policy != Policy::kIdeal) CHECK_THROWS(batch.evaluate(1e-7));
  }
}

TEST_CASE("ideal replay of a local batch matches an ideal simulation") {
  const auto local = fig4(Protocol::kIncrementalRedundancy, Policy::kLocal);
  const auto ideal = fig4(Protocol::kIncrementalRedundancy, Policy::kIdeal);
  const auto a = PathBatch::simulate(local, nullptr, 5000).evaluate_ideal();
  const auto b = PathBatch::simulate(ideal, nullptr, 5000).evaluate_ideal();
  CHECK(a.successes == b.successes);
  CHECK(a.sum_n == b.sum_n);
}

TEST_CASE("batches do not depend on the worker count") {
  const auto cfg = fig4(Protocol::kChaseCombining, Policy::kLocal);
  setenv("CRHARQ_WORKERS", "1", 1);
  const auto one = PathBatch::simulate(cfg, nullptr, 20000).evaluate(0.05);
  setenv("CRHARQ_WORKERS", "4", 1);
  const auto four = PathBatch::simulate(cfg, nullptr, 20000).evaluate(0.05);
  unsetenv("CRHARQ_WORKERS");
  CHECK(one.successes == four.successes);
  CHECK(one.sum_n == four.sum_n);
  CHECK(one.stops == four.stops);
}

TEST_CASE("mismatch counts follow the two local error types") {
  const auto cfg = fig4(Protocol::kTypeI, Policy::kLocal, 0.3);
  SessionTally t(cfg.n_max);
  std::uint64_t undecodable_stop = 0, decodable_rtx = 0;
  for (int s = 0; s < 20000; ++s) {
    RandomStream rng = session_stream(cfg, static_cast<std::uint64_t>(s));
    const auto o = run_session(cfg, nullptr, rng);
    for (const auto& a : o.attempts) {
      if (a.decision == Decision::kStop && !a.decodable) ++undecodable_stop;
      if (a.decision == Decision::kRetransmit && a.decodable) ++decodable_rtx;
    }
    t.add(o);
  }
  CHECK(t.undecodable_stops == undecodable_stop);
  CHECK(t.decodable_retransmissions == decodable_rtx);
  CHECK(undecodable_stop > 0);
  CHECK(decodable_rtx > 0);
  std::uint64_t stops = 0;
  for (auto s : t.stops) stops += s;
  CHECK(stops - t.undecodable_stops == t.successes);
}
