#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "crharq/channel.hpp"
#include "crharq/fbl.hpp"
#include "crharq/quantizer.hpp"
#include "crharq/random.hpp"
#include "crharq/scenario.hpp"

namespace crharq {

enum class Decision { kStop, kRetransmit };
enum class Feedback { kAck, kNak };

struct AttemptRecord {
  int attempt_n = 0;             ///< 1-based
  double bbu_error_prob = 1.0;   ///< P_e of the BBU from true CSI of everything received so far
  Decision decision = Decision::kRetransmit;
  bool decodable = false;        ///< BBU decoding outcome for this attempt
};

struct SessionOutcome {
  std::vector<AttemptRecord> attempts;
  int n_used = 0;
  bool success = false;
};

/// Replaces the Rayleigh sampler: returns H_{rrh,attempt} (attempt is 1-based).
using ChannelHook = std::function<ComplexMatrix(int attempt, int rrh)>;

Decision decide_ideal(bool decodable);

/// ACK iff p_e <= p_th.
Feedback decide_local_rrh(double p_e, double p_th);

/// STOP iff at least one RRH acknowledges, i.e. some p_e <= p_th.
Decision decide_hard(std::span<const double> per_rrh_p_e, double p_th);

/// STOP iff P_e evaluated on the stacked reconstructed channels
/// diag(H^_1, ..., H^_n) is <= p_th. Each entry of reconstructed_history is one
/// attempt's L x m_t stack of reconstructed RRH rows.
Decision decide_soft(std::span<const ChannelRealization> reconstructed_history, double r, int k,
                     double p_th, double snr, int m_t);

/// Simulates one HARQ session. Per attempt the stream yields the RRH channels
/// (RRH order, row-major entries) and then one normal variate driving the
/// BBU decoder. The decoder is modeled by its accumulated information density
/// I_n ~ N(k C_n, k V_n): TI restarts it every slot, CC and IR extend it by
/// independent Gaussian increments, and attempt n is decodable iff I_n >= k r,
/// so each attempt is decodable with probability exactly 1 - P_e.
///
/// `codebook` is required when cfg.policy is soft. Throws ConfigError for an
/// invalid scenario.
SessionOutcome run_session(const ScenarioConfig& cfg, const Codebook* codebook, RandomStream& rng,
                           const ChannelHook& hook = {});

/// Session i of a scenario always uses RandomStream::derive(cfg.seed, kSession, i).
RandomStream session_stream(const ScenarioConfig& cfg, std::uint64_t session_index);

/// Running per-attempt session counts; the common currency between the engine
/// and the metrics estimators.
struct SessionTally {
  std::uint64_t sessions = 0;
  std::uint64_t successes = 0;
  double sum_n = 0.0;
  double sum_n2 = 0.0;
  double sum_success_n = 0.0;
  std::vector<std::uint64_t> stops;            ///< stops[n-1]: sessions stopping at attempt n
  std::vector<std::uint64_t> stop_successes;   ///< ... and decodable there
  std::uint64_t undecodable_stops = 0;         ///< Table I: STOP while undecodable
  std::uint64_t decodable_retransmissions = 0; ///< Table I: RTX while decodable

  explicit SessionTally(int n_max = 1) : stops(n_max, 0), stop_successes(n_max, 0) {}
  int n_max() const { return static_cast<int>(stops.size()); }
  void add(const SessionOutcome& outcome);
  SessionTally& operator+=(const SessionTally& o);
};

/// Sessions simulated once and replayed for any threshold (common random
/// numbers). Each path keeps, per attempt, the policy's decision statistic and
/// the BBU decodability. A path is cut after the first attempt at which the
/// statistic is <= threshold_floor and some attempt has been decodable, so
/// replay is exact for every p_th >= threshold_floor and for the ideal policy.
class PathBatch {
 public:
  static PathBatch simulate(const ScenarioConfig& cfg, const Codebook* codebook,
                            std::uint64_t sessions, double threshold_floor = 1e-6);

  /// Replays the scenario's own policy at threshold p_th.
  SessionTally evaluate(double p_th) const;
  /// Replays the same channels under ideal BBU feedback.
  SessionTally evaluate_ideal() const;

  /// Equivalent to run_session(cfg with p_th) on session i.
  SessionOutcome replay(std::uint64_t session, double p_th) const;

  std::uint64_t sessions() const { return offsets_.size() - 1; }
  double threshold_floor() const { return floor_; }
  const ScenarioConfig& config() const { return cfg_; }

 private:
  ScenarioConfig cfg_;
  double floor_ = 0.0;
  std::vector<std::uint64_t> offsets_{0};
  std::vector<double> metric_;
  std::vector<std::uint8_t> decodable_;
};

}  // namespace crharq
