#include "crharq/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "crharq/parallel.hpp"

namespace crharq {

namespace {

constexpr std::uint64_t kShardSize = 4096;

/// Accumulates what a decoder has seen so far under a HARQ protocol.
class ProtocolAccumulator {
 public:
  ProtocolAccumulator(Protocol protocol, double snr, int m_t)
      : protocol_(protocol), snr_(snr), m_t_(m_t) {}

  fbl::ChannelStats add(const ChannelRealization& ch) {
    switch (protocol_) {
      case Protocol::kTypeI:
        return fbl::channel_stats(ch.eigenvalues, snr_, m_t_);
      case Protocol::kChaseCombining: {
        combined_gain2_ += ch.entries.squaredNorm();
        const double g = combined_gain2_;
        return fbl::channel_stats(std::span<const double>(&g, 1), snr_, m_t_);
      }
      case Protocol::kIncrementalRedundancy:
        parallel_ += fbl::channel_stats(ch.eigenvalues, snr_, m_t_);
        return parallel_;
    }
    return {};
  }

 private:
  Protocol protocol_;
  double snr_;
  int m_t_;
  double combined_gain2_ = 0.0;
  fbl::ChannelStats parallel_;
};

struct AttemptStep {
  double true_pe = 1.0;
  double metric = std::numeric_limits<double>::quiet_NaN();
  bool decodable = false;
};

/// One session's attempt-by-attempt evolution; shared by run_session and
/// PathBatch so both consume the random stream identically.
class AttemptStepper {
 public:
  AttemptStepper(const ScenarioConfig& cfg, const Codebook* codebook, RandomStream& rng,
                 const ChannelHook& hook)
      : cfg_(cfg),
        codebook_(codebook),
        rng_(rng),
        hook_(hook),
        bbu_(cfg.protocol, cfg.snr, cfg.m_t),
        soft_(cfg.protocol, cfg.snr, cfg.m_t) {
    if (cfg.policy == Policy::kHard)
      per_rrh_.assign(static_cast<std::size_t>(cfg.rrh_count()),
                      ProtocolAccumulator(cfg.protocol, cfg.snr, cfg.m_t));
  }

  AttemptStep next() {
    ++attempt_;
    const int L = cfg_.rrh_count();
    rrh_.clear();
    for (int l = 0; l < L; ++l) {
      const int m_r = cfg_.m_r_per_rrh[static_cast<std::size_t>(l)];
      if (hook_) {
        ComplexMatrix h = hook_(attempt_, l);
        if (h.rows() != m_r || h.cols() != cfg_.m_t)
          throw std::invalid_argument("injected channel has the wrong shape");
        rrh_.push_back(ChannelRealization::from_entries(std::move(h)));
      } else {
        rrh_.push_back(sample_channel(m_r, cfg_.m_t, rng_));
      }
    }
    const double z = rng_.normal();

    AttemptStep step;
    const fbl::ChannelStats st =
        L == 1 ? bbu_.add(rrh_.front()) : bbu_.add(stack_rrh_channels(rrh_));
    step.true_pe = fbl::error_prob(cfg_.r, cfg_.k, st);
    step.decodable = advance_decoder(st, z);

    switch (cfg_.policy) {
      case Policy::kIdeal:
        break;
      case Policy::kLocal:
        step.metric = step.true_pe;
        break;
      case Policy::kHard: {
        double best = 1.0;
        for (int l = 0; l < L; ++l) {
          const auto ls = per_rrh_[static_cast<std::size_t>(l)].add(rrh_[static_cast<std::size_t>(l)]);
          best = std::min(best, fbl::error_prob(cfg_.r, cfg_.k, ls));
        }
        step.metric = best;
        break;
      }
      case Policy::kSoft: {
        ComplexMatrix rows(L, cfg_.m_t);
        for (int l = 0; l < L; ++l) {
          const ComplexVector h = rrh_[static_cast<std::size_t>(l)].entries.row(0).transpose();
          rows.row(l) = codebook_->apply(h).transpose();
        }
        const auto ss = soft_.add(ChannelRealization::from_entries(std::move(rows)));
        step.metric = fbl::error_prob(cfg_.r, cfg_.k, ss);
        break;
      }
    }
    return step;
  }

  int attempt() const { return attempt_; }

 private:
  bool advance_decoder(const fbl::ChannelStats& st, double z) {
    const double k = cfg_.k;
    if (cfg_.protocol == Protocol::kTypeI) {
      density_ = k * st.capacity + std::sqrt(k * st.dispersion) * z;
    } else {
      const double dv = std::max(0.0, st.dispersion - prev_.dispersion);
      density_ += k * (st.capacity - prev_.capacity) + std::sqrt(k * dv) * z;
      prev_ = st;
    }
    return density_ >= k * cfg_.r;
  }

  const ScenarioConfig& cfg_;
  const Codebook* codebook_;
  RandomStream& rng_;
  const ChannelHook& hook_;
  ProtocolAccumulator bbu_;
  ProtocolAccumulator soft_;
  std::vector<ProtocolAccumulator> per_rrh_;
  std::vector<ChannelRealization> rrh_;
  fbl::ChannelStats prev_;
  double density_ = 0.0;
  int attempt_ = 0;
};

void check_session_inputs(const ScenarioConfig& cfg, const Codebook* codebook) {
  cfg.validate();
  if (cfg.policy == Policy::kSoft) {
    if (!codebook) throw ConfigError("soft feedback needs a codebook");
    if (codebook->m_t() != cfg.m_t) throw ConfigError("codebook dimension differs from m_t");
  }
}

}  // namespace

Decision decide_ideal(bool decodable) {
  return decodable ? Decision::kStop : Decision::kRetransmit;
}

Feedback decide_local_rrh(double p_e, double p_th) {
  return p_e <= p_th ? Feedback::kAck : Feedback::kNak;
}

Decision decide_hard(std::span<const double> per_rrh_p_e, double p_th) {
  if (per_rrh_p_e.empty()) throw std::invalid_argument("hard feedback needs at least one RRH");
  for (double p : per_rrh_p_e)
    if (decide_local_rrh(p, p_th) == Feedback::kAck) return Decision::kStop;
  return Decision::kRetransmit;
}

Decision decide_soft(std::span<const ChannelRealization> reconstructed_history, double r, int k,
                     double p_th, double snr, int m_t) {
  if (reconstructed_history.empty()) throw std::invalid_argument("no quantized CSI");
  fbl::ChannelStats st;
  for (const auto& a : reconstructed_history) st += fbl::channel_stats(a.eigenvalues, snr, m_t);
  return fbl::error_prob(r, k, st) <= p_th ? Decision::kStop : Decision::kRetransmit;
}

RandomStream session_stream(const ScenarioConfig& cfg, std::uint64_t session_index) {
  return RandomStream::derive(cfg.seed, StreamFamily::kSession, session_index);
}

SessionOutcome run_session(const ScenarioConfig& cfg, const Codebook* codebook, RandomStream& rng,
                           const ChannelHook& hook) {
  check_session_inputs(cfg, codebook);
  AttemptStepper stepper(cfg, codebook, rng, hook);
  SessionOutcome out;
  for (int n = 1; n <= cfg.n_max; ++n) {
    const AttemptStep step = stepper.next();
    AttemptRecord rec;
    rec.attempt_n = n;
    rec.bbu_error_prob = step.true_pe;
    rec.decodable = step.decodable;
    rec.decision = cfg.policy == Policy::kIdeal
                       ? decide_ideal(step.decodable)
                       : (step.metric <= cfg.p_th ? Decision::kStop : Decision::kRetransmit);
    out.attempts.push_back(rec);
    if (rec.decision == Decision::kStop) {
      out.success = rec.decodable;
      break;
    }
  }
  out.n_used = static_cast<int>(out.attempts.size());
  return out;
}

void SessionTally::add(const SessionOutcome& outcome) {
  ++sessions;
  const double n = outcome.n_used;
  sum_n += n;
  sum_n2 += n * n;
  if (outcome.success) {
    ++successes;
    sum_success_n += n;
  }
  for (const auto& a : outcome.attempts) {
    if (a.decision == Decision::kRetransmit && a.decodable) ++decodable_retransmissions;
  }
  if (!outcome.attempts.empty() && outcome.attempts.back().decision == Decision::kStop) {
    const auto i = static_cast<std::size_t>(outcome.n_used - 1);
    ++stops.at(i);
    if (outcome.success) ++stop_successes[i];
    else ++undecodable_stops;
  }
}

SessionTally& SessionTally::operator+=(const SessionTally& o) {
  if (o.n_max() != n_max()) throw std::invalid_argument("tallies disagree on n_max");
  sessions += o.sessions;
  successes += o.successes;
  sum_n += o.sum_n;
  sum_n2 += o.sum_n2;
  sum_success_n += o.sum_success_n;
  for (std::size_t i = 0; i < stops.size(); ++i) {
    stops[i] += o.stops[i];
    stop_successes[i] += o.stop_successes[i];
  }
  undecodable_stops += o.undecodable_stops;
  decodable_retransmissions += o.decodable_retransmissions;
  return *this;
}

PathBatch PathBatch::simulate(const ScenarioConfig& cfg, const Codebook* codebook,
                              std::uint64_t sessions, double threshold_floor) {
  check_session_inputs(cfg, codebook);
  PathBatch batch;
  batch.cfg_ = cfg;
  batch.floor_ = threshold_floor;

  struct Shard {
    std::vector<std::uint32_t> lengths;
    std::vector<double> metric;
    std::vector<std::uint8_t> decodable;
  };
  const std::uint64_t shard_count = (sessions + kShardSize - 1) / kShardSize;
  std::vector<Shard> shards(shard_count);
  const bool ideal = cfg.policy == Policy::kIdeal;
  const ChannelHook no_hook;

  parallel_for(shard_count, [&](std::size_t s) {
    Shard& shard = shards[s];
    const std::uint64_t begin = s * kShardSize;
    const std::uint64_t end = std::min(sessions, begin + kShardSize);
    for (std::uint64_t i = begin; i < end; ++i) {
      RandomStream rng = session_stream(cfg, i);
      AttemptStepper stepper(cfg, codebook, rng, no_hook);
      bool any_decodable = false;
      std::uint32_t len = 0;
      for (int n = 1; n <= cfg.n_max; ++n) {
        const AttemptStep step = stepper.next();
        shard.metric.push_back(step.metric);
        shard.decodable.push_back(step.decodable ? 1 : 0);
        ++len;
        any_decodable = any_decodable || step.decodable;
        const bool settled = ideal || step.metric <= threshold_floor;
        if (settled && any_decodable) break;
      }
      shard.lengths.push_back(len);
    }
  });

  batch.offsets_.reserve(sessions + 1);
  for (auto& shard : shards) {
    for (std::uint32_t len : shard.lengths) batch.offsets_.push_back(batch.offsets_.back() + len);
    batch.metric_.insert(batch.metric_.end(), shard.metric.begin(), shard.metric.end());
    batch.decodable_.insert(batch.decodable_.end(), shard.decodable.begin(), shard.decodable.end());
    shard = Shard{};
  }
  return batch;
}

SessionOutcome PathBatch::replay(std::uint64_t session, double p_th) const {
  const bool ideal = cfg_.policy == Policy::kIdeal;
  if (!ideal && p_th < floor_)
    throw std::invalid_argument("threshold below the batch's replay floor");
  const std::uint64_t begin = offsets_.at(session);
  const std::uint64_t end = offsets_.at(session + 1);
  SessionOutcome out;
  for (std::uint64_t j = begin; j < end; ++j) {
    AttemptRecord rec;
    rec.attempt_n = static_cast<int>(j - begin + 1);
    rec.bbu_error_prob = std::numeric_limits<double>::quiet_NaN();
    rec.decodable = decodable_[j] != 0;
    rec.decision = ideal ? decide_ideal(rec.decodable)
                         : (metric_[j] <= p_th ? Decision::kStop : Decision::kRetransmit);
    out.attempts.push_back(rec);
    if (rec.decision == Decision::kStop) {
      out.success = rec.decodable;
      break;
    }
  }
  if (out.attempts.back().decision == Decision::kRetransmit &&
      static_cast<int>(out.attempts.size()) != cfg_.n_max)
    throw std::logic_error("truncated path replayed past its end");
  out.n_used = static_cast<int>(out.attempts.size());
  return out;
}

SessionTally PathBatch::evaluate(double p_th) const {
  if (cfg_.policy == Policy::kIdeal) return evaluate_ideal();
  if (p_th < floor_) throw std::invalid_argument("threshold below the batch's replay floor");
  SessionTally t(cfg_.n_max);
  const std::uint64_t count = sessions();
  for (std::uint64_t s = 0; s < count; ++s) {
    const std::uint64_t begin = offsets_[s];
    const std::uint64_t end = offsets_[s + 1];
    std::uint64_t j = begin;
    std::uint64_t decodable_rtx = 0;
    for (; j < end; ++j) {
      if (metric_[j] <= p_th) break;
      decodable_rtx += decodable_[j];
    }
    ++t.sessions;
    t.decodable_retransmissions += decodable_rtx;
    if (j < end) {
      const double n = static_cast<double>(j - begin + 1);
      t.sum_n += n;
      t.sum_n2 += n * n;
      const auto i = static_cast<std::size_t>(j - begin);
      ++t.stops[i];
      if (decodable_[j]) {
        ++t.successes;
        t.sum_success_n += n;
        ++t.stop_successes[i];
      } else {
        ++t.undecodable_stops;
      }
    } else {
      const double n = cfg_.n_max;
      t.sum_n += n;
      t.sum_n2 += n * n;
    }
  }
  return t;
}

SessionTally PathBatch::evaluate_ideal() const {
  SessionTally t(cfg_.n_max);
  const std::uint64_t count = sessions();
  for (std::uint64_t s = 0; s < count; ++s) {
    const std::uint64_t begin = offsets_[s];
    const std::uint64_t end = offsets_[s + 1];
    std::uint64_t j = begin;
    while (j < end && !decodable_[j]) ++j;
    ++t.sessions;
    if (j < end) {
      const double n = static_cast<double>(j - begin + 1);
      t.sum_n += n;
      t.sum_n2 += n * n;
      ++t.successes;
      t.sum_success_n += n;
      ++t.stops[static_cast<std::size_t>(j - begin)];
      ++t.stop_successes[static_cast<std::size_t>(j - begin)];
    } else {
      const double n = cfg_.n_max;
      t.sum_n += n;
      t.sum_n2 += n * n;
    }
  }
  return t;
}

}  // namespace crharq
