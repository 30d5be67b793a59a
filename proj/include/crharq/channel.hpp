#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "crharq/random.hpp"

namespace crharq {

using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

/// One slot's channel matrix (m_r x m_t) with the eigenvalues of H^H H cached.
struct ChannelRealization {
  ComplexMatrix entries;
  /// min(m_r, m_t) eigenvalues of H^H H, descending, all >= 0.
  std::vector<double> eigenvalues;

  /// Wraps an arbitrary matrix; this is also the hook tests use to inject
  /// deterministic channels.
  static ChannelRealization from_entries(ComplexMatrix h);

  int m_r() const { return static_cast<int>(entries.rows()); }
  int m_t() const { return static_cast<int>(entries.cols()); }
};

/// Nonzero spectrum of H^H H (the min(m_r, m_t) largest eigenvalues), computed
/// from the smaller of the two Gram matrices. Round-off negatives down to
/// -1e-12 (relative to the trace) are clamped to 0; anything below throws.
std::vector<double> gram_eigenvalues(const ComplexMatrix& h);

/// i.i.d. CN(0,1) entries (Rayleigh fading).
ChannelRealization sample_channel(int m_r, int m_t, RandomStream& rng);

/// Vertically stacks per-RRH channels into the joint channel seen by a C-RAN
/// BBU; with single-antenna RRHs the rows are h_{1,n} ... h_{L,n}.
ChannelRealization stack_rrh_channels(std::span<const ChannelRealization> per_rrh);

/// Channels of the attempts made so far in one HARQ session.
class SessionHistory {
 public:
  explicit SessionHistory(int n_max);

  /// Appends the next attempt; throws std::logic_error past n_max.
  void push(ChannelRealization channel);

  int attempt_index() const { return static_cast<int>(attempts_.size()); }
  int n_max() const { return n_max_; }
  std::span<const ChannelRealization> attempts() const { return attempts_; }
  bool empty() const { return attempts_.empty(); }

 private:
  int n_max_;
  std::vector<ChannelRealization> attempts_;
};

/// MRC gain sqrt(sum_i |H_i|^2) of a SISO session. Throws ConfigError for
/// non-scalar channels.
double cc_effective_gain(const SessionHistory& history);

/// Block-diagonal diag(H_1, ..., H_n) seen by an IR decoder, described by its
/// eigenvalue multiset (the union of the per-attempt spectra).
struct StackedChannel {
  std::vector<double> eigenvalues;
  int blocks = 0;
};

StackedChannel ir_stacked_channel(const SessionHistory& history);

}  // namespace crharq
