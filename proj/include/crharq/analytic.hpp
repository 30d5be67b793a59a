#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "crharq/scenario.hpp"

namespace crharq {

enum class ProfileMethod { kExact, kUpperBound, kMcIntegration };

/// Per-attempt STOP/RTX probabilities of one HARQ scheme.
///
/// rtx_probs has n_max + 1 entries with rtx_probs[0] = 1, so that
/// P(STOP_n) = rtx_probs[n-1] - rtx_probs[n] for every n in 1..n_max.
/// stop_decode_probs[n-1] is P(D_n | STOP_n); it is empty for ideal profiles,
/// where every STOP is a successful decoding.
struct ProbabilityProfile {
  std::vector<double> rtx_probs;
  std::vector<double> stop_decode_probs;
  ProfileMethod method = ProfileMethod::kExact;
  std::vector<double> rtx_error;          ///< quadrature error or Monte Carlo SE
  std::vector<double> stop_decode_error;
  /// Attempts whose conditional probability came from the Delta -> 0 limit
  /// (nested integrals) or had no sampled STOP event (Monte Carlo).
  std::vector<int> limit_flagged;
  /// Per-path standard errors of Ps and E[N] and their covariance, set by
  /// Monte Carlo integrators that see whole sessions; NaN otherwise.
  double ps_error = std::numeric_limits<double>::quiet_NaN();
  double expected_n_error = std::numeric_limits<double>::quiet_NaN();
  double ps_n_covariance = std::numeric_limits<double>::quiet_NaN();

  int n_max() const { return static_cast<int>(rtx_probs.size()) - 1; }
  double stop_prob(int n) const { return rtx_probs.at(n - 1) - rtx_probs.at(n); }
  bool is_bound() const { return method == ProfileMethod::kUpperBound; }
};

/// Expectation of f(x) under the sum of `attempts` unit-mean exponentials
/// (the squared combined SISO gain), by adaptive Gauss-Kronrod over
/// [0, 1-1e-12 quantile] split at `knot`. err (optional) receives the
/// quadrature error estimate plus the truncated tail mass times sup|f|.
double gamma_expectation(const std::function<double(double)>& f, int attempts, double knot,
                         double* err = nullptr, double tolerance = 1e-12, double sup_f = 1.0);

/// E[P_e] of one SISO slot.
double siso_mean_error_prob(double r, int k, double snr, double* err = nullptr);

/// Channel power gamma at which the SISO P_e equals p_th, to |P_e - p_th| <=
/// 1e-10. p_th = 0 gives +infinity and p_th = 1 gives 0.
double gamma_threshold(double r, int k, double p_th, double snr);

/// TI with BBU feedback: P(RTX_n) = E[P_e]^n. SISO uses quadrature; other
/// antenna configurations integrate over sampled eigenvalues.
ProbabilityProfile ti_ideal_profile(double r, int k, double snr, int m_t, int m_r, int n_max,
                                    std::uint64_t mc_samples = 1000000, std::uint64_t seed = 1);

ProbabilityProfile ti_local_profile(double r, int k, double snr, double p_th, int n_max);

/// Chain-rule bound P(RTX_n) <= E[P_e(S_n)], with S_n^2 the combined gain.
ProbabilityProfile cc_ideal_bound(double r, int k, double snr, int n_max);

ProbabilityProfile cc_local_profile(double r, int k, double snr, double p_th, int n_max);

/// Per-session P_e(H_n) paths of IR over independent Rayleigh attempts,
/// sampled once and reused for any threshold. Each attempt's channel is
/// (sum of m_r_per_rrh) x m_t, so C-RAN stacks single-antenna RRH rows.
class IrErrorPaths {
 public:
  static IrErrorPaths sample(double r, int k, double snr, int m_t, const std::vector<int>& m_r_per_rrh,
                             int n_max, std::uint64_t samples, std::uint64_t seed = 1);

  /// Chain-rule bound P(RTX_n) <= E[P_e(H_n)].
  ProbabilityProfile ideal_bound() const;
  /// STOP at the first n with P_e(H_n) <= p_th.
  ProbabilityProfile local_profile(double p_th) const;

  std::uint64_t samples() const { return samples_; }
  int n_max() const { return n_max_; }
  /// P_e(H_n) of path i; n is 1-based.
  double error_prob(std::uint64_t i, int n) const {
    return pe_[i * static_cast<std::uint64_t>(n_max_) + static_cast<std::uint64_t>(n - 1)];
  }

 private:
  int n_max_ = 0;
  std::uint64_t samples_ = 0;
  std::vector<double> pe_;
};

ProbabilityProfile ir_ideal_bound(double r, int k, double snr, int m_t, const std::vector<int>& m_r_per_rrh,
                                  int n_max, std::uint64_t mc_samples = 1000000, std::uint64_t seed = 1);

ProbabilityProfile ir_local_profile(double r, int k, double snr, double p_th, int n_max,
                                    std::uint64_t mc_samples = 1000000, std::uint64_t seed = 1);

/// Analytic profile of a BBU Hoteling scenario (L = 1) at threshold p_th.
/// Throws ConfigError for schemes without an analytic form (hard, soft, CC
/// beyond SISO, TI local beyond SISO).
ProbabilityProfile analytic_profile(const ScenarioConfig& cfg, double p_th,
                                    std::uint64_t mc_samples = 1000000);

}  // namespace crharq
