#pragma once

#include <span>

namespace crharq::fbl {

inline constexpr double kLog2e = 1.4426950408889634074;

/// Gaussian complementary CDF Q(x) = P(Z > x).
double q_function(double x);

/// Mutual information sum_j log2(1 + s*lambda_j/m_t) in bit/symbol.
double capacity(std::span<const double> eigenvalues, double snr, int m_t);

/// Channel dispersion (m_rt - sum_j (1 + s*lambda_j/m_t)^-2) * log2(e)^2, with
/// m_rt the number of eigenvalues supplied.
double dispersion(std::span<const double> eigenvalues, double snr, int m_t);

/// Capacity and dispersion together. Both are additive over parallel channels,
/// which is how accumulated IR sessions are tracked without re-stacking.
struct ChannelStats {
  double capacity = 0.0;
  double dispersion = 0.0;

  ChannelStats& operator+=(const ChannelStats& o) {
    capacity += o.capacity;
    dispersion += o.dispersion;
    return *this;
  }
};

ChannelStats channel_stats(std::span<const double> eigenvalues, double snr, int m_t);

/// Normal approximation Q((C - r) / sqrt(V / k)). When V = 0 (zero channel or
/// zero SNR) the k -> infinity limit is used: 1 if C < r, 0 if C > r, 0.5 at
/// C = r.
double error_prob(double r, int k, const ChannelStats& stats);
double error_prob(double r, int k, std::span<const double> eigenvalues, double snr, int m_t);

enum class AsymptoticOutcome { kDecoded, kFailed, kUndefined };

/// Large-blocklength limit of error_prob: kFailed (1) if C < r, kDecoded (0) if
/// C > r, kUndefined at C = r.
AsymptoticOutcome asymptotic_error(double r, std::span<const double> eigenvalues, double snr,
                                   int m_t);

struct FblPoint {
  double capacity_c = 0.0;
  double dispersion_v = 0.0;
  double error_prob = 1.0;
};

FblPoint evaluate(double r, int k, std::span<const double> eigenvalues, double snr, int m_t);

}  // namespace crharq::fbl
