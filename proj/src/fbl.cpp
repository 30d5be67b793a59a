#include "crharq/fbl.hpp"

#include <cmath>

namespace crharq::fbl {

double q_function(double x) { return 0.5 * std::erfc(x * M_SQRT1_2); }

double capacity(std::span<const double> eigenvalues, double snr, int m_t) {
  double c = 0.0;
  for (double lambda : eigenvalues) c += std::log1p(snr * lambda / m_t);
  return c * kLog2e;
}

double dispersion(std::span<const double> eigenvalues, double snr, int m_t) {
  double v = 0.0;
  for (double lambda : eigenvalues) {
    const double a = snr * lambda / m_t;
    // 1 - (1+a)^-2 without cancellation for small a
    v += a * (2.0 + a) / ((1.0 + a) * (1.0 + a));
  }
  return v * kLog2e * kLog2e;
}

ChannelStats channel_stats(std::span<const double> eigenvalues, double snr, int m_t) {
  return {capacity(eigenvalues, snr, m_t), dispersion(eigenvalues, snr, m_t)};
}

double error_prob(double r, int k, const ChannelStats& stats) {
  const double gap = stats.capacity - r;
  if (stats.dispersion <= 0.0) {
    if (gap < 0.0) return 1.0;
    if (gap > 0.0) return 0.0;
    return 0.5;
  }
  return q_function(gap * std::sqrt(static_cast<double>(k) / stats.dispersion));
}

double error_prob(double r, int k, std::span<const double> eigenvalues, double snr, int m_t) {
  return error_prob(r, k, channel_stats(eigenvalues, snr, m_t));
}

AsymptoticOutcome asymptotic_error(double r, std::span<const double> eigenvalues, double snr,
                                   int m_t) {
  const double c = capacity(eigenvalues, snr, m_t);
  if (c < r) return AsymptoticOutcome::kFailed;
  if (c > r) return AsymptoticOutcome::kDecoded;
  return AsymptoticOutcome::kUndefined;
}

FblPoint evaluate(double r, int k, std::span<const double> eigenvalues, double snr, int m_t) {
  const ChannelStats st = channel_stats(eigenvalues, snr, m_t);
  return {st.capacity, st.dispersion, error_prob(r, k, st)};
}

}  // namespace crharq::fbl
