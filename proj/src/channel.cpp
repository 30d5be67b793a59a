#include "crharq/channel.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "crharq/scenario.hpp"

namespace crharq {

std::vector<double> gram_eigenvalues(const ComplexMatrix& h) {
  const Eigen::Index rows = h.rows();
  const Eigen::Index cols = h.cols();
  const Eigen::Index count = std::min(rows, cols);
  std::vector<double> out;
  if (count == 0) return out;
  if (count == 1) {
    out.push_back(h.squaredNorm());
    return out;
  }
  const ComplexMatrix gram =
      rows >= cols ? ComplexMatrix(h.adjoint() * h) : ComplexMatrix(h * h.adjoint());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(gram, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("eigendecomposition of H^H H failed");
  const double tol = 1e-12 * std::max(1.0, gram.trace().real());
  out.resize(static_cast<std::size_t>(count));
  const auto& ev = solver.eigenvalues();
  for (Eigen::Index i = 0; i < count; ++i) {
    double v = ev[count - 1 - i];
    if (v < 0.0) {
      if (v < -tol) throw std::runtime_error("H^H H has a negative eigenvalue");
      v = 0.0;
    }
    out[static_cast<std::size_t>(i)] = v;
  }
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

ChannelRealization ChannelRealization::from_entries(ComplexMatrix h) {
  ChannelRealization c;
  c.eigenvalues = gram_eigenvalues(h);
  c.entries = std::move(h);
  return c;
}

ChannelRealization sample_channel(int m_r, int m_t, RandomStream& rng) {
  if (m_r < 1 || m_t < 1) throw std::invalid_argument("channel dimensions must be >= 1");
  ComplexMatrix h(m_r, m_t);
  for (int i = 0; i < m_r; ++i)
    for (int j = 0; j < m_t; ++j) h(i, j) = rng.complex_normal();
  return ChannelRealization::from_entries(std::move(h));
}

ChannelRealization stack_rrh_channels(std::span<const ChannelRealization> per_rrh) {
  if (per_rrh.empty()) throw std::invalid_argument("no RRH channels to stack");
  const Eigen::Index m_t = per_rrh.front().entries.cols();
  Eigen::Index rows = 0;
  for (const auto& c : per_rrh) {
    if (c.entries.cols() != m_t) throw std::invalid_argument("RRH channels disagree on m_t");
    rows += c.entries.rows();
  }
  ComplexMatrix h(rows, m_t);
  Eigen::Index at = 0;
  for (const auto& c : per_rrh) {
    h.middleRows(at, c.entries.rows()) = c.entries;
    at += c.entries.rows();
  }
  return ChannelRealization::from_entries(std::move(h));
}

SessionHistory::SessionHistory(int n_max) : n_max_(n_max) {
  if (n_max < 1) throw std::invalid_argument("n_max must be >= 1");
  attempts_.reserve(static_cast<std::size_t>(n_max));
}

void SessionHistory::push(ChannelRealization channel) {
  if (attempt_index() >= n_max_) throw std::logic_error("session already used n_max attempts");
  attempts_.push_back(std::move(channel));
}

double cc_effective_gain(const SessionHistory& history) {
  double sum = 0.0;
  for (const auto& a : history.attempts()) {
    if (a.entries.rows() != 1 || a.entries.cols() != 1)
      throw ConfigError("chase combining gain is defined for SISO channels only");
    sum += std::norm(a.entries(0, 0));
  }
  return std::sqrt(sum);
}

StackedChannel ir_stacked_channel(const SessionHistory& history) {
  StackedChannel s;
  for (const auto& a : history.attempts())
    s.eigenvalues.insert(s.eigenvalues.end(), a.eigenvalues.begin(), a.eigenvalues.end());
  std::sort(s.eigenvalues.begin(), s.eigenvalues.end(), std::greater<>());
  s.blocks = history.attempt_index();
  return s;
}

}  // namespace crharq
