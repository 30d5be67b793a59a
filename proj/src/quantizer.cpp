#include "crharq/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

namespace crharq {

namespace {

constexpr const char* kMagic = "crharq-codebook";
constexpr int kFormatVersion = 1;

}  // namespace

std::size_t AmplitudeQuantizer::cell(double amplitude) const {
  return static_cast<std::size_t>(
      std::upper_bound(thresholds.begin(), thresholds.end(), amplitude) - thresholds.begin());
}

AmplitudeQuantizer optimize_amplitude_quantizer(std::span<const double> samples,
                                                std::size_t levels_count) {
  if (samples.empty()) throw std::invalid_argument("no amplitude samples");
  if (levels_count == 0) throw std::invalid_argument("levels_count must be >= 1");

  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  // prefix sums so each cell's count / sum / sum of squares is O(1)
  std::vector<double> s1(n + 1, 0.0), s2(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    s1[i + 1] = s1[i] + sorted[i];
    s2[i + 1] = s2[i] + sorted[i] * sorted[i];
  }

  AmplitudeQuantizer q;
  q.levels.resize(levels_count);
  for (std::size_t j = 0; j < levels_count; ++j) {
    const auto idx = static_cast<std::size_t>((static_cast<double>(j) + 0.5) /
                                              static_cast<double>(levels_count) *
                                              static_cast<double>(n));
    q.levels[j] = sorted[std::min(idx, n - 1)];
  }

  auto evaluate = [&](bool update) {
    q.thresholds.resize(levels_count - 1);
    for (std::size_t j = 0; j + 1 < levels_count; ++j)
      q.thresholds[j] = 0.5 * (q.levels[j] + q.levels[j + 1]);
    double sse = 0.0;
    std::size_t lo = 0;
    for (std::size_t j = 0; j < levels_count; ++j) {
      const std::size_t hi =
          j + 1 < levels_count
              ? static_cast<std::size_t>(
                    std::upper_bound(sorted.begin(), sorted.end(), q.thresholds[j]) -
                    sorted.begin())
              : n;
      const double cnt = static_cast<double>(hi - lo);
      const double sum = s1[hi] - s1[lo];
      const double sum2 = s2[hi] - s2[lo];
      if (update && hi > lo) q.levels[j] = sum / cnt;
      const double l = q.levels[j];
      sse += sum2 - 2.0 * l * sum + cnt * l * l;
      lo = hi;
    }
    return std::max(0.0, sse / static_cast<double>(n));
  };

  double mse = evaluate(true);
  for (int iter = 0; iter < 100000; ++iter) {
    std::sort(q.levels.begin(), q.levels.end());
    const double next = evaluate(true);
    const bool done = mse <= 0.0 || std::abs(mse - next) < 1e-9 * mse;
    mse = next;
    if (done) break;
  }
  std::sort(q.levels.begin(), q.levels.end());
  q.mse = evaluate(false);
  return q;
}

std::vector<ComplexVector> generate_direction_codebook(int b_prime, int m_t, RandomStream& rng) {
  if (b_prime < 0) throw std::invalid_argument("b_prime must be >= 0");
  if (m_t < 1) throw std::invalid_argument("m_t must be >= 1");
  const std::size_t count = std::size_t{1} << b_prime;
  std::vector<ComplexVector> out;
  out.reserve(count);
  while (out.size() < count) {
    ComplexVector v(m_t);
    for (int i = 0; i < m_t; ++i) v[i] = rng.complex_normal();
    const double norm = v.norm();
    if (norm == 0.0) continue;
    out.push_back(v / norm);
  }
  return out;
}

std::size_t quantize_direction(const ComplexVector& h, std::span<const ComplexVector> directions) {
  if (directions.empty()) throw std::invalid_argument("empty direction codebook");
  std::size_t best = 0;
  double best_metric = -1.0;
  for (std::size_t i = 0; i < directions.size(); ++i) {
    const double m = std::abs(directions[i].dot(h));  // dot() conjugates the left operand
    if (m > best_metric) {
      best_metric = m;
      best = i;
    }
  }
  return best;
}

Codebook::Codebook(int b, int b_prime, std::vector<ComplexVector> directions,
                   AmplitudeQuantizer amplitude)
    : b_(b), b_prime_(b_prime), directions_(std::move(directions)), amplitude_(std::move(amplitude)) {
  if (b_prime_ < 0 || b_prime_ > b_) throw std::invalid_argument("need 0 <= b_prime <= b");
  if (directions_.size() != (std::size_t{1} << b_prime_))
    throw std::invalid_argument("direction codebook must hold 2^b_prime codewords");
  if (amplitude_.levels.size() != (std::size_t{1} << (b_ - b_prime_)))
    throw std::invalid_argument("amplitude quantizer must hold 2^(b-b_prime) levels");
  if (amplitude_.thresholds.size() + 1 != amplitude_.levels.size())
    throw std::invalid_argument("amplitude thresholds/levels size mismatch");
  m_t_ = static_cast<int>(directions_.front().size());
  direction_matrix_.resize(m_t_, static_cast<Eigen::Index>(directions_.size()));
  for (std::size_t i = 0; i < directions_.size(); ++i) {
    if (directions_[i].size() != m_t_) throw std::invalid_argument("codeword length mismatch");
    if (std::abs(directions_[i].norm() - 1.0) > 1e-9)
      throw std::invalid_argument("codewords must have unit norm");
    direction_matrix_.col(static_cast<Eigen::Index>(i)) = directions_[i];
  }
  if (!std::is_sorted(amplitude_.thresholds.begin(), amplitude_.thresholds.end()) ||
      !std::is_sorted(amplitude_.levels.begin(), amplitude_.levels.end()))
    throw std::invalid_argument("amplitude thresholds and levels must be ascending");
  for (double l : amplitude_.levels)
    if (!(l >= 0.0)) throw std::invalid_argument("amplitude levels must be nonnegative");
}

Codebook Codebook::passthrough(int m_t) {
  Codebook c;
  c.passthrough_ = true;
  c.m_t_ = m_t;
  return c;
}

QuantizedCsi Codebook::quantize(const ComplexVector& h) const {
  if (passthrough_) throw std::logic_error("a passthrough codebook has no indices");
  const double norm = h.norm();
  if (norm == 0.0) return {0, std::nullopt};
  const Eigen::VectorXd metric = (direction_matrix_.adjoint() * h).cwiseAbs();
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < metric.size(); ++i)
    if (metric[i] > metric[best]) best = i;
  return {static_cast<std::size_t>(best), amplitude_.cell(norm)};
}

ComplexVector Codebook::reconstruct(const QuantizedCsi& q) const {
  return crharq::reconstruct(*this, q.direction, q.amplitude_cell);
}

ComplexVector reconstruct(const Codebook& codebook, std::size_t direction,
                          std::optional<std::size_t> amplitude_cell) {
  const auto& dirs = codebook.directions();
  if (direction >= dirs.size()) throw std::out_of_range("direction index out of range");
  if (!amplitude_cell) return ComplexVector::Zero(codebook.m_t());
  return codebook.amp_levels().at(*amplitude_cell) * dirs[direction];
}

ComplexVector Codebook::apply(const ComplexVector& h) const {
  if (passthrough_) return h;
  return reconstruct(quantize(h));
}

void Codebook::write(std::ostream& out) const {
  out << kMagic << ' ' << kFormatVersion << '\n';
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  if (passthrough_) {
    out << "bits inf 0 " << m_t_ << '\n';
    out << "directions 0\nthresholds 0\n\nlevels 0\n\n";
    return;
  }
  out << "bits " << b_ << ' ' << b_prime_ << ' ' << m_t_ << '\n';
  out << "directions " << directions_.size() << '\n';
  for (const auto& d : directions_) {
    for (Eigen::Index i = 0; i < d.size(); ++i)
      out << (i ? " " : "") << d[i].real() << ' ' << d[i].imag();
    out << '\n';
  }
  auto write_list = [&](const char* name, const std::vector<double>& v) {
    out << name << ' ' << v.size() << '\n';
    for (std::size_t i = 0; i < v.size(); ++i) out << (i ? " " : "") << v[i];
    out << '\n';
  };
  write_list("thresholds", amplitude_.thresholds);
  write_list("levels", amplitude_.levels);
}

Codebook Codebook::read(std::istream& in) {
  auto fail = [](const std::string& what) -> void {
    throw CodebookFormatError("codebook: " + what);
  };
  std::string word;
  int version = 0;
  if (!(in >> word >> version) || word != kMagic) fail("missing header");
  if (version != kFormatVersion) fail("unsupported version " + std::to_string(version));
  std::string bits_word, b_text;
  int b_prime = 0, m_t = 0;
  if (!(in >> bits_word >> b_text >> b_prime >> m_t) || bits_word != "bits" || m_t < 1)
    fail("bad bits line");
  auto expect_count = [&](const char* name) {
    std::size_t n = 0;
    if (!(in >> word >> n) || word != name) fail(std::string("expected '") + name + "'");
    return n;
  };
  const std::size_t n_dirs = expect_count("directions");
  std::vector<ComplexVector> dirs;
  for (std::size_t i = 0; i < n_dirs; ++i) {
    ComplexVector v(m_t);
    for (int j = 0; j < m_t; ++j) {
      double re = 0.0, im = 0.0;
      if (!(in >> re >> im)) fail("truncated codeword");
      v[j] = {re, im};
    }
    dirs.push_back(std::move(v));
  }
  AmplitudeQuantizer amp;
  for (auto [name, dest] : {std::pair{"thresholds", &amp.thresholds}, std::pair{"levels", &amp.levels}}) {
    const std::size_t n = expect_count(name);
    dest->resize(n);
    for (auto& x : *dest)
      if (!(in >> x)) fail(std::string("truncated ") + name);
  }
  if (b_text == "inf") return passthrough(m_t);
  int b = 0;
  try {
    b = std::stoi(b_text);
  } catch (const std::exception&) {
    fail("bad bit count '" + b_text + "'");
  }
  try {
    return Codebook(b, b_prime, std::move(dirs), std::move(amp));
  } catch (const std::invalid_argument& e) {
    throw CodebookFormatError(std::string("codebook: ") + e.what());
  }
}

}  // namespace crharq
