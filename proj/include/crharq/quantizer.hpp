#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "crharq/channel.hpp"
#include "crharq/random.hpp"

namespace crharq {

/// Scalar quantizer for channel amplitudes ||h||.
struct AmplitudeQuantizer {
  std::vector<double> thresholds;  ///< ascending, levels.size() - 1 entries
  std::vector<double> levels;      ///< ascending reconstruction values
  double mse = 0.0;                ///< mean squared error on the training samples

  std::size_t cell(double amplitude) const;
};

/// Lloyd-Max design: thresholds are midpoints of adjacent levels and each level
/// is the mean of its cell; iterates until the relative MSE change drops below
/// 1e-9. One level yields the sample mean and no thresholds.
AmplitudeQuantizer optimize_amplitude_quantizer(std::span<const double> samples,
                                                std::size_t levels_count);

/// 2^b_prime i.i.d. unit-norm directions (normalized CN(0, I) vectors).
std::vector<ComplexVector> generate_direction_codebook(int b_prime, int m_t, RandomStream& rng);

/// Index of the codeword maximizing |<c, h>| / ||h|| (lowest index on ties).
/// A zero vector maps to index 0.
std::size_t quantize_direction(const ComplexVector& h, std::span<const ComplexVector> directions);

struct QuantizedCsi {
  std::size_t direction = 0;
  /// Empty for a zero channel, which reconstructs to the zero vector.
  std::optional<std::size_t> amplitude_cell;
};

class CodebookFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// b-bit per-RRH CSI quantizer: b_prime bits of direction, b - b_prime bits of
/// amplitude. A passthrough codebook stands for unlimited feedback (b = inf).
class Codebook {
 public:
  Codebook(int b, int b_prime, std::vector<ComplexVector> directions,
           AmplitudeQuantizer amplitude);

  static Codebook passthrough(int m_t);

  bool is_passthrough() const { return passthrough_; }
  int b() const { return b_; }
  int b_prime() const { return b_prime_; }
  int m_t() const { return m_t_; }
  const std::vector<ComplexVector>& directions() const { return directions_; }
  const std::vector<double>& amp_thresholds() const { return amplitude_.thresholds; }
  const std::vector<double>& amp_levels() const { return amplitude_.levels; }
  const AmplitudeQuantizer& amplitude() const { return amplitude_; }

  QuantizedCsi quantize(const ComplexVector& h) const;
  ComplexVector reconstruct(const QuantizedCsi& q) const;

  /// reconstruct(quantize(h)); the identity for a passthrough codebook.
  ComplexVector apply(const ComplexVector& h) const;

  /// Versioned plain-text form: header, one codeword per line as re/im pairs,
  /// then thresholds and levels. Doubles are written with 17 significant digits
  /// so read(write(c)) reproduces c exactly.
  void write(std::ostream& out) const;
  static Codebook read(std::istream& in);

 private:
  Codebook() = default;

  bool passthrough_ = false;
  int b_ = 0;
  int b_prime_ = 0;
  int m_t_ = 0;
  std::vector<ComplexVector> directions_;
  ComplexMatrix direction_matrix_;  // m_t x 2^b_prime, columns are codewords
  AmplitudeQuantizer amplitude_;
};

ComplexVector reconstruct(const Codebook& codebook, std::size_t direction,
                          std::optional<std::size_t> amplitude_cell);

}  // namespace crharq
