#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace crharq {

/// Independent sub-stream families. Each family is split by a counter so that
/// stream (seed, family, i) never depends on how work is scheduled.
enum class StreamFamily : std::uint64_t {
  kSession = 1,
  kCodebook = 2,
  kAmplitudeTraining = 3,
  kIntegration = 4,
};

class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  /// Counter-based split: the child seed is a splitmix64 hash of
  /// (seed, family, index).
  static RandomStream derive(std::uint64_t seed, StreamFamily family,
                             std::uint64_t index);

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }

  /// CN(0,1): real and imaginary parts are independent N(0, 1/2).
  std::complex<double> complex_normal();

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace crharq
