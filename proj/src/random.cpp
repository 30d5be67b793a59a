#include "crharq/random.hpp"

#include <cmath>

namespace crharq {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

RandomStream RandomStream::derive(std::uint64_t seed, StreamFamily family,
                                  std::uint64_t index) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(family));
  h = splitmix64(h ^ index);
  return RandomStream(h);
}

std::complex<double> RandomStream::complex_normal() {
  static const double kScale = std::sqrt(0.5);
  const double re = normal();
  const double im = normal();
  return {re * kScale, im * kScale};
}

}  // namespace crharq
