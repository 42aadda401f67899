#pragma once

#include <cstdint>
#include <cmath>
#include <vector>

namespace kt {

// Deterministic RNG with explicit substreams. All draws go through
// hand-rolled mappings (not std distributions) so that the same seed
// produces the same stream on every platform and stdlib.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {
    // warm up through the mixer so nearby seeds decorrelate
    next_u64();
    next_u64();
  }

  // Derive an independent substream from this seed and a list of stream ids.
  static Rng substream(std::uint64_t seed, std::initializer_list<std::uint64_t> ids) {
    std::uint64_t s = seed;
    for (std::uint64_t id : ids) s = mix(s ^ (id + 0x9e3779b97f4a7c15ULL));
    return Rng(s);
  }

  std::uint64_t next_u64() {
    // splitmix64 step
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }

  // Uniform in [0, bound) without modulo bias.
  std::uint64_t next_below(std::uint64_t bound) {
    if (bound <= 1) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % bound;
  }

  // Uniform in [0, 1).
  double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  bool bernoulli(double p) { return next_double() < p; }

  double normal(double mean = 0.0, double stddev = 1.0) {
    // Box-Muller, one value per call; the partner draw is discarded
    double u1 = next_double();
    double u2 = next_double();
    if (u1 < 1e-300) u1 = 1e-300;
    return mean + stddev * std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = std::size_t(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

}  // namespace kt
