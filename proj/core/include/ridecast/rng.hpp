#pragma once

#include <cstdint>
#include <numeric>
#include <vector>

namespace ridecast {

/// Counter-based deterministic generator. Unlike the std:: distributions,
/// every draw is fully specified, so results are identical across compilers
/// and platforms for the same seed.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  /// Derives an independent stream from (seed, counter, tag), e.g. one
  /// stream per boosting round for row and column sampling.
  static SplitMix64 stream(std::uint64_t seed, std::uint64_t counter, std::uint64_t tag) {
    SplitMix64 s(seed);
    std::uint64_t a = s.next();
    SplitMix64 c(counter + 0x9E3779B97F4A7C15ULL);
    std::uint64_t b = c.next();
    return SplitMix64(a ^ (b + tag * 0xBF58476D1CE4E5B9ULL));
  }

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t next_below(std::uint64_t bound) {
    // Rejection sampling to remove modulo bias; terminates almost surely.
    std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      std::uint64_t r = next();
      if (r >= threshold) return r % bound;
    }
  }

  /// Uniform double in [0, 1).
  double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo, hi).
  double next_double(double lo, double hi) { return lo + (hi - lo) * next_double(); }

 private:
  std::uint64_t state_;
};

/// In-place Fisher-Yates shuffle.
template <typename T>
void shuffle(std::vector<T>& items, SplitMix64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.next_below(i));
    std::swap(items[i - 1], items[j]);
  }
}

/// k distinct indices drawn from [0, n), returned sorted ascending.
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k,
                                                    SplitMix64& rng);

}  // namespace ridecast
