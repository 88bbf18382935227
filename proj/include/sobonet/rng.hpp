#pragma once

#include <cstdint>
#include <initializer_list>

namespace sobonet {

constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Folds a sequence of integers into one stream key.
inline std::uint64_t stream_key(std::uint64_t seed, std::initializer_list<std::uint64_t> parts) {
  std::uint64_t k = mix64(seed);
  for (std::uint64_t p : parts) k = mix64(k ^ mix64(p + 0x632be59bd9b4e019ULL));
  return k;
}

// Counter-based generator: the i-th draw of a stream depends only on (key, i).
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key, std::uint64_t counter = 0) : key_(key), counter_(counter) {}

  std::uint64_t next() { return mix64(key_ ^ mix64(counter_++)); }
  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
};

}  // namespace sobonet
