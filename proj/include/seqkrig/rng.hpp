#ifndef SEQKRIG_RNG_HPP
#define SEQKRIG_RNG_HPP

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace seqkrig {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Derives an independent stream seed from a base seed and a stream tag.
/// This is the splitting rule used whenever one user-facing seed has to
/// feed several independent streams (initial design, candidate grid,
/// per-round fits, test matrices).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  return splitmix64(seed ^ splitmix64(tag));
}

/// Seeded generator with platform-independent output. mt19937_64's output
/// sequence is fixed by the standard, and the mappings below avoid the
/// implementation-defined std:: distributions, so equal seeds produce equal
/// streams everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next() { return gen_(); }

  /// Uniform double in [0, 1).
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform integer in [lo, hi], inclusive and unbiased.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<std::int64_t>(gen_());
    const std::uint64_t cut = (UINT64_MAX % span + 1) % span;
    std::uint64_t r;
    do {
      r = gen_();
    } while (cut != 0 && r > UINT64_MAX - cut);
    return lo + static_cast<std::int64_t>(r % span);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace seqkrig

#endif
