#ifndef ROBUSTFILL_RNG_HPP
#define ROBUSTFILL_RNG_HPP

// Deterministic random-number helpers.  std::mt19937_64 output is fully
// specified by the standard, but the std::*_distribution adaptors are not,
// so every draw that must reproduce bit-for-bit across toolchains goes
// through the helpers below.

#include <cstdint>
#include <random>
#include <vector>

namespace robustfill {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Derives a stream seed from (base, stream) so that independent tasks get
// decorrelated generators from one user-facing seed.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t s = base ^ (0xD1B54A32D192ED03ull * (stream + 1));
  return splitmix64(s);
}

inline Rng make_rng(std::uint64_t seed) {
  std::uint64_t s = seed;
  return Rng(splitmix64(s));
}

// Uniform double strictly inside (0,1).
inline double uniform01(Rng& g) {
  return (static_cast<double>(g() >> 11) + 0.5) * 0x1.0p-53;
}

inline double uniform_range(Rng& g, double lo, double hi) {
  return lo + (hi - lo) * uniform01(g);
}

// Unbiased index in [0, n) by rejection.
inline std::size_t uniform_index(Rng& g, std::size_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = g();
  } while (x >= limit);
  return static_cast<std::size_t>(x % n);
}

// Fisher-Yates with explicit index draws (std::shuffle is implementation-defined).
template <class T>
void shuffle(std::vector<T>& v, Rng& g) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = uniform_index(g, i);
    std::swap(v[i - 1], v[j]);
  }
}

// Standard-normal draw via inverse CDF; declared here, defined with the
// distribution code.
double normal_draw(Rng& g);

}  // namespace robustfill

#endif
