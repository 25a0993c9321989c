#include "robustfill/sobol.hpp"

#include <stdexcept>

namespace robustfill {

namespace {

// Primitive-polynomial parameters (s = degree, a = coefficient bits) and
// initial direction numbers for dimensions 2..21 of the classic Joe-Kuo
// table; dimension 1 is the van der Corput sequence.
struct DirectionSeed {
  int s;
  std::uint32_t a;
  std::uint32_t m[7];
};

constexpr DirectionSeed kSeeds[20] = {
    {1, 0, {1}},
    {2, 1, {1, 3}},
    {3, 1, {1, 3, 1}},
    {3, 2, {1, 1, 1}},
    {4, 1, {1, 1, 3, 3}},
    {4, 4, {1, 3, 5, 13}},
    {5, 2, {1, 1, 5, 5, 17}},
    {5, 4, {1, 1, 5, 5, 5}},
    {5, 7, {1, 1, 7, 11, 19}},
    {5, 11, {1, 1, 5, 1, 1}},
    {5, 13, {1, 1, 1, 3, 11}},
    {5, 14, {1, 3, 5, 5, 31}},
    {6, 1, {1, 3, 3, 9, 7, 49}},
    {6, 13, {1, 1, 1, 15, 21, 21}},
    {6, 16, {1, 3, 1, 13, 27, 49}},
    {6, 19, {1, 1, 1, 15, 7, 5}},
    {6, 22, {1, 3, 1, 15, 13, 25}},
    {6, 25, {1, 1, 5, 5, 19, 61}},
    {7, 1, {1, 3, 7, 11, 23, 15, 103}},
    {7, 4, {1, 3, 7, 13, 13, 15, 69}},
};

inline std::uint64_t hash64(std::uint64_t x) {
  x ^= x >> 33;
  x *= 0xFF51AFD7ED558CCDull;
  x ^= x >> 33;
  x *= 0xC4CEB9FE1A85EC53ull;
  x ^= x >> 33;
  return x;
}

}  // namespace

SobolSequence::SobolSequence(int dim, std::uint64_t scramble_seed)
    : dim_(dim), seed_(scramble_seed) {
  if (dim < 1 || dim > kMaxDim)
    throw std::invalid_argument("SobolSequence: dimension must be in [1, 21]");
  for (int d = 0; d < dim_; ++d) {
    state_[d] = 0;
    if (d == 0) {
      for (int b = 0; b < 32; ++b) direction_[0][b] = 1u << (31 - b);
      continue;
    }
    const DirectionSeed& ds = kSeeds[d - 1];
    for (int b = 0; b < ds.s; ++b)
      direction_[d][b] = ds.m[b] << (31 - b);
    for (int b = ds.s; b < 32; ++b) {
      std::uint32_t v = direction_[d][b - ds.s];
      v ^= v >> ds.s;
      for (int k = 1; k < ds.s; ++k)
        if ((ds.a >> (ds.s - 1 - k)) & 1u) v ^= direction_[d][b - k];
      direction_[d][b] = v;
    }
  }
}

std::uint32_t SobolSequence::owen_scramble(std::uint32_t value, int d) const {
  if (seed_ == 0) return value;
  // Nested uniform scramble: bit b flips by a pseudorandom function of the
  // more significant bits, keyed per dimension.
  std::uint32_t out = 0;
  std::uint32_t prefix = 0;
  for (int b = 31; b >= 0; --b) {
    const std::uint32_t bit = (value >> b) & 1u;
    const std::uint64_t key =
        hash64(seed_ ^ (static_cast<std::uint64_t>(d + 1) << 40) ^
               (static_cast<std::uint64_t>(prefix) << 6) ^
               static_cast<std::uint64_t>(31 - b));
    const std::uint32_t flip = static_cast<std::uint32_t>(key & 1u);
    const std::uint32_t sb = bit ^ flip;
    out |= sb << b;
    prefix = (prefix << 1) | bit;
  }
  return out;
}

void SobolSequence::next(double* out) {
  // gray-code update; the first emitted element is the sequence's x_1
  if (index_ == 0xFFFFFFFFu)
    throw std::runtime_error("SobolSequence: exhausted");
  std::uint32_t gray = index_;
  int c = 0;
  while (gray & 1u) {
    gray >>= 1;
    ++c;
  }
  for (int d = 0; d < dim_; ++d) {
    state_[d] ^= direction_[d][c];
    const std::uint32_t scrambled = owen_scramble(state_[d], d);
    out[d] = (static_cast<double>(scrambled) + 0.5) * 0x1.0p-32;
  }
  ++index_;
}

Eigen::MatrixXd SobolSequence::sample(int n) {
  Eigen::MatrixXd X(n, dim_);
  std::vector<double> row(dim_);
  for (int i = 0; i < n; ++i) {
    next(row.data());
    for (int d = 0; d < dim_; ++d) X(i, d) = row[d];
  }
  return X;
}

}  // namespace robustfill
