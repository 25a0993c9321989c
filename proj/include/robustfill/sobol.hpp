#ifndef ROBUSTFILL_SOBOL_HPP
#define ROBUSTFILL_SOBOL_HPP

#include <Eigen/Dense>
#include <cstdint>

namespace robustfill {

// Sobol sequence (32-bit, gray-code) with optional Owen-style nested
// digital scrambling keyed by a hash of the seed; up to 21 dimensions.
class SobolSequence {
 public:
  // seed == 0 means unscrambled.
  explicit SobolSequence(int dim, std::uint64_t scramble_seed = 0);

  static constexpr int kMaxDim = 21;
  int dim() const { return dim_; }

  // Next point, entries in (0,1); the k-th call returns the k-th element.
  void next(double* out);
  Eigen::MatrixXd sample(int n);

 private:
  int dim_;
  std::uint64_t seed_;
  std::uint32_t index_ = 0;
  std::uint32_t state_[kMaxDim];
  std::uint32_t direction_[kMaxDim][32];

  std::uint32_t owen_scramble(std::uint32_t value, int d) const;
};

}  // namespace robustfill

#endif
