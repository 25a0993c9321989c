#ifndef ROBUSTFILL_DESIGN_HPP
#define ROBUSTFILL_DESIGN_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace robustfill {

enum class FactorRole { Control, NoiseExternal, NoiseInternal };
enum class TransformTag { None, Transformed, DoubleTransformed, Hybrid };

struct FactorSpec {
  std::string name;
  FactorRole role = FactorRole::Control;
  TransformTag transform = TransformTag::None;
  double alpha = 1.0;  // beta-warp parameter; meaningful when DoubleTransformed
};

// An n x (p+q) matrix of runs plus per-column factor metadata.  Control
// columns live in [0,1]; noise columns are in coded (0,1) space until a
// transform maps them into the noise distribution's own scale.
class Design {
 public:
  Design() = default;
  Design(Eigen::MatrixXd runs, std::vector<FactorSpec> factors);

  int n_runs() const { return static_cast<int>(runs_.rows()); }
  int n_factors() const { return static_cast<int>(runs_.cols()); }
  int n_control() const;
  int n_noise() const;

  std::vector<int> control_columns() const;
  std::vector<int> noise_columns() const;

  const Eigen::MatrixXd& runs() const { return runs_; }
  Eigen::MatrixXd& runs() { return runs_; }
  const FactorSpec& factor(int j) const { return factors_.at(j); }
  FactorSpec& factor(int j) { return factors_.at(j); }
  const std::vector<FactorSpec>& factors() const { return factors_; }

  double min_pairwise_distance() const;

  // Enforces the type invariants: n >= 1, matching metadata, control columns
  // inside [0,1], and no duplicate rows.  Throws std::invalid_argument.
  void validate() const;

 private:
  Eigen::MatrixXd runs_;
  std::vector<FactorSpec> factors_;
};

// Default factor labels x1..xp, z1..zq (controls first).
std::vector<FactorSpec> default_factors(int p, int q);

}  // namespace robustfill

#endif
