#ifndef ROBUSTFILL_DISTRIBUTIONS_HPP
#define ROBUSTFILL_DISTRIBUTIONS_HPP

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <vector>

namespace robustfill {

// --------------------------------------------------------------------------
// Normal distribution
// --------------------------------------------------------------------------

double norm_pdf(double x, double mean = 0.0, double sd = 1.0);

// Phi((x-mean)/sd); throws std::domain_error on non-finite x.
double norm_cdf(double x, double mean = 0.0, double sd = 1.0);

// Inverse of norm_cdf; p must lie strictly inside (0,1).
double norm_quantile(double p, double mean = 0.0, double sd = 1.0);

// --------------------------------------------------------------------------
// Symmetric beta warp B_alpha = Beta(alpha, alpha).  The recommended band is
// alpha in [0.5, 1]; any positive alpha <= 1 is accepted so the dispersed
// unweighted-criterion variant can be reproduced.
// --------------------------------------------------------------------------

struct BetaWarp {
  double alpha = 2.0 / 3.0;
};

double beta_pdf(double u, const BetaWarp& warp);
double beta_cdf(double u, const BetaWarp& warp);
double beta_quantile(double p, const BetaWarp& warp);

// Regularized incomplete beta I_x(a,b) by continued fraction; exposed because
// tests exercise it directly.
double incomplete_beta(double a, double b, double x);

// --------------------------------------------------------------------------
// Noise models
// --------------------------------------------------------------------------

enum class NoiseKind { Normal, TruncatedNormal, Uniform, EmpiricalTable };

struct Interval {
  double lo;
  double hi;
  bool bounded_below;
  bool bounded_above;
};

// One noise factor's distribution in coded units.  Construction goes through
// the factories; all parameter validation happens there.
class NoiseModel {
 public:
  static NoiseModel normal(double mean, double sd);
  static NoiseModel truncated_normal(double mean, double sd, double lo, double hi);
  static NoiseModel uniform(double lo, double hi);
  // CDF table (value_i, cum_prob_i): strictly increasing values, cum_probs
  // from 0 to 1; CDF is linear between knots.
  static NoiseModel empirical_table(std::vector<double> values,
                                    std::vector<double> cum_probs);

  NoiseKind kind() const { return kind_; }
  double mean() const { return mean_; }
  double sd() const { return sd_; }
  Interval support() const { return support_; }

  double pdf(double z) const;
  double cdf(double z) const;
  double quantile(double p) const;

  // C_k = integral of f^k over the support; closed form for every kind
  // (the truncated normal reduces to a Phi difference, the empirical table
  // to a sum over its piecewise-constant density).
  double fk_integral(double k) const;

  // Optional joint covariance for multivariate normal noise blocks.
  void set_covariance(Eigen::MatrixXd sigma_z);
  const std::optional<Eigen::MatrixXd>& covariance() const { return sigma_z_; }

 private:
  NoiseModel() = default;

  NoiseKind kind_ = NoiseKind::Normal;
  double mean_ = 0.0;
  double sd_ = 1.0;
  Interval support_{0.0, 0.0, false, false};
  // truncated normal: mass of the untruncated normal on [lo,hi]
  double trunc_mass_ = 1.0;
  // empirical table knots
  std::vector<double> values_;
  std::vector<double> cum_probs_;
  std::optional<Eigen::MatrixXd> sigma_z_;
};

// --------------------------------------------------------------------------
// Column transforms
// --------------------------------------------------------------------------

// Elementwise F^{-1}.  Entries must be strictly inside (0,1) unless the
// support is bounded on the corresponding side.
std::vector<double> inverse_transform(std::span<const double> column,
                                      const NoiseModel& model);

// F^{-1} composed with the beta pre-warp B_alpha^{-1}.
std::vector<double> double_transform(std::span<const double> column,
                                     const NoiseModel& model,
                                     const BetaWarp& warp);

// Symmetric (eigendecomposition) square root of an SPD matrix.
Eigen::MatrixXd symmetric_sqrt(const Eigen::MatrixXd& spd);

// Maps each row u of a (0,1)-valued matrix to Sigma^{1/2} * Phi^{-1}(u).
Eigen::MatrixXd correlate_mvn(const Eigen::MatrixXd& rows01,
                              const Eigen::MatrixXd& sigma_z);

}  // namespace robustfill

#endif
