#ifndef ROBUSTFILL_GP_HPP
#define ROBUSTFILL_GP_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "robustfill/design.hpp"

namespace robustfill {

// Raised when the correlation matrix cannot be factorized even after the
// nugget has been escalated to its cap.
class ConditioningError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Gaussian-correlation scale parameters, split between control and noise
// factors in design column order (controls first within their positions).
struct CorrelationParams {
  std::vector<double> theta_x;
  std::vector<double> theta_z;

  static CorrelationParams constant(double value, int p, int q) {
    return CorrelationParams{std::vector<double>(p, value),
                             std::vector<double>(q, value)};
  }

  // Per-column theta vector ordered like the design's columns.
  std::vector<double> per_column(const Design& d) const;
  void validate() const;
};

// exp{-sum_l theta_l (u_l - v_l)^2}
double gauss_corr(std::span<const double> u, std::span<const double> v,
                  std::span<const double> theta);

inline constexpr double kBaseNugget = 1e-8;
inline constexpr double kMaxNugget = 1e-4;

// Correlation matrix with unit diagonal (no nugget).
Eigen::MatrixXd corr_matrix(const Design& design, const CorrelationParams& theta);

// R factorized with the nugget policy: start at 1e-8, escalate x10 up to
// 1e-4, then throw ConditioningError.  Prediction MSE and correlation
// vectors are evaluated against this factorization.
class CorrFactor {
 public:
  CorrFactor(const Design& design, const CorrelationParams& theta);

  double nugget() const { return nugget_; }
  // true when the nugget had to escalate or the smallest Cholesky pivot sits
  // at the nugget floor (R effectively singular without it)
  bool ill_conditioned() const { return ill_conditioned_; }
  int n() const { return static_cast<int>(points_.rows()); }

  Eigen::VectorXd corr_vector(std::span<const double> point) const;
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
  double log_det() const;

  // 1 - r'R^{-1}r, clamped to [0,1].
  double mse(std::span<const double> point) const;

 private:
  Eigen::MatrixXd points_;
  std::vector<double> theta_cols_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double nugget_ = kBaseNugget;
  bool ill_conditioned_ = false;
};

// Model-free posterior MSE at a point given (design, theta).
double predict_mse(const Design& design, const CorrelationParams& theta,
                   std::span<const double> point);

// Fitted GP: mu and tau^2 profiled out, theta from likelihood search.
class KrigingModel {
 public:
  KrigingModel(Design design, Eigen::VectorXd y, CorrelationParams theta);

  const Design& design() const { return design_; }
  const Eigen::VectorXd& y() const { return y_; }
  const CorrelationParams& theta() const { return theta_; }
  double mu() const { return mu_; }
  double tau2() const { return tau2_; }
  // Set when y had zero variance and the fit degenerated to a constant.
  bool constant_model() const { return constant_; }

  double predict_mean(std::span<const double> point) const;
  // tau^2 * (1 - r'R^{-1}r)
  double predict_variance(std::span<const double> point) const;

 private:
  Design design_;
  Eigen::VectorXd y_;
  CorrelationParams theta_;
  CorrFactor factor_;
  double mu_ = 0.0;
  double tau2_ = 0.0;
  bool constant_ = false;
  Eigen::VectorXd alpha_;  // R^{-1}(y - mu 1)
};

inline double predict_mean(const KrigingModel& m, std::span<const double> pt) {
  return m.predict_mean(pt);
}

struct FitOptions {
  double theta_lo = 1e-2;
  double theta_hi = 1e3;
  int starts = 8;
  std::uint64_t seed = 0;
  int max_iter = 200;  // per Nelder-Mead start
};

// Profile-likelihood fit: mu and tau^2 closed form, theta by multistart
// Nelder-Mead in log-theta space.  Deterministic for a given seed; starts
// may run concurrently and are merged by best likelihood with lowest start
// index breaking ties.
KrigingModel fit_kriging(const Design& design, const Eigen::VectorXd& y,
                         const FitOptions& opts = {});

}  // namespace robustfill

#endif
