#include "robustfill/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "robustfill/optim.hpp"
#include "robustfill/parallel.hpp"
#include "robustfill/rng.hpp"

namespace robustfill {

std::vector<double> CorrelationParams::per_column(const Design& d) const {
  validate();
  if (static_cast<int>(theta_x.size()) != d.n_control() ||
      static_cast<int>(theta_z.size()) != d.n_noise())
    throw std::invalid_argument("CorrelationParams: size does not match design");
  std::vector<double> cols(d.n_factors());
  std::size_t ix = 0, iz = 0;
  for (int j = 0; j < d.n_factors(); ++j) {
    cols[j] = d.factor(j).role == FactorRole::Control ? theta_x[ix++]
                                                      : theta_z[iz++];
  }
  return cols;
}

void CorrelationParams::validate() const {
  for (double t : theta_x)
    if (!(t >= 0.0) || !std::isfinite(t))
      throw std::invalid_argument("CorrelationParams: theta_x must be finite >= 0");
  for (double t : theta_z)
    if (!(t >= 0.0) || !std::isfinite(t))
      throw std::invalid_argument("CorrelationParams: theta_z must be finite >= 0");
}

double gauss_corr(std::span<const double> u, std::span<const double> v,
                  std::span<const double> theta) {
  if (u.size() != v.size() || u.size() != theta.size())
    throw std::invalid_argument("gauss_corr: dimension mismatch");
  double s = 0.0;
  for (std::size_t l = 0; l < u.size(); ++l) {
    const double d = u[l] - v[l];
    s += theta[l] * d * d;
  }
  return std::exp(-s);
}

Eigen::MatrixXd corr_matrix(const Design& design, const CorrelationParams& theta) {
  const std::vector<double> t = theta.per_column(design);
  const int n = design.n_runs();
  const Eigen::MatrixXd& X = design.runs();
  Eigen::MatrixXd R(n, n);
  for (int i = 0; i < n; ++i) {
    R(i, i) = 1.0;
    for (int j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (int l = 0; l < design.n_factors(); ++l) {
        const double d = X(i, l) - X(j, l);
        s += t[l] * d * d;
      }
      R(i, j) = R(j, i) = std::exp(-s);
    }
  }
  return R;
}

CorrFactor::CorrFactor(const Design& design, const CorrelationParams& theta)
    : points_(design.runs()), theta_cols_(theta.per_column(design)) {
  Eigen::MatrixXd R = corr_matrix(design, theta);
  for (double nug = kBaseNugget;; nug *= 10.0) {
    Eigen::MatrixXd Rn = R;
    Rn.diagonal().array() += nug;
    llt_.compute(Rn);
    if (llt_.info() == Eigen::Success) {
      nugget_ = nug;
      const double min_pivot = llt_.matrixLLT().diagonal().minCoeff();
      ill_conditioned_ = nug > kBaseNugget || min_pivot * min_pivot <= 100.0 * nug;
      return;
    }
    if (nug >= kMaxNugget)
      throw ConditioningError(
          "corr_matrix: factorization failed at nugget cap 1e-4");
  }
}

Eigen::VectorXd CorrFactor::corr_vector(std::span<const double> point) const {
  if (static_cast<Eigen::Index>(point.size()) != points_.cols())
    throw std::invalid_argument("corr_vector: point dimension mismatch");
  const int n = static_cast<int>(points_.rows());
  Eigen::VectorXd r(n);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    bool exact = true;
    for (Eigen::Index l = 0; l < points_.cols(); ++l) {
      const double d = point[l] - points_(i, l);
      if (d != 0.0) exact = false;
      s += theta_cols_[l] * d * d;
    }
    // The nugget acts as jitter, not measurement error: a query that
    // coincides with a stored row carries the jittered self-correlation,
    // which makes prediction interpolate and drives the MSE to zero there.
    r(i) = std::exp(-s) + (exact ? nugget_ : 0.0);
  }
  return r;
}

Eigen::VectorXd CorrFactor::solve(const Eigen::VectorXd& rhs) const {
  return llt_.solve(rhs);
}

double CorrFactor::log_det() const {
  return 2.0 * llt_.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

double CorrFactor::mse(std::span<const double> point) const {
  const Eigen::VectorXd r = corr_vector(point);
  const double q = r.dot(llt_.solve(r));
  return std::clamp(1.0 - q, 0.0, 1.0);
}

double predict_mse(const Design& design, const CorrelationParams& theta,
                   std::span<const double> point) {
  return CorrFactor(design, theta).mse(point);
}

KrigingModel::KrigingModel(Design design, Eigen::VectorXd y,
                           CorrelationParams theta)
    : design_(std::move(design)),
      y_(std::move(y)),
      theta_(std::move(theta)),
      factor_(design_, theta_) {
  if (y_.size() != design_.n_runs())
    throw std::invalid_argument("KrigingModel: y length does not match design");
  if ((y_.array() - y_(0)).abs().maxCoeff() == 0.0) {
    mu_ = y_(0);
    tau2_ = 0.0;
    constant_ = true;
    alpha_ = Eigen::VectorXd::Zero(y_.size());
    return;
  }
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(y_.size());
  const Eigen::VectorXd Ri_y = factor_.solve(y_);
  const Eigen::VectorXd Ri_1 = factor_.solve(one);
  mu_ = one.dot(Ri_y) / one.dot(Ri_1);
  const Eigen::VectorXd resid = y_.array() - mu_;
  alpha_ = factor_.solve(resid);
  tau2_ = std::max(0.0, resid.dot(alpha_) / y_.size());
  if (tau2_ == 0.0) constant_ = true;
}

double KrigingModel::predict_mean(std::span<const double> point) const {
  if (constant_) return mu_;
  return mu_ + factor_.corr_vector(point).dot(alpha_);
}

double KrigingModel::predict_variance(std::span<const double> point) const {
  return tau2_ * factor_.mse(point);
}

namespace {

// Negative profile log-likelihood up to constants: n log tau2_hat + log|R|.
double neg_profile_loglik(const Design& design, const Eigen::VectorXd& y,
                          const CorrelationParams& theta) {
  try {
    CorrFactor fac(design, theta);
    const Eigen::VectorXd one = Eigen::VectorXd::Ones(y.size());
    const Eigen::VectorXd Ri_y = fac.solve(y);
    const Eigen::VectorXd Ri_1 = fac.solve(one);
    const double mu = one.dot(Ri_y) / one.dot(Ri_1);
    const Eigen::VectorXd resid = y.array() - mu;
    const double tau2 = resid.dot(fac.solve(resid)) / y.size();
    if (!(tau2 > 0.0) || !std::isfinite(tau2))
      return std::numeric_limits<double>::max();
    return y.size() * std::log(tau2) + fac.log_det();
  } catch (const ConditioningError&) {
    return std::numeric_limits<double>::max();
  }
}

}  // namespace

KrigingModel fit_kriging(const Design& design, const Eigen::VectorXd& y,
                         const FitOptions& opts) {
  const int dims = design.n_factors();
  const int n = design.n_runs();
  if (n < std::max(dims + 1, 3))
    throw std::invalid_argument("fit_kriging: need n >= max(p+q+1, 3) runs");
  if (!y.allFinite()) throw std::invalid_argument("fit_kriging: non-finite y");

  const double spread = (y.array() - y.mean()).abs().maxCoeff();
  if (spread == 0.0) {
    // Degenerate response: constant model, tau2 = 0 flag.
    CorrelationParams theta = CorrelationParams::constant(
        opts.theta_hi, design.n_control(), design.n_noise());
    return KrigingModel(design, y, theta);
  }

  const double llo = std::log(opts.theta_lo), lhi = std::log(opts.theta_hi);
  auto objective = [&](const std::vector<double>& log_theta) {
    CorrelationParams th;
    int j = 0;
    th.theta_x.resize(design.n_control());
    th.theta_z.resize(design.n_noise());
    for (auto& t : th.theta_x) t = std::exp(std::clamp(log_theta[j++], llo, lhi));
    for (auto& t : th.theta_z) t = std::exp(std::clamp(log_theta[j++], llo, lhi));
    return neg_profile_loglik(design, y, th);
  };

  struct StartResult {
    std::vector<double> x;
    double value = std::numeric_limits<double>::max();
  };
  std::vector<StartResult> results(opts.starts);
  parallel_for(opts.starts, [&](std::size_t s) {
    Rng rng = make_rng(mix_seed(opts.seed, 0x6B72u ^ s));
    std::vector<double> x0(dims);
    for (auto& v : x0) v = uniform_range(rng, llo, lhi);
    OptimResult r = nelder_mead(objective, std::move(x0), 0.5 * (lhi - llo) / 8.0,
                                opts.max_iter);
    results[s] = {std::move(r.x), r.value};
  });

  std::size_t best = 0;
  for (std::size_t s = 1; s < results.size(); ++s)
    if (results[s].value < results[best].value) best = s;

  CorrelationParams theta;
  theta.theta_x.resize(design.n_control());
  theta.theta_z.resize(design.n_noise());
  int j = 0;
  for (auto& t : theta.theta_x)
    t = std::exp(std::clamp(results[best].x[j++], llo, lhi));
  for (auto& t : theta.theta_z)
    t = std::exp(std::clamp(results[best].x[j++], llo, lhi));
  return KrigingModel(design, y, theta);
}

}  // namespace robustfill
