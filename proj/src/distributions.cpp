#include "robustfill/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "robustfill/rng.hpp"

namespace robustfill {

namespace {
constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}  // namespace

double norm_pdf(double x, double mean, double sd) {
  const double t = (x - mean) / sd;
  return std::exp(-0.5 * t * t) / (sd * std::sqrt(kTwoPi));
}

double norm_cdf(double x, double mean, double sd) {
  if (!std::isfinite(x)) throw std::domain_error("norm_cdf: non-finite argument");
  if (!(sd > 0.0)) throw std::domain_error("norm_cdf: sd must be positive");
  return 0.5 * std::erfc(-(x - mean) / (sd * kSqrt2));
}

double norm_quantile(double p, double mean, double sd) {
  // Wichura's AS241 (PPND16): relative accuracy ~1e-16 over (0,1).
  if (!(sd > 0.0)) throw std::domain_error("norm_quantile: sd must be positive");
  if (!(p > 0.0 && p < 1.0))
    throw std::domain_error("norm_quantile: p must lie in (0,1)");

  static const double A[8] = {3.3871328727963666080e0,  1.3314166789178437745e+2,
                              1.9715909503065514427e+3, 1.3731693765509461125e+4,
                              4.5921953931549871457e+4, 6.7265770927008700853e+4,
                              3.3430575583588128105e+4, 2.5090809287301226727e+3};
  static const double B[8] = {1.0,                      4.2313330701600911252e+1,
                              6.8718700749205790830e+2, 5.3941960214247511077e+3,
                              2.1213794301586595867e+4, 3.9307895800092710610e+4,
                              2.8729085735721942674e+4, 5.2264952788528545610e+3};
  static const double C[8] = {1.42343711074968357734e0,    4.63033784615654529590e0,
                              5.76949722146069140550e0,    3.64784832476320460504e0,
                              1.27045825245236838258e0,    2.41780725177450611770e-1,
                              2.27238449892691845833e-2,   7.74545014278341407640e-4};
  static const double D[8] = {1.0,                         2.05319162663775882187e0,
                              1.67638483018380384940e0,    6.89767334985100004550e-1,
                              1.48103976427480074590e-1,   1.51986665636164571966e-2,
                              5.47593808499534494600e-4,   1.05075007164441684324e-9};
  static const double E[8] = {6.65790464350110377720e0,    5.46378491116411436990e0,
                              1.78482653991729133580e0,    2.96560571828504891230e-1,
                              2.65321895265761230930e-2,   1.24266094738807843860e-3,
                              2.71155556874348757815e-5,   2.01033439929228813265e-7};
  static const double F[8] = {1.0,                         5.99832206555887937690e-1,
                              1.36929880922735805310e-1,   1.48753612908506148525e-2,
                              7.86869131145613259100e-4,   1.84631831751005468180e-5,
                              1.42151175831644588870e-7,   2.04426310338993978564e-15};

  auto ratpoly = [](const double* num, const double* den, double r) {
    double n = num[7], d = den[7];
    for (int i = 6; i >= 0; --i) {
      n = n * r + num[i];
      d = d * r + den[i];
    }
    return n / d;
  };

  const double q = p - 0.5;
  double z;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    z = q * ratpoly(A, B, r);
  } else {
    double r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    if (r <= 5.0) {
      z = ratpoly(C, D, r - 1.6);
    } else {
      z = ratpoly(E, F, r - 5.0);
    }
    if (q < 0.0) z = -z;
  }
  return mean + sd * z;
}

double normal_draw(Rng& g) { return norm_quantile(uniform01(g)); }

// --------------------------------------------------------------------------
// Beta(alpha, alpha)
// --------------------------------------------------------------------------

namespace {

// Continued fraction for the incomplete beta, modified Lentz.
double betacf(double a, double b, double x) {
  const double eps = 1e-16, fpmin = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < fpmin) d = fpmin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 300; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::abs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::abs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) break;
  }
  return h;
}

double log_beta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

void check_alpha(const BetaWarp& warp) {
  // [0.5, 1] is the theoretically supported band; smaller positive alphas
  // are accepted for the unweighted-criterion comparison.
  if (!(warp.alpha > 0.0 && warp.alpha <= 1.0))
    throw std::domain_error("BetaWarp: alpha must lie in (0, 1]");
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double front =
      std::exp(a * std::log(x) + b * std::log1p(-x) - log_beta(a, b));
  if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
  // symmetry: I_x(a,b) = 1 - I_{1-x}(b,a)
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double beta_pdf(double u, const BetaWarp& warp) {
  check_alpha(warp);
  if (u < 0.0 || u > 1.0) throw std::domain_error("beta_pdf: u outside [0,1]");
  const double a = warp.alpha;
  if (a == 1.0) return 1.0;
  if (u == 0.0 || u == 1.0) return std::numeric_limits<double>::infinity();
  return std::exp((a - 1.0) * (std::log(u) + std::log1p(-u)) - log_beta(a, a));
}

double beta_cdf(double u, const BetaWarp& warp) {
  check_alpha(warp);
  if (u < 0.0 || u > 1.0) throw std::domain_error("beta_cdf: u outside [0,1]");
  if (warp.alpha == 1.0) return u;
  // Evaluate on u<=1/2 and reflect so that B(u)+B(1-u)=1 holds to rounding.
  if (u > 0.5) return 1.0 - incomplete_beta(warp.alpha, warp.alpha, 1.0 - u);
  return incomplete_beta(warp.alpha, warp.alpha, u);
}

double beta_quantile(double p, const BetaWarp& warp) {
  check_alpha(warp);
  if (p < 0.0 || p > 1.0) throw std::domain_error("beta_quantile: p outside [0,1]");
  if (warp.alpha == 1.0) return p;
  if (p == 0.0) return 0.0;
  if (p == 1.0) return 1.0;
  if (p == 0.5) return 0.5;
  // Reflect to the lower half, solve there, map back.
  if (p > 0.5) return 1.0 - beta_quantile(1.0 - p, warp);

  double lo = 0.0, hi = 0.5;
  double x = 0.5 * p;  // crude start inside (lo, hi)
  for (int iter = 0; iter < 200; ++iter) {
    const double fx = beta_cdf(x, warp) - p;
    if (fx > 0.0)
      hi = x;
    else
      lo = x;
    const double dfx = beta_pdf(x, warp);
    double step = fx / dfx;
    double xn = x - step;
    if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);  // Newton left the bracket
    if (std::abs(xn - x) < 1e-15 || hi - lo < 1e-15) {
      x = xn;
      break;
    }
    x = xn;
  }
  return x;
}

// --------------------------------------------------------------------------
// NoiseModel
// --------------------------------------------------------------------------

NoiseModel NoiseModel::normal(double mean, double sd) {
  if (!(sd > 0.0) || !std::isfinite(mean) || !std::isfinite(sd))
    throw std::invalid_argument("NoiseModel::normal: need finite mean, sd > 0");
  NoiseModel m;
  m.kind_ = NoiseKind::Normal;
  m.mean_ = mean;
  m.sd_ = sd;
  m.support_ = {-std::numeric_limits<double>::infinity(),
                std::numeric_limits<double>::infinity(), false, false};
  return m;
}

NoiseModel NoiseModel::truncated_normal(double mean, double sd, double lo,
                                        double hi) {
  if (!(sd > 0.0) || !(lo < hi))
    throw std::invalid_argument("NoiseModel::truncated_normal: bad parameters");
  NoiseModel m;
  m.kind_ = NoiseKind::TruncatedNormal;
  m.mean_ = mean;
  m.sd_ = sd;
  m.support_ = {lo, hi, true, true};
  m.trunc_mass_ = norm_cdf(hi, mean, sd) - norm_cdf(lo, mean, sd);
  if (!(m.trunc_mass_ > 0.0))
    throw std::invalid_argument(
        "NoiseModel::truncated_normal: no mass on [lo,hi]");
  return m;
}

NoiseModel NoiseModel::uniform(double lo, double hi) {
  if (!(lo < hi)) throw std::invalid_argument("NoiseModel::uniform: need lo < hi");
  NoiseModel m;
  m.kind_ = NoiseKind::Uniform;
  m.mean_ = 0.5 * (lo + hi);
  m.sd_ = (hi - lo) / std::sqrt(12.0);
  m.support_ = {lo, hi, true, true};
  return m;
}

NoiseModel NoiseModel::empirical_table(std::vector<double> values,
                                       std::vector<double> cum_probs) {
  if (values.size() != cum_probs.size() || values.size() < 2)
    throw std::invalid_argument("NoiseModel::empirical_table: need >= 2 knots");
  if (cum_probs.front() != 0.0 || cum_probs.back() != 1.0)
    throw std::invalid_argument(
        "NoiseModel::empirical_table: cum_probs must run from 0 to 1");
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (!(values[i] > values[i - 1]) || !(cum_probs[i] > cum_probs[i - 1]))
      throw std::invalid_argument(
          "NoiseModel::empirical_table: knots must be strictly increasing");
  }
  NoiseModel m;
  m.kind_ = NoiseKind::EmpiricalTable;
  m.support_ = {values.front(), values.back(), true, true};
  // mean / sd of the piecewise-uniform density, for reporting.
  double mu = 0.0, m2 = 0.0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    const double pm = cum_probs[i] - cum_probs[i - 1];
    const double a = values[i - 1], b = values[i];
    mu += pm * 0.5 * (a + b);
    m2 += pm * (a * a + a * b + b * b) / 3.0;
  }
  m.mean_ = mu;
  m.sd_ = std::sqrt(std::max(0.0, m2 - mu * mu));
  m.values_ = std::move(values);
  m.cum_probs_ = std::move(cum_probs);
  return m;
}

double NoiseModel::pdf(double z) const {
  switch (kind_) {
    case NoiseKind::Normal:
      return norm_pdf(z, mean_, sd_);
    case NoiseKind::TruncatedNormal:
      if (z < support_.lo || z > support_.hi) return 0.0;
      return norm_pdf(z, mean_, sd_) / trunc_mass_;
    case NoiseKind::Uniform:
      if (z < support_.lo || z > support_.hi) return 0.0;
      return 1.0 / (support_.hi - support_.lo);
    case NoiseKind::EmpiricalTable: {
      if (z < support_.lo || z > support_.hi) return 0.0;
      auto it = std::upper_bound(values_.begin(), values_.end(), z);
      std::size_t i = std::min<std::size_t>(
          values_.size() - 1,
          std::max<std::size_t>(1, static_cast<std::size_t>(it - values_.begin())));
      return (cum_probs_[i] - cum_probs_[i - 1]) / (values_[i] - values_[i - 1]);
    }
  }
  return 0.0;
}

double NoiseModel::cdf(double z) const {
  if (!std::isfinite(z)) throw std::domain_error("NoiseModel::cdf: non-finite z");
  switch (kind_) {
    case NoiseKind::Normal:
      return norm_cdf(z, mean_, sd_);
    case NoiseKind::TruncatedNormal: {
      if (z <= support_.lo) return 0.0;
      if (z >= support_.hi) return 1.0;
      return (norm_cdf(z, mean_, sd_) - norm_cdf(support_.lo, mean_, sd_)) /
             trunc_mass_;
    }
    case NoiseKind::Uniform:
      return std::clamp((z - support_.lo) / (support_.hi - support_.lo), 0.0, 1.0);
    case NoiseKind::EmpiricalTable: {
      if (z <= support_.lo) return 0.0;
      if (z >= support_.hi) return 1.0;
      auto it = std::upper_bound(values_.begin(), values_.end(), z);
      std::size_t i = static_cast<std::size_t>(it - values_.begin());
      const double t = (z - values_[i - 1]) / (values_[i] - values_[i - 1]);
      return cum_probs_[i - 1] + t * (cum_probs_[i] - cum_probs_[i - 1]);
    }
  }
  return 0.0;
}

double NoiseModel::quantile(double p) const {
  const bool interior = p > 0.0 && p < 1.0;
  switch (kind_) {
    case NoiseKind::Normal:
      // endpoints have no finite preimage
      return norm_quantile(p, mean_, sd_);
    case NoiseKind::TruncatedNormal: {
      if (p < 0.0 || p > 1.0)
        throw std::domain_error("NoiseModel::quantile: p outside [0,1]");
      if (p == 0.0) return support_.lo;
      if (p == 1.0) return support_.hi;
      const double base = norm_cdf(support_.lo, mean_, sd_);
      return norm_quantile(base + p * trunc_mass_, mean_, sd_);
    }
    case NoiseKind::Uniform:
      if (p < 0.0 || p > 1.0)
        throw std::domain_error("NoiseModel::quantile: p outside [0,1]");
      return support_.lo + p * (support_.hi - support_.lo);
    case NoiseKind::EmpiricalTable: {
      if (p < 0.0 || p > 1.0)
        throw std::domain_error("NoiseModel::quantile: p outside [0,1]");
      if (!interior) return p == 0.0 ? support_.lo : support_.hi;
      auto it = std::upper_bound(cum_probs_.begin(), cum_probs_.end(), p);
      std::size_t i = std::min<std::size_t>(
          cum_probs_.size() - 1, static_cast<std::size_t>(it - cum_probs_.begin()));
      const double t = (p - cum_probs_[i - 1]) / (cum_probs_[i] - cum_probs_[i - 1]);
      return values_[i - 1] + t * (values_[i] - values_[i - 1]);
    }
  }
  return 0.0;
}

double NoiseModel::fk_integral(double k) const {
  if (!(k > 0.0)) throw std::domain_error("fk_integral: k must be positive");
  switch (kind_) {
    case NoiseKind::Normal:
      // (2 pi sd^2)^{(1-k)/2} / sqrt(k)
      return std::pow(kTwoPi * sd_ * sd_, 0.5 * (1.0 - k)) / std::sqrt(k);
    case NoiseKind::TruncatedNormal: {
      const double rk = std::sqrt(k);
      const double mass_k = norm_cdf(rk * (support_.hi - mean_) / sd_) -
                            norm_cdf(rk * (support_.lo - mean_) / sd_);
      return std::pow(kTwoPi * sd_ * sd_, 0.5 * (1.0 - k)) / rk * mass_k /
             std::pow(trunc_mass_, k);
    }
    case NoiseKind::Uniform:
      return std::pow(support_.hi - support_.lo, 1.0 - k);
    case NoiseKind::EmpiricalTable: {
      // density is piecewise constant
      double s = 0.0;
      for (std::size_t i = 1; i < values_.size(); ++i) {
        const double len = values_[i] - values_[i - 1];
        const double f = (cum_probs_[i] - cum_probs_[i - 1]) / len;
        s += std::pow(f, k) * len;
      }
      return s;
    }
  }
  return 0.0;
}

void NoiseModel::set_covariance(Eigen::MatrixXd sigma_z) {
  symmetric_sqrt(sigma_z);  // validates SPD
  sigma_z_ = std::move(sigma_z);
}

// --------------------------------------------------------------------------
// Transforms
// --------------------------------------------------------------------------

std::vector<double> inverse_transform(std::span<const double> column,
                                      const NoiseModel& model) {
  const Interval sup = model.support();
  std::vector<double> out;
  out.reserve(column.size());
  for (double u : column) {
    if (!(u >= 0.0 && u <= 1.0))
      throw std::domain_error("inverse_transform: entry outside [0,1]");
    if ((u == 0.0 && !sup.bounded_below) || (u == 1.0 && !sup.bounded_above))
      throw std::domain_error(
          "inverse_transform: boundary entry with unbounded support");
    out.push_back(model.quantile(u));
  }
  return out;
}

std::vector<double> double_transform(std::span<const double> column,
                                     const NoiseModel& model,
                                     const BetaWarp& warp) {
  std::vector<double> warped;
  warped.reserve(column.size());
  for (double u : column) {
    if (!(u >= 0.0 && u <= 1.0))
      throw std::domain_error("double_transform: entry outside [0,1]");
    warped.push_back(beta_quantile(u, warp));
  }
  return inverse_transform(warped, model);
}

Eigen::MatrixXd symmetric_sqrt(const Eigen::MatrixXd& spd) {
  if (spd.rows() != spd.cols())
    throw std::invalid_argument("symmetric_sqrt: matrix must be square");
  if (!spd.isApprox(spd.transpose(), 1e-12))
    throw std::invalid_argument("symmetric_sqrt: matrix must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(spd);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("symmetric_sqrt: eigen decomposition failed");
  const double tol = 1e-12 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  if ((es.eigenvalues().array() <= tol).any())
    throw std::invalid_argument("symmetric_sqrt: matrix is not positive definite");
  return es.eigenvectors() *
         es.eigenvalues().cwiseSqrt().asDiagonal() *
         es.eigenvectors().transpose();
}

Eigen::MatrixXd correlate_mvn(const Eigen::MatrixXd& rows01,
                              const Eigen::MatrixXd& sigma_z) {
  if (rows01.cols() != sigma_z.rows())
    throw std::invalid_argument("correlate_mvn: dimension mismatch");
  const Eigen::MatrixXd root = symmetric_sqrt(sigma_z);
  Eigen::MatrixXd gauss(rows01.rows(), rows01.cols());
  for (Eigen::Index i = 0; i < rows01.rows(); ++i)
    for (Eigen::Index j = 0; j < rows01.cols(); ++j)
      gauss(i, j) = norm_quantile(rows01(i, j));
  return gauss * root.transpose();
}

}  // namespace robustfill
