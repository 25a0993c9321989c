#include "robustfill/criteria.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <utility>

#include "robustfill/quadrature.hpp"
#include "robustfill/rng.hpp"

namespace robustfill {

namespace {

constexpr double kSqrtPi = 1.7724538509055160273;

// Cholesky with the module-wide nugget policy.
std::pair<Eigen::LLT<Eigen::MatrixXd>, double> llt_with_nugget(
    const Eigen::MatrixXd& R) {
  for (double nug = kBaseNugget;; nug *= 10.0) {
    Eigen::MatrixXd Rn = R;
    Rn.diagonal().array() += nug;
    Eigen::LLT<Eigen::MatrixXd> llt(Rn);
    if (llt.info() == Eigen::Success) return {std::move(llt), nug};
    if (nug >= kMaxNugget)
      throw ConditioningError("criteria: correlation matrix factorization failed");
  }
}

// Resolves the per-noise-column models (broadcasting a single entry).
std::vector<const NoiseModel*> noise_models_by_column(const Design& design,
                                                      const NoiseModels& models) {
  std::vector<int> idx;
  for (int j = 0; j < design.n_factors(); ++j)
    if (design.factor(j).role == FactorRole::NoiseExternal) idx.push_back(j);
  std::vector<const NoiseModel*> per_col(design.n_factors(), nullptr);
  if (idx.empty()) return per_col;
  if (models.size() != idx.size() && models.size() != 1)
    throw std::invalid_argument(
        "criteria: need one NoiseModel per external-noise column (or one total)");
  for (std::size_t i = 0; i < idx.size(); ++i)
    per_col[idx[i]] = &models[models.size() == 1 ? 0 : i];
  return per_col;
}

// Per-dimension rule whose weights absorb f^k on noise dimensions, so that
// sum_i w_i g(z_i) ~ integral of g f^k.  Control dimensions use plain
// Gauss-Legendre on [0,1].
Quad1D dimension_rule(const NoiseModel* model, double k, int nodes) {
  if (model == nullptr) return gauss_legendre(nodes, 0.0, 1.0);
  const Interval sup = model->support();
  if (model->kind() == NoiseKind::Normal) {
    // z = mean + sqrt(2/k) sd t turns the f^k weight into exp(-t^2).
    Quad1D gh = gauss_hermite(nodes);
    const double sd = model->sd(), mean = model->mean();
    const double scale = std::sqrt(2.0 / k) * sd;
    const double c = std::pow(2.0 * std::numbers::pi * sd * sd, -0.5 * k) * scale;
    for (int i = 0; i < nodes; ++i) {
      gh.nodes[i] = mean + scale * gh.nodes[i];
      gh.weights[i] *= c;
    }
    return gh;
  }
  Quad1D gl = gauss_legendre(nodes, sup.lo, sup.hi);
  for (int i = 0; i < nodes; ++i)
    gl.weights[i] *= std::pow(model->pdf(gl.nodes[i]), k);
  return gl;
}

int count_external_noise(const Design& design) {
  int q = 0;
  for (int j = 0; j < design.n_factors(); ++j)
    if (design.factor(j).role == FactorRole::NoiseExternal) ++q;
  return q;
}

// integral over [0,1]^p x Z of MSE(x,z)^power * f^k(z), by tensor quadrature
// or seeded Monte Carlo depending on cfg.
double weighted_mse_integral(const Design& design, const CorrelationParams& theta,
                             const NoiseModels& models, double k, double power,
                             const CriterionConfig& cfg) {
  if (cfg.nodes_per_dim < 8)
    throw std::invalid_argument("CriterionConfig: nodes_per_dim must be >= 8");
  const auto per_col = noise_models_by_column(design, models);
  const CorrFactor factor(design, theta);
  const int dims = design.n_factors();

  QuadRule rule = cfg.rule;
  if (rule == QuadRule::Auto)
    rule = count_external_noise(design) >= 3 ? QuadRule::MonteCarlo
                                             : QuadRule::Tensor;

  if (rule == QuadRule::Tensor) {
    std::vector<Quad1D> rules;
    rules.reserve(dims);
    for (int j = 0; j < dims; ++j)
      rules.push_back(dimension_rule(per_col[j], k, cfg.nodes_per_dim));
    const TensorGrid grid{std::move(rules)};
    double acc = 0.0;
    grid.for_each([&](const std::vector<double>& pt, double w) {
      acc += w * std::pow(factor.mse(pt), power);
    });
    return acc;
  }

  // Monte Carlo: x uniform, z by inverse transform, estimator
  // E[MSE^power * f^{k-1}] accumulated in draw order.
  Rng rng = make_rng(mix_seed(cfg.seed, 0xC41Au));
  std::vector<double> pt(dims);
  double acc = 0.0;
  for (int s = 0; s < cfg.mc_samples; ++s) {
    double fk1 = 1.0;
    for (int j = 0; j < dims; ++j) {
      const double u = uniform01(rng);
      if (per_col[j] == nullptr) {
        pt[j] = u;
      } else {
        pt[j] = per_col[j]->quantile(u);
        if (k != 1.0) fk1 *= std::pow(per_col[j]->pdf(pt[j]), k - 1.0);
      }
    }
    acc += std::pow(factor.mse(pt), power) * fk1;
  }
  return acc / cfg.mc_samples;
}

double c_k(const Design& design, const NoiseModels& models, double k) {
  const auto per_col = noise_models_by_column(design, models);
  double c = 1.0;
  for (const NoiseModel* m : per_col)
    if (m != nullptr) c *= m->fk_integral(k);
  if (!(c > 0.0) || !std::isfinite(c))
    throw std::domain_error("criteria: C_k is not finite and positive");
  return c;
}

}  // namespace

double wrmse(const Design& design, const CorrelationParams& theta,
             std::span<const double> point, const NoiseModels& models) {
  const auto per_col = noise_models_by_column(design, models);
  const CorrFactor factor(design, theta);
  double f = 1.0;
  for (int j = 0; j < design.n_factors(); ++j)
    if (per_col[j] != nullptr) f *= per_col[j]->pdf(point[j]);
  if (f == 0.0) return 0.0;
  return std::sqrt(factor.mse(point)) * f;
}

double irmse(const Design& design, const CorrelationParams& theta,
             const NoiseModels& models, const CriterionConfig& cfg,
             CriterionDiagnostics* diag) {
  const double v = weighted_mse_integral(design, theta, models, 1.0, 0.5, cfg);
  if (v < 1e-300) {
    if (diag) diag->underflow = true;
    return 0.0;
  }
  return v;
}

double irmse_k(const Design& design, const CorrelationParams& theta,
               const NoiseModels& models, const CriterionConfig& cfg,
               CriterionDiagnostics* diag) {
  if (!(cfg.k > 0.0)) throw std::domain_error("irmse_k: k must be positive");
  const double ck = c_k(design, models, cfg.k);
  const double v =
      weighted_mse_integral(design, theta, models, cfg.k, 0.5 * cfg.k, cfg) / ck;
  if (v < 1e-300) {
    if (diag) diag->underflow = true;
    return 0.0;
  }
  return std::pow(v, 1.0 / cfg.k);
}

double imse(const Design& design, const CorrelationParams& theta,
            const NoiseModels& models, const CriterionConfig& cfg,
            CriterionDiagnostics* diag) {
  const double c2 = c_k(design, models, 2.0);
  const double v =
      weighted_mse_integral(design, theta, models, 2.0, 1.0, cfg) / c2;
  if (v < 1e-300) {
    if (diag) diag->underflow = true;
    return 0.0;
  }
  return v;
}

double min_efficiency(const Design& design,
                      const std::vector<CorrelationParams>& theta_set,
                      const std::vector<double>& optima,
                      const NoiseModels& models, const CriterionConfig& cfg) {
  if (theta_set.empty())
    throw std::invalid_argument("min_efficiency: Theta must be nonempty");
  if (optima.size() != theta_set.size())
    throw std::invalid_argument(
        "min_efficiency: need one best-known optimum per theta");
  double worst = 1.0;
  for (std::size_t i = 0; i < theta_set.size(); ++i) {
    const double denom = irmse(design, theta_set[i], models, cfg);
    if (!(denom > 0.0))
      throw std::domain_error("min_efficiency: IRMSE(D, theta) vanished");
    worst = std::min(worst, std::clamp(optima[i] / denom, 0.0, 1.0));
  }
  return worst;
}

double irmse_1d_noise(const std::vector<double>& points, double theta,
                      const NoiseModel& model, int nodes) {
  const int n = static_cast<int>(points.size());
  if (n < 1) throw std::invalid_argument("irmse_1d_noise: empty design");
  Eigen::MatrixXd R(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double d = points[i] - points[j];
      R(i, j) = std::exp(-theta * d * d);
    }
  auto [llt, nug] = llt_with_nugget(R);

  // sqrt(MSE) kinks exactly at the design points, so the node budget is
  // spread over composite Gauss-Legendre cells split there.
  const Interval sup = model.support();
  const double lo = sup.bounded_below ? sup.lo : model.mean() - 8.0 * model.sd();
  const double hi = sup.bounded_above ? sup.hi : model.mean() + 8.0 * model.sd();
  std::vector<double> cuts{lo};
  std::vector<double> sorted = points;
  std::sort(sorted.begin(), sorted.end());
  for (double p : sorted)
    if (p > cuts.back() && p < hi) cuts.push_back(p);
  cuts.push_back(hi);
  const int cells = static_cast<int>(cuts.size()) - 1;
  const int per_cell = std::max(4, nodes / cells);

  Eigen::VectorXd r(n);
  double acc = 0.0;
  for (int c = 0; c < cells; ++c) {
    if (!(cuts[c + 1] > cuts[c])) continue;
    const Quad1D gl = gauss_legendre(per_cell, cuts[c], cuts[c + 1]);
    for (std::size_t s = 0; s < gl.size(); ++s) {
      for (int i = 0; i < n; ++i) {
        const double d = gl.nodes[s] - points[i];
        r(i) = std::exp(-theta * d * d);
      }
      const double mse = std::clamp(1.0 - r.dot(llt.solve(r)), 0.0, 1.0);
      acc += gl.weights[s] * std::sqrt(mse) * model.pdf(gl.nodes[s]);
    }
  }
  return acc;
}

double irmse_upper_bound(const std::vector<double>& sorted_points, double theta,
                         const NoiseModel& model, int nodes_per_segment) {
  const int n = static_cast<int>(sorted_points.size());
  if (n < 1) throw std::invalid_argument("irmse_upper_bound: empty design");
  if (!std::is_sorted(sorted_points.begin(), sorted_points.end()))
    throw std::invalid_argument("irmse_upper_bound: points must be sorted");

  const Interval sup = model.support();
  const double lo = sup.bounded_below ? sup.lo : model.mean() - 10.0 * model.sd();
  const double hi = sup.bounded_above ? sup.hi : model.mean() + 10.0 * model.sd();

  // The integrand kinks at Voronoi midpoints; integrate each cell separately.
  std::vector<double> cuts{lo};
  for (int i = 0; i + 1 < n; ++i) {
    const double mid = 0.5 * (sorted_points[i] + sorted_points[i + 1]);
    if (mid > lo && mid < hi) cuts.push_back(mid);
  }
  cuts.push_back(hi);

  double acc = 0.0;
  for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
    if (!(cuts[s + 1] > cuts[s])) continue;
    const Quad1D gl = gauss_legendre(nodes_per_segment, cuts[s], cuts[s + 1]);
    for (std::size_t i = 0; i < gl.size(); ++i) {
      const double z = gl.nodes[i];
      double dmin = std::numeric_limits<double>::infinity();
      for (double p : sorted_points) dmin = std::min(dmin, std::abs(z - p));
      const double one_minus_r2 = -std::expm1(-2.0 * theta * dmin * dmin);
      acc += gl.weights[i] * std::sqrt(std::max(0.0, one_minus_r2)) * model.pdf(z);
    }
  }
  return acc;
}

// --------------------------------------------------------------------------
// Internal noise
// --------------------------------------------------------------------------

void InternalNoiseSpec::validate() const {
  if (!(sigma_e > 0.0) || !std::isfinite(sigma_e))
    throw std::invalid_argument("InternalNoiseSpec: sigma_e must be finite > 0");
  if (!(theta > 0.0) || !std::isfinite(theta))
    throw std::invalid_argument("InternalNoiseSpec: theta must be finite > 0");
}

Eigen::MatrixXd a_matrix(double x, const std::vector<double>& points,
                         const InternalNoiseSpec& spec) {
  spec.validate();
  const int n = static_cast<int>(points.size());
  const double th = spec.theta, se2 = spec.sigma_e * spec.sigma_e;
  const double denom = 1.0 + 2.0 * th * se2;
  const double front = 1.0 / std::sqrt(denom);
  Eigen::MatrixXd A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const double mid = 0.5 * (points[i] + points[j]);
      const double gap = points[i] - points[j];
      const double v = front *
                       std::exp(-2.0 * th / denom * (x - mid) * (x - mid)) *
                       std::exp(-0.5 * th * gap * gap);
      A(i, j) = A(j, i) = v;
    }
  return A;
}

Eigen::MatrixXd a_bar(const std::vector<double>& points,
                      const InternalNoiseSpec& spec) {
  spec.validate();
  const int n = static_cast<int>(points.size());
  const double th = spec.theta, se2 = spec.sigma_e * spec.sigma_e;
  const double root_denom = std::sqrt(1.0 + 2.0 * th * se2);
  const double front = kSqrtPi / std::sqrt(2.0 * th);
  Eigen::MatrixXd A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const double sum = points[i] + points[j];
      const double gap = points[i] - points[j];
      const double upper = norm_cdf(std::sqrt(th) * (2.0 - sum) / root_denom);
      const double lower = norm_cdf(-std::sqrt(th) * sum / root_denom);
      const double v = front * (upper - lower) * std::exp(-0.5 * th * gap * gap);
      A(i, j) = A(j, i) = v;
    }
  return A;
}

double imse_internal(const std::vector<double>& points,
                     const InternalNoiseSpec& spec) {
  spec.validate();
  const int n = static_cast<int>(points.size());
  if (n < 1) throw std::invalid_argument("imse_internal: empty design");
  Eigen::MatrixXd R(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double d = points[i] - points[j];
      R(i, j) = std::exp(-spec.theta * d * d);
    }
  auto [llt, nug] = llt_with_nugget(R);
  // The closed form collapses when R is effectively singular (tiny theta).
  const double min_pivot = llt.matrixLLT().diagonal().minCoeff();
  if (min_pivot * min_pivot <= 100.0 * nug)
    throw ConditioningError(
        "imse_internal: R is nearly singular at this theta");
  const Eigen::MatrixXd abar = a_bar(points, spec);
  const double trace = llt.solve(abar).trace();
  const double c2 = 1.0 / (2.0 * spec.sigma_e * kSqrtPi);
  return (1.0 - trace) / (2.0 * spec.sigma_e * kSqrtPi * c2);
}

}  // namespace robustfill
