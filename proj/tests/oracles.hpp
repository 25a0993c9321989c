#ifndef ROBUSTFILL_TESTS_ORACLES_HPP
#define ROBUSTFILL_TESTS_ORACLES_HPP

// Independent numerical oracles used to freeze expected values.  Everything
// here is deliberately written against the definitions, not the library
// implementation paths it checks.

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

namespace oracle {

// erf via its Maclaurin series, 30 terms: adequate to ~1e-15 for |t| <= 3.
inline double erf_series(double t, int terms = 30) {
  double sum = 0.0;
  double power = t;  // t^{2k+1}
  double factorial = 1.0;
  for (int k = 0; k < terms; ++k) {
    sum += (k % 2 ? -1.0 : 1.0) * power / (factorial * (2 * k + 1));
    power *= t * t;
    factorial *= (k + 1);
  }
  return 2.0 / std::sqrt(std::numbers::pi) * sum;
}

inline double norm_cdf_series(double x, double mean, double sd) {
  return 0.5 * (1.0 + erf_series((x - mean) / (sd * std::numbers::sqrt2)));
}

// Inverse of the series CDF by bisection.
inline double norm_quantile_bisect(double p, double mean, double sd) {
  double lo = mean - 10.0 * sd, hi = mean + 10.0 * sd;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (norm_cdf_series(mid, mean, sd) < p)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

// Composite Gauss-Legendre with a fixed 4-point panel rule.
inline double composite_gl(const std::function<double(double)>& f, double a,
                           double b, int total_nodes) {
  static const double nodes[4] = {-0.8611363115940526, -0.3399810435848563,
                                  0.3399810435848563, 0.8611363115940526};
  static const double weights[4] = {0.3478548451374538, 0.6521451548625461,
                                    0.6521451548625461, 0.3478548451374538};
  const int panels = total_nodes / 4;
  const double h = (b - a) / panels;
  double acc = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * h;
    for (int k = 0; k < 4; ++k)
      acc += 0.5 * h * weights[k] * f(mid + 0.5 * h * nodes[k]);
  }
  return acc;
}

// Unnormalized symmetric-beta mass on [0, x] for alpha in (0.5, 1), using
// the substitution u = t^3 to remove the endpoint singularity.
inline double beta_mass_unnormalized(double x, double alpha, int nodes = 10000) {
  // integral of u^{a-1}(1-u)^{a-1} du = integral 3 t^{3a-1} (1-t^3)^{a-1} dt
  const double a = alpha;
  auto g = [a](double t) {
    return 3.0 * std::pow(t, 3.0 * a - 1.0) * std::pow(1.0 - t * t * t, a - 1.0);
  };
  return composite_gl(g, 0.0, std::cbrt(x), nodes);
}

// Regularized symmetric-beta CDF, fully independent of any gamma function:
// the normalizer comes from twice the mass of [0, 1/2].
inline double beta_cdf_quadrature(double x, double alpha, int nodes = 10000) {
  const double total = 2.0 * beta_mass_unnormalized(0.5, alpha, nodes);
  if (x <= 0.5) return beta_mass_unnormalized(x, alpha, nodes) / total;
  return 1.0 - beta_mass_unnormalized(1.0 - x, alpha, nodes) / total;
}

inline double beta_quantile_bisect(double p, double alpha) {
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 100; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (beta_cdf_quadrature(mid, alpha) < p)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace oracle

#endif
