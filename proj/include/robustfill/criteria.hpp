#ifndef ROBUSTFILL_CRITERIA_HPP
#define ROBUSTFILL_CRITERIA_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "robustfill/design.hpp"
#include "robustfill/distributions.hpp"
#include "robustfill/gp.hpp"

namespace robustfill {

// One model per external-noise column (in design column order), or a single
// model broadcast across all of them.
using NoiseModels = std::vector<NoiseModel>;

enum class QuadRule { Auto, Tensor, MonteCarlo };

struct CriterionConfig {
  double k = 2.0;           // family index for irmse_k
  QuadRule rule = QuadRule::Auto;
  int nodes_per_dim = 64;   // tensor rule; must be >= 8
  int mc_samples = 1 << 14; // Monte Carlo rule
  std::uint64_t seed = 0;   // Monte Carlo rule
  // Auto picks Tensor for <= 2 external-noise dimensions, Monte Carlo above.
};

struct CriterionDiagnostics {
  bool underflow = false;
  bool flat = false;
};

// Pointwise criterion: sqrt(MSE(x,z; D, theta)) * f(z).
double wrmse(const Design& design, const CorrelationParams& theta,
             std::span<const double> point, const NoiseModels& models);

// Integral of sqrt(MSE) f(z) over [0,1]^p x Z.  Control (and internal-noise)
// dimensions carry uniform weight on [0,1].
double irmse(const Design& design, const CorrelationParams& theta,
             const NoiseModels& models, const CriterionConfig& cfg = {},
             CriterionDiagnostics* diag = nullptr);

// [ integral of (sqrt(MSE) f)^k / C_k ]^{1/k} with C_k = integral of f^k.
double irmse_k(const Design& design, const CorrelationParams& theta,
               const NoiseModels& models, const CriterionConfig& cfg = {},
               CriterionDiagnostics* diag = nullptr);

// Integral of MSE f^2 / C_2; equals irmse_k squared at k = 2.
double imse(const Design& design, const CorrelationParams& theta,
            const NoiseModels& models, const CriterionConfig& cfg = {},
            CriterionDiagnostics* diag = nullptr);

// min over Theta of IRMSE(D*(theta), theta) / IRMSE(D, theta), clamped to
// (0,1].  optima[i] is the best-known IRMSE at theta_set[i]; a size mismatch
// throws.
double min_efficiency(const Design& design,
                      const std::vector<CorrelationParams>& theta_set,
                      const std::vector<double>& optima,
                      const NoiseModels& models,
                      const CriterionConfig& cfg = {});

// Fast path for one noise factor: IRMSE of a point set in the factor's own
// scale, integrating sqrt(1 - r'R^{-1}r) f(z).  Matches irmse() on the
// equivalent single-column design.
double irmse_1d_noise(const std::vector<double>& points, double theta,
                      const NoiseModel& model, int nodes = 64);

// Integral of sqrt(1 - R^2(z - Q(z,d))) f(z) with Q the nearest design
// point; an upper bound of irmse_1d_noise for the same (points, theta).
double irmse_upper_bound(const std::vector<double>& sorted_points, double theta,
                         const NoiseModel& model, int nodes_per_segment = 32);

// --------------------------------------------------------------------------
// Internal noise (X = x + e, e ~ N(0, sigma_e))
// --------------------------------------------------------------------------

struct InternalNoiseSpec {
  double sigma_e;  // coded units, > 0
  double theta;    // 1-D Gaussian correlation scale
  void validate() const;
};

// A_ij(x) = E[ r_i(x+e) r_j(x+e) ] under the f^2/C_2-weighted noise density.
Eigen::MatrixXd a_matrix(double x, const std::vector<double>& points,
                         const InternalNoiseSpec& spec);

// Abar = integral of A(x) over [0,1], elementwise in closed form.
Eigen::MatrixXd a_bar(const std::vector<double>& points,
                      const InternalNoiseSpec& spec);

// Closed-form IMSE for a 1-D design with internal noise:
// (2 sigma_e sqrt(pi) C_2)^{-1} [1 - tr(R^{-1} Abar)].
double imse_internal(const std::vector<double>& points,
                     const InternalNoiseSpec& spec);

}  // namespace robustfill

#endif
