#ifndef ROBUSTFILL_STUDY_HPP
#define ROBUSTFILL_STUDY_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "robustfill/criteria.hpp"
#include "robustfill/design.hpp"
#include "robustfill/gp.hpp"

namespace robustfill {

// --------------------------------------------------------------------------
// Robust-setting search
// --------------------------------------------------------------------------

enum class LossKind { Variance, Quadratic, CustomGrid };

struct LossSpec {
  LossKind kind = LossKind::Variance;
  double target = 0.0;              // Quadratic: E[(y - target)^2]
  std::vector<double> grid_y;       // CustomGrid knots
  std::vector<double> grid_loss;    // CustomGrid values, linear between knots
};

struct RobustOptions {
  int grid = 501;          // points per control dimension (p <= 2)
  int mc_samples = 4096;   // noise draws for the expectation
  std::uint64_t seed = 0;
  int multistarts = 16;    // p > 2 fallback search
};

struct RobustSettingResult {
  std::vector<double> x;   // in [0,1]^p
  double objective = 0.0;
  bool flat = false;       // objective did not vary over the grid
};

// argmin over x of E_z[ L(ghat(x,z)) ], expectation by seeded inverse-
// transform Monte Carlo with draws shared across all x; ties resolved to the
// lexicographically smallest grid point.
RobustSettingResult robust_setting(const KrigingModel& model, const LossSpec& loss,
                                   const NoiseModels& noise,
                                   const RobustOptions& opts = {});

// Same search against an arbitrary response surface g(x, z); x has p
// entries, z has one entry per noise model.
RobustSettingResult robust_setting(
    const std::function<double(std::span<const double>, std::span<const double>)>& g,
    int p, const LossSpec& loss, const NoiseModels& noise,
    const RobustOptions& opts = {});

// --------------------------------------------------------------------------
// WRMSE profile export
// --------------------------------------------------------------------------

struct ProfileSpec {
  int dim1 = 0;                 // varied column
  std::optional<int> dim2;      // second varied column for 2-D slices
  std::vector<double> grid1;
  std::vector<double> grid2;
  std::vector<double> fixed;    // values for the remaining columns (full width)
};

// CSV of (grid point(s), wrmse) rows; empty grids produce a header-only file.
void emit_profile(const Design& design, const CorrelationParams& theta,
                  const NoiseModels& models, const ProfileSpec& spec,
                  const std::string& path);

// --------------------------------------------------------------------------
// Simulated robustness study
// --------------------------------------------------------------------------

enum class RecipeKind { TrMaxProLHD, DTMaxProLHD, TrJCA, DTJCA };

std::string recipe_name(RecipeKind kind);

struct DesignRecipe {
  RecipeKind kind = RecipeKind::TrMaxProLHD;
  int n1 = 6;  // control-array runs (JCA) ; LHD size is n1*n2
  int n2 = 9;  // noise-array runs
  double alpha = 2.0 / 3.0;
};

struct StudyConfig {
  std::vector<DesignRecipe> designs;
  int replications = 20;
  int test_samples = 100;
  std::uint64_t seed = 1;
  LossSpec loss;
  double theta_lo = 1e-2, theta_hi = 1e3;   // kriging fit bounds (not paper-given)
  int fit_starts = 8;
  int robust_grid = 501;
  int robust_mc = 4096;
  int lhd_iters = 20000;
  int jca_restarts = 16;

  static StudyConfig from_json_file(const std::string& path);
  std::string to_json() const;
  std::string config_hash() const;
};

struct ReplicationRow {
  int replication = 0;
  std::string design;
  double rmspe = 0.0;
  double robust_error = 0.0;  // x_hat* - x*
  bool failed = false;
};

struct StudyReport {
  std::vector<ReplicationRow> rows;  // replications x designs, fixed order
  int attempted = 0;
  int completed = 0;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string version;

  double median_rmspe(const std::string& design) const;
  double median_abs_robust_error(const std::string& design) const;

  void write_csv(std::ostream& out) const;
  void write_csv(const std::string& path) const;
  std::string to_json() const;
};

// Runs the one-control, four-noise simulated example: per replication the
// coefficients are redrawn, each design's data are fitted with kriging, and
// prediction error plus robust-setting error are recorded.
StudyReport run_simulated_example(const StudyConfig& cfg);

// The study's deterministic test function y(x, z).
double study_response(double x, std::span<const double> z,
                      std::span<const double> beta, std::span<const double> gamma);

// Exact robust setting of the true response under variance loss.
double study_true_robust_setting(std::span<const double> beta,
                                 std::span<const double> gamma, int grid = 5001);

// The four benchmark designs (shared across replications).
Design build_recipe_design(const DesignRecipe& recipe, const StudyConfig& cfg);

inline constexpr const char* kVersion = "0.1.0";

}  // namespace robustfill

#endif
