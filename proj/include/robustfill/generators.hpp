#ifndef ROBUSTFILL_GENERATORS_HPP
#define ROBUSTFILL_GENERATORS_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "robustfill/criteria.hpp"
#include "robustfill/design.hpp"
#include "robustfill/distributions.hpp"

namespace robustfill {

// Midpoint uniform design {(i-0.5)/n}.
std::vector<double> uniform_design(int n);

// Latin hypercube with levels (i-0.5)/n per column, optimized by seeded
// simulated annealing over within-column swaps.
Design maximin_lhd(int n, int d, std::uint64_t seed, int iters = 20000);
Design maxpro_lhd(int n, int d, std::uint64_t seed, int iters = 20000);

// sum over row pairs of 1/prod_l (x_il - x_jl)^2 (the s=2 criterion).
double maxpro_objective(const Eigen::MatrixXd& runs);
double min_pairwise_distance(const Eigen::MatrixXd& runs);

struct CrossArrayStructure {
  Design design;                    // n1*n2 runs, controls then noise
  int n1 = 0, n2 = 0;
  std::vector<int> control_cluster; // per row, in [0, n1)
  std::vector<int> noise_cluster;   // per row, in [0, n2)
  double fill_dist = 0.0;           // covering radius of the crossed design
  double cube_half_width = 0.0;     // fill_dist / sqrt(p+q)
};

// Crosses a control array with a noise array: row (i,j) = (Dx_i, Dz_j).
CrossArrayStructure cross_array(const Design& dx, const Design& dz);

struct FillDistanceResult {
  double r = 0.0;
  std::vector<double> witness;  // point attaining the max
};

// Covering radius over [0,1]^d: multistart pattern-search maximization
// seeded from corners, random points, and (d <= 2) Voronoi-vertex
// candidates.
FillDistanceResult fill_distance(const Design& design, std::uint64_t seed = 0,
                                 int restarts = 64);

struct JitteredCrossArray {
  Design design;                 // post-snap, columns are LHD permutations
  Eigen::MatrixXd pre_snap;      // points as chosen inside their cubes
  CrossArrayStructure structure; // rows aligned with design
  double objective = 0.0;        // MaxPro value of the winning restart (pre-snap)
};

// Sequential MaxPro jitter of a cross array: the first cube is the one whose
// center is closest to (.5,...,.5) and receives the center point projected
// into it; remaining cubes are visited in restart-randomized order, each
// point greedily minimizing the sequential MaxPro criterion within its cube;
// the best restart is kept and every column is snapped to equally spaced
// levels by rank.
JitteredCrossArray jittered_cross_array(const Design& dx, const Design& dz,
                                        std::uint64_t seed, int restarts = 16);

// Inverse-CDF transform of every external-noise column (coded values must
// lie in (0,1)); control columns untouched.
Design transformed_noise(const Design& design, const NoiseModels& models);

// Beta(alpha,alpha) pre-warp followed by the inverse-CDF transform.
Design double_transformed_noise(const Design& design, const NoiseModels& models,
                                const BetaWarp& warp = {});

// Tabulated 1-D transformation u_i* = (i-.5)/n -> z_i*, extended to (0,1) by
// monotone piecewise-linear interpolation.
struct Transformation1D {
  std::vector<double> u_levels;
  std::vector<double> z_levels;  // strictly increasing
  bool warning = false;          // optimizer stopped at its restart budget

  double operator()(double u) const;
  void validate() const;
};

struct Robust1DResult {
  Transformation1D transform;                    // the selected design
  std::vector<double> theta_set;                 // as supplied
  std::vector<std::vector<double>> designs;      // per-theta optimal points
  std::vector<double> best_irmse;                // best-known IRMSE per theta
  Eigen::MatrixXd efficiency;                    // [design i][theta j]
  std::vector<double> min_efficiency;            // per design
  int selected = 0;                              // index into theta_set
};

// Minimizes 1-D IRMSE for every theta in the set (multistart coordinate
// descent over the sorted point vector), then keeps the design with the
// largest minimum efficiency across the set.
Robust1DResult robust_1d_noise_design(int n, const std::vector<double>& theta_set,
                                      const NoiseModel& model, std::uint64_t seed,
                                      int restarts = 20, int quad_nodes = 64);

// Applies T to every noise column of a space-filling array whose levels are
// exactly T's u-levels.
Design hybrid_noise_design(const Design& u_z, const Transformation1D& t);

struct InternalDesignResult {
  std::vector<double> points;  // sorted, in [0,1]
  double objective = 0.0;      // imse_internal at the points
  bool converged = true;
};

// Minimizes the closed-form internal-noise IMSE over sorted points in [0,1].
InternalDesignResult optimal_internal_design(int n, const InternalNoiseSpec& spec,
                                             std::uint64_t seed, int restarts = 8);

}  // namespace robustfill

#endif
