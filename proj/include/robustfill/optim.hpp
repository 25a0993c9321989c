#ifndef ROBUSTFILL_OPTIM_HPP
#define ROBUSTFILL_OPTIM_HPP

// Small derivative-free optimizers shared by the fitting and design-search
// code.  All of them are deterministic given their inputs.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

namespace robustfill {

struct OptimResult {
  std::vector<double> x;
  double value = 0.0;
  int evaluations = 0;
  bool converged = false;
};

// Nelder-Mead with adaptive restarts off; standard 1/2/0.5/0.5 coefficients.
OptimResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                        std::vector<double> x0, double step, int max_iter,
                        double ftol = 1e-10);

// Golden-section minimization on [a,b]; returns the midpoint of the final
// bracket.
double golden_section(const std::function<double(double)>& f, double a, double b,
                      double xtol = 1e-7, int max_iter = 60);

// Coordinate-wise pattern search within a box: probes x_i +/- h per
// coordinate, shrinking h until below tol.  Clamps to [lo, hi].
OptimResult pattern_search(const std::function<double(const std::vector<double>&)>& f,
                           std::vector<double> x0, const std::vector<double>& lo,
                           const std::vector<double>& hi, double h0, double htol,
                           int max_iter = 200);

}  // namespace robustfill

#endif
