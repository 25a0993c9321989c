#include "robustfill/optim.hpp"

namespace robustfill {

OptimResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                        std::vector<double> x0, double step, int max_iter,
                        double ftol) {
  const std::size_t d = x0.size();
  int evals = 0;
  auto eval = [&](const std::vector<double>& x) {
    ++evals;
    return f(x);
  };

  std::vector<std::vector<double>> simplex(d + 1, x0);
  std::vector<double> fv(d + 1);
  for (std::size_t i = 0; i < d; ++i) simplex[i + 1][i] += step;
  for (std::size_t i = 0; i <= d; ++i) fv[i] = eval(simplex[i]);

  std::vector<std::size_t> order(d + 1);
  bool converged = false;
  for (int iter = 0; iter < max_iter; ++iter) {
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    const std::size_t best = order[0], worst = order[d], second = order[d - 1];
    if (std::abs(fv[worst] - fv[best]) <=
        ftol * (std::abs(fv[best]) + std::abs(fv[worst]) + 1e-300)) {
      converged = true;
      break;
    }

    std::vector<double> centroid(d, 0.0);
    for (std::size_t i = 0; i <= d; ++i) {
      if (i == worst) continue;
      for (std::size_t k = 0; k < d; ++k) centroid[k] += simplex[i][k];
    }
    for (std::size_t k = 0; k < d; ++k) centroid[k] /= static_cast<double>(d);

    auto blend = [&](double coef) {
      std::vector<double> x(d);
      for (std::size_t k = 0; k < d; ++k)
        x[k] = centroid[k] + coef * (centroid[k] - simplex[worst][k]);
      return x;
    };

    std::vector<double> xr = blend(1.0);
    const double fr = eval(xr);
    if (fr < fv[order[0]]) {
      std::vector<double> xe = blend(2.0);
      const double fe = eval(xe);
      if (fe < fr) {
        simplex[worst] = std::move(xe);
        fv[worst] = fe;
      } else {
        simplex[worst] = std::move(xr);
        fv[worst] = fr;
      }
    } else if (fr < fv[second]) {
      simplex[worst] = std::move(xr);
      fv[worst] = fr;
    } else {
      const bool outside = fr < fv[worst];
      std::vector<double> xc = blend(outside ? 0.5 : -0.5);
      const double fc = eval(xc);
      if (fc < std::min(fr, fv[worst])) {
        simplex[worst] = std::move(xc);
        fv[worst] = fc;
      } else {
        // shrink toward the best vertex
        for (std::size_t i = 0; i <= d; ++i) {
          if (i == best) continue;
          for (std::size_t k = 0; k < d; ++k)
            simplex[i][k] = simplex[best][k] + 0.5 * (simplex[i][k] - simplex[best][k]);
          fv[i] = eval(simplex[i]);
        }
      }
    }
  }

  std::size_t arg = 0;
  for (std::size_t i = 1; i <= d; ++i)
    if (fv[i] < fv[arg]) arg = i;
  return {simplex[arg], fv[arg], evals, converged};
}

double golden_section(const std::function<double(double)>& f, double a, double b,
                      double xtol, int max_iter) {
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c1 = b - phi * (b - a), c2 = a + phi * (b - a);
  double f1 = f(c1), f2 = f(c2);
  for (int i = 0; i < max_iter && (b - a) > xtol; ++i) {
    if (f1 < f2) {
      b = c2;
      c2 = c1;
      f2 = f1;
      c1 = b - phi * (b - a);
      f1 = f(c1);
    } else {
      a = c1;
      c1 = c2;
      f1 = f2;
      c2 = a + phi * (b - a);
      f2 = f(c2);
    }
  }
  return 0.5 * (a + b);
}

OptimResult pattern_search(const std::function<double(const std::vector<double>&)>& f,
                           std::vector<double> x0, const std::vector<double>& lo,
                           const std::vector<double>& hi, double h0, double htol,
                           int max_iter) {
  const std::size_t d = x0.size();
  int evals = 0;
  auto clamp = [&](std::vector<double>& x) {
    for (std::size_t k = 0; k < d; ++k) x[k] = std::clamp(x[k], lo[k], hi[k]);
  };
  clamp(x0);
  double fx = f(x0);
  ++evals;
  double h = h0;
  for (int iter = 0; iter < max_iter && h > htol; ++iter) {
    bool improved = false;
    for (std::size_t k = 0; k < d; ++k) {
      for (double dir : {+1.0, -1.0}) {
        std::vector<double> x = x0;
        x[k] = std::clamp(x[k] + dir * h, lo[k], hi[k]);
        if (x[k] == x0[k]) continue;
        const double v = f(x);
        ++evals;
        if (v < fx) {
          fx = v;
          x0 = std::move(x);
          improved = true;
          break;
        }
      }
    }
    if (!improved) h *= 0.5;
  }
  return {x0, fx, evals, h <= htol};
}

}  // namespace robustfill
