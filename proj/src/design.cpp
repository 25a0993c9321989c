#include "robustfill/design.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace robustfill {

Design::Design(Eigen::MatrixXd runs, std::vector<FactorSpec> factors)
    : runs_(std::move(runs)), factors_(std::move(factors)) {
  if (static_cast<std::size_t>(runs_.cols()) != factors_.size())
    throw std::invalid_argument("Design: factor count does not match columns");
}

int Design::n_control() const {
  int c = 0;
  for (const auto& f : factors_)
    if (f.role == FactorRole::Control) ++c;
  return c;
}

int Design::n_noise() const { return n_factors() - n_control(); }

std::vector<int> Design::control_columns() const {
  std::vector<int> cols;
  for (int j = 0; j < n_factors(); ++j)
    if (factors_[j].role == FactorRole::Control) cols.push_back(j);
  return cols;
}

std::vector<int> Design::noise_columns() const {
  std::vector<int> cols;
  for (int j = 0; j < n_factors(); ++j)
    if (factors_[j].role != FactorRole::Control) cols.push_back(j);
  return cols;
}

double Design::min_pairwise_distance() const {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n_runs(); ++i)
    for (int j = i + 1; j < n_runs(); ++j)
      best = std::min(best, (runs_.row(i) - runs_.row(j)).norm());
  return best;
}

void Design::validate() const {
  if (n_runs() < 1) throw std::invalid_argument("Design: needs at least one run");
  if (static_cast<std::size_t>(n_factors()) != factors_.size())
    throw std::invalid_argument("Design: factor metadata mismatch");
  if (!runs_.allFinite())
    throw std::invalid_argument("Design: non-finite entries");
  for (int j = 0; j < n_factors(); ++j) {
    if (factors_[j].role != FactorRole::Control) continue;
    for (int i = 0; i < n_runs(); ++i) {
      const double v = runs_(i, j);
      if (v < 0.0 || v > 1.0)
        throw std::invalid_argument("Design: control column " +
                                    factors_[j].name + " leaves [0,1]");
    }
  }
  if (n_runs() > 1 && !(min_pairwise_distance() > 0.0))
    throw std::invalid_argument("Design: duplicate rows");
}

std::vector<FactorSpec> default_factors(int p, int q) {
  std::vector<FactorSpec> fs;
  fs.reserve(p + q);
  for (int j = 0; j < p; ++j)
    fs.push_back({"x" + std::to_string(j + 1), FactorRole::Control});
  for (int j = 0; j < q; ++j)
    fs.push_back({"z" + std::to_string(j + 1), FactorRole::NoiseExternal});
  return fs;
}

}  // namespace robustfill
