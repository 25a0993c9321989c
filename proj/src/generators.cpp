#include "robustfill/generators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "robustfill/optim.hpp"
#include "robustfill/parallel.hpp"
#include "robustfill/rng.hpp"

namespace robustfill {

std::vector<double> uniform_design(int n) {
  if (n < 1) throw std::invalid_argument("uniform_design: n must be >= 1");
  std::vector<double> d(n);
  for (int i = 0; i < n; ++i) d[i] = (i + 0.5) / n;
  return d;
}

double maxpro_objective(const Eigen::MatrixXd& runs) {
  const int n = static_cast<int>(runs.rows());
  double s = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      double prod = 1.0;
      for (int l = 0; l < runs.cols(); ++l) {
        const double d = runs(i, l) - runs(j, l);
        prod *= d * d;
      }
      s += prod == 0.0 ? std::numeric_limits<double>::infinity() : 1.0 / prod;
    }
  return s;
}

double min_pairwise_distance(const Eigen::MatrixXd& runs) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < runs.rows(); ++i)
    for (int j = i + 1; j < runs.rows(); ++j)
      best = std::min(best, (runs.row(i) - runs.row(j)).norm());
  return best;
}

namespace {

Eigen::MatrixXd random_lhd(int n, int d, Rng& rng) {
  Eigen::MatrixXd X(n, d);
  std::vector<double> levels = uniform_design(n);
  for (int c = 0; c < d; ++c) {
    std::vector<double> col = levels;
    shuffle(col, rng);
    for (int i = 0; i < n; ++i) X(i, c) = col[i];
  }
  return X;
}

// phi_15 surrogate for the maximin criterion (lower is better, improving it
// raises the minimum distance).
double phi_p_objective(const Eigen::MatrixXd& runs) {
  constexpr double p = 15.0;
  double s = 0.0;
  for (int i = 0; i < runs.rows(); ++i)
    for (int j = i + 1; j < runs.rows(); ++j) {
      const double d2 = (runs.row(i) - runs.row(j)).squaredNorm();
      s += std::pow(d2, -0.5 * p);
    }
  return s;
}

// Simulated annealing over within-column level swaps; scale-free relative
// acceptance so one schedule serves both criteria.
Design anneal_lhd(int n, int d, std::uint64_t seed, int iters,
                  double (*objective)(const Eigen::MatrixXd&)) {
  if (n < 2) throw std::invalid_argument("lhd: n must be >= 2");
  if (d < 1) throw std::invalid_argument("lhd: d must be >= 1");
  Rng rng = make_rng(mix_seed(seed, 0x1Du));
  Eigen::MatrixXd X = random_lhd(n, d, rng);
  double cur = objective(X);
  Eigen::MatrixXd best = X;
  double best_val = cur;

  const double t0 = 0.1, t1 = 1e-4;
  for (int it = 0; it < iters; ++it) {
    const double temp = t0 * std::pow(t1 / t0, static_cast<double>(it) / iters);
    const int c = static_cast<int>(uniform_index(rng, d));
    const int i = static_cast<int>(uniform_index(rng, n));
    int j = static_cast<int>(uniform_index(rng, n - 1));
    if (j >= i) ++j;
    std::swap(X(i, c), X(j, c));
    const double prop = objective(X);
    const double rel = (prop - cur) / (std::abs(cur) + 1e-300);
    if (prop <= cur || uniform01(rng) < std::exp(-rel / temp)) {
      cur = prop;
      if (cur < best_val) {
        best_val = cur;
        best = X;
      }
    } else {
      std::swap(X(i, c), X(j, c));  // reject
    }
  }
  return Design(best, default_factors(d, 0));
}

}  // namespace

Design maximin_lhd(int n, int d, std::uint64_t seed, int iters) {
  return anneal_lhd(n, d, seed, iters, &phi_p_objective);
}

Design maxpro_lhd(int n, int d, std::uint64_t seed, int iters) {
  return anneal_lhd(n, d, seed, iters, &maxpro_objective);
}

// --------------------------------------------------------------------------
// Cross arrays
// --------------------------------------------------------------------------

CrossArrayStructure cross_array(const Design& dx, const Design& dz) {
  if (dx.n_runs() < 1 || dz.n_runs() < 1)
    throw std::invalid_argument("cross_array: empty input array");
  const int n1 = dx.n_runs(), n2 = dz.n_runs();
  const int p = dx.n_factors(), q = dz.n_factors();

  Eigen::MatrixXd runs(n1 * n2, p + q);
  std::vector<int> ccl(n1 * n2), ncl(n1 * n2);
  for (int i = 0; i < n1; ++i)
    for (int j = 0; j < n2; ++j) {
      const int row = i * n2 + j;
      runs.block(row, 0, 1, p) = dx.runs().row(i);
      runs.block(row, p, 1, q) = dz.runs().row(j);
      ccl[row] = i;
      ncl[row] = j;
    }

  // An untyped (all-control) second array is taken as the noise array, per
  // this operation's role; arrays with explicit noise roles pass through.
  bool untyped = true;
  for (const auto& f : dz.factors())
    if (f.role != FactorRole::Control) untyped = false;
  std::vector<FactorSpec> factors = dx.factors();
  for (const auto& f : dz.factors()) {
    FactorSpec fz = f;
    if (untyped) fz.role = FactorRole::NoiseExternal;
    factors.push_back(fz);
  }

  CrossArrayStructure s;
  s.design = Design(std::move(runs), std::move(factors));
  s.n1 = n1;
  s.n2 = n2;
  s.control_cluster = std::move(ccl);
  s.noise_cluster = std::move(ncl);
  s.fill_dist = fill_distance(s.design).r;
  s.cube_half_width = s.fill_dist / std::sqrt(static_cast<double>(p + q));
  return s;
}

// --------------------------------------------------------------------------
// Fill distance
// --------------------------------------------------------------------------

namespace {

double nearest_distance(const Eigen::MatrixXd& pts, const std::vector<double>& u) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < pts.rows(); ++i) {
    double s = 0.0;
    for (int l = 0; l < pts.cols(); ++l) {
      const double d = u[l] - pts(i, l);
      s += d * d;
    }
    best = std::min(best, s);
  }
  return std::sqrt(best);
}

// Candidate Voronoi vertices in 2-D: circumcenters of point triples plus
// pair-bisector intersections with the box edges.
void voronoi_candidates_2d(const Eigen::MatrixXd& pts,
                           std::vector<std::vector<double>>& out) {
  const int n = static_cast<int>(pts.rows());
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) {
      for (int c = b + 1; c < n; ++c) {
        const double ax = pts(a, 0), ay = pts(a, 1);
        const double bx = pts(b, 0), by = pts(b, 1);
        const double cx = pts(c, 0), cy = pts(c, 1);
        const double den = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by));
        if (std::abs(den) < 1e-14) continue;
        const double a2 = ax * ax + ay * ay, b2 = bx * bx + by * by,
                     c2 = cx * cx + cy * cy;
        const double ux = (a2 * (by - cy) + b2 * (cy - ay) + c2 * (ay - by)) / den;
        const double uy = (a2 * (cx - bx) + b2 * (ax - cx) + c2 * (bx - ax)) / den;
        if (ux >= 0.0 && ux <= 1.0 && uy >= 0.0 && uy <= 1.0) out.push_back({ux, uy});
      }
      // bisector of (a,b) against each box edge
      const double mx = 0.5 * (pts(a, 0) + pts(b, 0));
      const double my = 0.5 * (pts(a, 1) + pts(b, 1));
      const double dx = pts(b, 0) - pts(a, 0), dy = pts(b, 1) - pts(a, 1);
      // bisector: (u - m) . d = 0
      if (std::abs(dy) > 1e-14) {
        for (double x : {0.0, 1.0}) {
          const double y = my - dx * (x - mx) / dy;
          if (y >= 0.0 && y <= 1.0) out.push_back({x, y});
        }
      }
      if (std::abs(dx) > 1e-14) {
        for (double y : {0.0, 1.0}) {
          const double x = mx - dy * (y - my) / dx;
          if (x >= 0.0 && x <= 1.0) out.push_back({x, y});
        }
      }
    }
}

}  // namespace

FillDistanceResult fill_distance(const Design& design, std::uint64_t seed,
                                 int restarts) {
  const Eigen::MatrixXd& pts = design.runs();
  const int d = static_cast<int>(pts.cols());
  if (pts.rows() < 1) throw std::invalid_argument("fill_distance: empty design");

  if (d == 1) {
    // exact: extremes at the boundary gaps, interior at midpoints
    std::vector<double> v(pts.col(0).data(), pts.col(0).data() + pts.rows());
    std::sort(v.begin(), v.end());
    FillDistanceResult best{v.front() - 0.0, {0.0}};
    if (1.0 - v.back() > best.r) best = {1.0 - v.back(), {1.0}};
    for (std::size_t i = 0; i + 1 < v.size(); ++i) {
      const double half = 0.5 * (v[i + 1] - v[i]);
      if (half > best.r) best = {half, {0.5 * (v[i] + v[i + 1])}};
    }
    return best;
  }

  std::vector<std::vector<double>> candidates;
  if (d <= 12) {  // box corners
    for (unsigned mask = 0; mask < (1u << d); ++mask) {
      std::vector<double> c(d);
      for (int l = 0; l < d; ++l) c[l] = (mask >> l) & 1u ? 1.0 : 0.0;
      candidates.push_back(std::move(c));
    }
  }
  if (d == 2) voronoi_candidates_2d(pts, candidates);
  Rng rng = make_rng(mix_seed(seed, 0xF111u));
  for (int s = 0; s < restarts; ++s) {
    std::vector<double> c(d);
    for (auto& v : c) v = uniform01(rng);
    candidates.push_back(std::move(c));
  }

  const std::vector<double> lo(d, 0.0), hi(d, 1.0);
  auto neg = [&](const std::vector<double>& u) { return -nearest_distance(pts, u); };
  FillDistanceResult best{0.0, std::vector<double>(d, 0.0)};
  for (auto& c : candidates) {
    OptimResult r = pattern_search(neg, c, lo, hi, 0.25, 1e-10, 400);
    if (-r.value > best.r) best = {-r.value, std::move(r.x)};
  }
  return best;
}

// --------------------------------------------------------------------------
// Jittered cross array
// --------------------------------------------------------------------------

namespace {

// Sequential MaxPro contribution of candidate u against already placed rows.
double seq_maxpro(const Eigen::MatrixXd& placed, int n_placed,
                  const std::vector<double>& u) {
  double s = 0.0;
  for (int j = 0; j < n_placed; ++j) {
    double prod = 1.0;
    for (std::size_t l = 0; l < u.size(); ++l) {
      const double d = u[l] - placed(j, l);
      prod *= d * d;
    }
    if (prod == 0.0) return std::numeric_limits<double>::infinity();
    s += 1.0 / prod;
  }
  return s;
}

// MaxPro pressure on candidate u from the placed rows, skipping row `skip`
// (-1 for none).
double maxpro_pressure(const Eigen::MatrixXd& placed, int n_placed, int skip,
                       const std::vector<double>& u) {
  double s = 0.0;
  for (int j = 0; j < n_placed; ++j) {
    if (j == skip) continue;
    double prod = 1.0;
    for (std::size_t l = 0; l < u.size(); ++l) {
      const double d = u[l] - placed(j, l);
      prod *= d * d;
    }
    if (prod == 0.0) return std::numeric_limits<double>::infinity();
    s += 1.0 / prod;
  }
  return s;
}

// Minimizes maxpro_pressure inside the cube [center-h, center+h] ^ [0,1]^d:
// seeded random samples, then a full 3^d stencil search with shrinking step.
std::vector<double> search_in_cube(const Eigen::MatrixXd& placed, int n_placed,
                                   int skip, std::vector<double> start,
                                   const Eigen::VectorXd& center, double h,
                                   int samples, Rng& rng) {
  const int d = static_cast<int>(center.size());
  std::vector<double> lo(d), hi(d);
  for (int l = 0; l < d; ++l) {
    lo[l] = std::max(0.0, center(l) - h);
    hi[l] = std::min(1.0, center(l) + h);
    start[l] = std::clamp(start[l], lo[l], hi[l]);
  }
  std::vector<double> best = std::move(start);
  double best_val = maxpro_pressure(placed, n_placed, skip, best);
  std::vector<double> cand(d);
  for (int s = 0; s < samples; ++s) {
    for (int l = 0; l < d; ++l) cand[l] = uniform_range(rng, lo[l], hi[l]);
    const double v = maxpro_pressure(placed, n_placed, skip, cand);
    if (v < best_val) {
      best_val = v;
      best = cand;
    }
  }

  double step = 0.5 * h;
  while (step > h / 1024.0) {
    bool improved = false;
    std::vector<int> offs(d, -1);
    for (;;) {
      bool inside = true;
      for (int l = 0; l < d; ++l) {
        cand[l] = best[l] + offs[l] * step;
        if (cand[l] < lo[l] || cand[l] > hi[l]) {
          inside = false;
          break;
        }
      }
      if (inside) {
        const double v = maxpro_pressure(placed, n_placed, skip, cand);
        if (v < best_val) {
          best_val = v;
          best = cand;
          improved = true;
        }
      }
      int l = 0;
      while (l < d && ++offs[l] > 1) {
        offs[l] = -1;
        ++l;
      }
      if (l == d) break;
    }
    if (!improved) step *= 0.5;
  }
  return best;
}

}  // namespace

JitteredCrossArray jittered_cross_array(const Design& dx, const Design& dz,
                                        std::uint64_t seed, int restarts) {
  if (restarts < 1)
    throw std::invalid_argument("jittered_cross_array: restarts must be >= 1");
  CrossArrayStructure cross = cross_array(dx, dz);
  const int n = cross.design.n_runs();
  const int d = cross.design.n_factors();
  const double h = cross.cube_half_width;
  if (!(h > 0.0))
    throw std::invalid_argument("jittered_cross_array: degenerate jitter cube");

  // first cube: center closest to (.5,...,.5)
  const Eigen::VectorXd mid = Eigen::VectorXd::Constant(d, 0.5);
  int first = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    const double dist = (cross.design.runs().row(i).transpose() - mid).norm();
    if (dist < best_dist) {
      best_dist = dist;
      first = i;
    }
  }

  struct Attempt {
    Eigen::MatrixXd points;        // in placement order
    std::vector<int> rows;         // crossed row index per placement
    double objective = std::numeric_limits<double>::infinity();
  };
  std::vector<Attempt> attempts(restarts);

  parallel_for(restarts, [&](std::size_t rs) {
    Rng rng = make_rng(mix_seed(seed, 0x3CA0u ^ rs));
    std::vector<int> order;
    order.reserve(n);
    for (int i = 0; i < n; ++i)
      if (i != first) order.push_back(i);
    shuffle(order, rng);
    order.insert(order.begin(), first);

    Eigen::MatrixXd placed(n, d);
    // the first point is the center point pulled into its cube
    for (int l = 0; l < d; ++l) {
      const double c = cross.design.runs()(first, l);
      placed(0, l) = std::clamp(0.5, std::max(0.0, c - h), std::min(1.0, c + h));
    }
    for (int i = 1; i < n; ++i) {
      const Eigen::VectorXd center = cross.design.runs().row(order[i]).transpose();
      const std::vector<double> u =
          search_in_cube(placed, i, -1,
                         {center.data(), center.data() + d}, center, h, 50, rng);
      for (int l = 0; l < d; ++l) placed(i, l) = u[l];
    }
    // the greedy result depends strongly on the visit order; a short cyclic
    // refinement of the full criterion, still confined to the cubes, levels
    // that out across restarts
    for (int pass = 0; pass < 3; ++pass) {
      for (int i = 0; i < n; ++i) {
        const Eigen::VectorXd center =
            cross.design.runs().row(order[i]).transpose();
        std::vector<double> cur(d);
        for (int l = 0; l < d; ++l) cur[l] = placed(i, l);
        const std::vector<double> u =
            search_in_cube(placed, n, i, std::move(cur), center, h, 20, rng);
        for (int l = 0; l < d; ++l) placed(i, l) = u[l];
      }
    }
    attempts[rs] = {std::move(placed), std::move(order), 0.0};
    attempts[rs].objective = maxpro_objective(attempts[rs].points);
  });

  std::size_t win = 0;
  for (std::size_t rs = 1; rs < attempts.size(); ++rs)
    if (attempts[rs].objective < attempts[win].objective) win = rs;
  Attempt& winner = attempts[win];

  // snap each column to equally spaced levels by rank
  Eigen::MatrixXd snapped = winner.points;
  const std::vector<double> levels = uniform_design(n);
  for (int c = 0; c < d; ++c) {
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
      return winner.points(a, c) < winner.points(b, c);
    });
    for (int rank = 0; rank < n; ++rank) snapped(idx[rank], c) = levels[rank];
  }

  JitteredCrossArray out;
  out.pre_snap = winner.points;
  out.objective = winner.objective;
  out.design = Design(std::move(snapped), cross.design.factors());

  // structure rows aligned with the output design's placement order
  CrossArrayStructure reordered;
  reordered.n1 = cross.n1;
  reordered.n2 = cross.n2;
  reordered.fill_dist = cross.fill_dist;
  reordered.cube_half_width = cross.cube_half_width;
  Eigen::MatrixXd centers(n, d);
  reordered.control_cluster.resize(n);
  reordered.noise_cluster.resize(n);
  for (int i = 0; i < n; ++i) {
    const int row = winner.rows[i];
    centers.row(i) = cross.design.runs().row(row);
    reordered.control_cluster[i] = cross.control_cluster[row];
    reordered.noise_cluster[i] = cross.noise_cluster[row];
  }
  reordered.design = Design(std::move(centers), cross.design.factors());
  out.structure = std::move(reordered);
  return out;
}

// --------------------------------------------------------------------------
// Noise-column transforms
// --------------------------------------------------------------------------

namespace {

Design transform_noise_columns(const Design& design, const NoiseModels& models,
                               const BetaWarp* warp) {
  const std::vector<int> cols = design.noise_columns();
  std::vector<int> ext;
  for (int j : cols)
    if (design.factor(j).role == FactorRole::NoiseExternal) ext.push_back(j);
  if (models.size() != ext.size() && models.size() != 1)
    throw std::invalid_argument(
        "transform: need one NoiseModel per noise column (or one total)");

  Eigen::MatrixXd runs = design.runs();
  std::vector<FactorSpec> factors = design.factors();
  for (std::size_t c = 0; c < ext.size(); ++c) {
    const int j = ext[c];
    const NoiseModel& model = models[models.size() == 1 ? 0 : c];
    std::vector<double> col(design.n_runs());
    for (int i = 0; i < design.n_runs(); ++i) col[i] = runs(i, j);
    const std::vector<double> mapped =
        warp ? double_transform(col, model, *warp) : inverse_transform(col, model);
    for (int i = 0; i < design.n_runs(); ++i) runs(i, j) = mapped[i];
    factors[j].transform = warp ? TransformTag::DoubleTransformed
                                : TransformTag::Transformed;
    factors[j].alpha = warp ? warp->alpha : 1.0;
  }
  return Design(std::move(runs), std::move(factors));
}

}  // namespace

Design transformed_noise(const Design& design, const NoiseModels& models) {
  return transform_noise_columns(design, models, nullptr);
}

Design double_transformed_noise(const Design& design, const NoiseModels& models,
                                const BetaWarp& warp) {
  return transform_noise_columns(design, models, &warp);
}

// --------------------------------------------------------------------------
// 1-D robust optimal noise design
// --------------------------------------------------------------------------

double Transformation1D::operator()(double u) const {
  validate();
  if (!(u >= 0.0 && u <= 1.0))
    throw std::domain_error("Transformation1D: argument outside [0,1]");
  if (u <= u_levels.front()) return z_levels.front();
  if (u >= u_levels.back()) return z_levels.back();
  const auto it = std::upper_bound(u_levels.begin(), u_levels.end(), u);
  const std::size_t i = static_cast<std::size_t>(it - u_levels.begin());
  const double t = (u - u_levels[i - 1]) / (u_levels[i] - u_levels[i - 1]);
  return z_levels[i - 1] + t * (z_levels[i] - z_levels[i - 1]);
}

void Transformation1D::validate() const {
  if (u_levels.size() != z_levels.size() || u_levels.size() < 2)
    throw std::invalid_argument("Transformation1D: need >= 2 tabulated levels");
  for (std::size_t i = 1; i < z_levels.size(); ++i)
    if (!(z_levels[i] > z_levels[i - 1]) || !(u_levels[i] > u_levels[i - 1]))
      throw std::invalid_argument("Transformation1D: levels must be increasing");
}

namespace {

constexpr double kMinGap = 1e-6;

struct Descent1D {
  std::vector<double> points;
  double value;
  bool hit_pass_cap = false;
};

// Coordinate descent over the sorted point vector; each coordinate moves by
// golden section between its neighbors (endpoints bounded by the support or
// mean +/- 5 sd).
Descent1D coordinate_descent_1d(std::vector<double> pts, double theta,
                                const NoiseModel& model, int quad_nodes,
                                int max_passes) {
  const int n = static_cast<int>(pts.size());
  const Interval sup = model.support();
  const double lo_bound =
      sup.bounded_below ? sup.lo : model.mean() - 5.0 * model.sd();
  const double hi_bound =
      sup.bounded_above ? sup.hi : model.mean() + 5.0 * model.sd();

  double cur = irmse_1d_noise(pts, theta, model, quad_nodes);
  bool capped = true;
  for (int pass = 0; pass < max_passes; ++pass) {
    bool improved = false;
    for (int i = 0; i < n; ++i) {
      const double lo = (i == 0 ? lo_bound : pts[i - 1] + kMinGap);
      const double hi = (i == n - 1 ? hi_bound : pts[i + 1] - kMinGap);
      if (!(hi > lo)) continue;
      auto f = [&](double v) {
        std::vector<double> trial = pts;
        trial[i] = v;
        return irmse_1d_noise(trial, theta, model, quad_nodes);
      };
      const double v = golden_section(f, lo, hi, 1e-6);
      const double fv = f(v);
      if (fv < cur - 1e-15) {
        pts[i] = v;
        cur = fv;
        improved = true;
      }
    }
    if (!improved) {
      capped = false;
      break;
    }
  }
  return {std::move(pts), cur, capped};
}

std::vector<double> dt_start(int n, const NoiseModel& model, double alpha) {
  const std::vector<double> d0 = uniform_design(n);
  return double_transform(d0, model, BetaWarp{alpha});
}

}  // namespace

Robust1DResult robust_1d_noise_design(int n, const std::vector<double>& theta_set,
                                      const NoiseModel& model, std::uint64_t seed,
                                      int restarts, int quad_nodes) {
  if (n < 2) throw std::invalid_argument("robust_1d_noise_design: n must be >= 2");
  if (theta_set.empty())
    throw std::invalid_argument("robust_1d_noise_design: Theta must be nonempty");
  if (restarts < 1)
    throw std::invalid_argument("robust_1d_noise_design: restarts must be >= 1");

  const int m = static_cast<int>(theta_set.size());
  Robust1DResult out;
  out.theta_set = theta_set;
  out.designs.resize(m);
  out.best_irmse.assign(m, std::numeric_limits<double>::infinity());

  // Warped uniform designs make strong starts; later restarts jitter them.
  const double alphas[4] = {0.55, 2.0 / 3.0, 0.8, 1.0};
  bool any_capped = false;

  for (int t = 0; t < m; ++t) {
    std::vector<Descent1D> results(restarts);
    parallel_for(restarts, [&](std::size_t rs) {
      std::vector<double> start = dt_start(n, model, alphas[rs % 4]);
      if (rs >= 4) {
        Rng rng = make_rng(mix_seed(seed, 0x0D1u ^ (rs * 131 + t)));
        const double scale = 0.25 * (start.back() - start.front()) / n;
        for (auto& v : start) v += scale * (2.0 * uniform01(rng) - 1.0);
        std::sort(start.begin(), start.end());
      }
      results[rs] = coordinate_descent_1d(start, theta_set[t], model, quad_nodes, 8);
    });
    std::size_t win = 0;
    for (std::size_t rs = 1; rs < results.size(); ++rs)
      if (results[rs].value < results[win].value) win = rs;
    out.designs[t] = std::move(results[win].points);
    out.best_irmse[t] = results[win].value;
    any_capped = any_capped || results[win].hit_pass_cap;
  }

  // Best-known optima: let every candidate design compete at every theta.
  Eigen::MatrixXd irmse_table(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      irmse_table(i, j) =
          i == j ? out.best_irmse[j]
                 : irmse_1d_noise(out.designs[i], theta_set[j], model, quad_nodes);
  for (int j = 0; j < m; ++j)
    out.best_irmse[j] = std::min(out.best_irmse[j], irmse_table.col(j).minCoeff());

  out.efficiency.resize(m, m);
  out.min_efficiency.assign(m, 1.0);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      out.efficiency(i, j) =
          std::clamp(out.best_irmse[j] / irmse_table(i, j), 0.0, 1.0);
      out.min_efficiency[i] = std::min(out.min_efficiency[i], out.efficiency(i, j));
    }
  }
  out.selected = 0;
  for (int i = 1; i < m; ++i)
    if (out.min_efficiency[i] > out.min_efficiency[out.selected]) out.selected = i;

  out.transform.u_levels = uniform_design(n);
  out.transform.z_levels = out.designs[out.selected];
  out.transform.warning = any_capped;
  out.transform.validate();
  return out;
}

Design hybrid_noise_design(const Design& u_z, const Transformation1D& t) {
  t.validate();
  Eigen::MatrixXd runs = u_z.runs();
  std::vector<FactorSpec> factors = u_z.factors();
  for (int j : u_z.noise_columns()) {
    for (int i = 0; i < u_z.n_runs(); ++i) {
      const double u = runs(i, j);
      const auto it = std::lower_bound(t.u_levels.begin(), t.u_levels.end(),
                                       u - 1e-9);
      if (it == t.u_levels.end() || std::abs(*it - u) > 1e-9)
        throw std::invalid_argument(
            "hybrid_noise_design: design level not among the tabulated u levels");
      runs(i, j) = t.z_levels[static_cast<std::size_t>(it - t.u_levels.begin())];
    }
    factors[j].transform = TransformTag::Hybrid;
  }
  return Design(std::move(runs), std::move(factors));
}

// --------------------------------------------------------------------------
// Internal-noise optimal design
// --------------------------------------------------------------------------

InternalDesignResult optimal_internal_design(int n, const InternalNoiseSpec& spec,
                                             std::uint64_t seed, int restarts) {
  if (n < 2)
    throw std::invalid_argument("optimal_internal_design: n must be >= 2");
  spec.validate();

  auto descent = [&](std::vector<double> pts) {
    double cur = imse_internal(pts, spec);
    bool capped = true;
    for (int pass = 0; pass < 12; ++pass) {
      bool improved = false;
      for (int i = 0; i < n; ++i) {
        const double lo = i == 0 ? 0.0 : pts[i - 1] + kMinGap;
        const double hi = i == n - 1 ? 1.0 : pts[i + 1] - kMinGap;
        if (!(hi > lo)) continue;
        auto f = [&](double v) {
          std::vector<double> trial = pts;
          trial[i] = v;
          return imse_internal(trial, spec);
        };
        const double v = golden_section(f, lo, hi, 1e-8);
        const double fv = f(v);
        if (fv < cur - 1e-15) {
          pts[i] = v;
          cur = fv;
          improved = true;
        }
      }
      if (!improved) {
        capped = false;
        break;
      }
    }
    return std::pair<std::vector<double>, std::pair<double, bool>>{
        std::move(pts), {cur, capped}};
  };

  std::vector<std::vector<double>> starts;
  std::vector<double> grid(n);
  for (int i = 0; i < n; ++i) grid[i] = static_cast<double>(i) / (n - 1);
  starts.push_back(grid);
  starts.push_back(uniform_design(n));
  Rng rng = make_rng(mix_seed(seed, 0x1D7u));
  while (static_cast<int>(starts.size()) < restarts) {
    std::vector<double> s = grid;
    for (auto& v : s) v = std::clamp(v + 0.1 * (2.0 * uniform01(rng) - 1.0), 0.0, 1.0);
    std::sort(s.begin(), s.end());
    for (int i = 1; i < n; ++i) s[i] = std::max(s[i], s[i - 1] + kMinGap);
    starts.push_back(std::move(s));
  }

  InternalDesignResult best;
  best.objective = std::numeric_limits<double>::infinity();
  std::vector<std::pair<std::vector<double>, std::pair<double, bool>>> results(
      starts.size());
  parallel_for(starts.size(), [&](std::size_t s) { results[s] = descent(starts[s]); });
  for (auto& [pts, vc] : results) {
    if (vc.first < best.objective) {
      best.points = pts;
      best.objective = vc.first;
      best.converged = !vc.second;
    }
  }
  return best;
}

}  // namespace robustfill
