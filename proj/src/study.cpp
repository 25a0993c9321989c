#include "robustfill/study.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "robustfill/generators.hpp"
#include "robustfill/optim.hpp"
#include "robustfill/parallel.hpp"
#include "robustfill/rng.hpp"
#include "robustfill/sobol.hpp"

namespace robustfill {

namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double eval_loss(const LossSpec& loss, double y) {
  switch (loss.kind) {
    case LossKind::Variance:
      return y;  // handled by the variance path
    case LossKind::Quadratic: {
      const double d = y - loss.target;
      return d * d;
    }
    case LossKind::CustomGrid: {
      const auto& gy = loss.grid_y;
      const auto& gl = loss.grid_loss;
      if (y <= gy.front()) return gl.front();
      if (y >= gy.back()) return gl.back();
      const auto it = std::upper_bound(gy.begin(), gy.end(), y);
      const std::size_t i = static_cast<std::size_t>(it - gy.begin());
      const double t = (y - gy[i - 1]) / (gy[i] - gy[i - 1]);
      return gl[i - 1] + t * (gl[i] - gl[i - 1]);
    }
  }
  return 0.0;
}

void validate_loss(const LossSpec& loss) {
  if (loss.kind != LossKind::CustomGrid) return;
  if (loss.grid_y.size() != loss.grid_loss.size() || loss.grid_y.size() < 2)
    throw std::invalid_argument("LossSpec: custom grid needs >= 2 knots");
  if (!std::is_sorted(loss.grid_y.begin(), loss.grid_y.end()))
    throw std::invalid_argument("LossSpec: custom grid knots must be sorted");
}

}  // namespace

RobustSettingResult robust_setting(
    const std::function<double(std::span<const double>, std::span<const double>)>& g,
    int p, const LossSpec& loss, const NoiseModels& noise,
    const RobustOptions& opts) {
  validate_loss(loss);
  const int q = static_cast<int>(noise.size());
  if (p < 1) throw std::invalid_argument("robust_setting: no control factors");
  if (opts.grid < 2) throw std::invalid_argument("robust_setting: grid too small");

  // Shared noise draws so the objective is a smooth function of x.
  Rng rng = make_rng(mix_seed(opts.seed, 0x10B0u));
  Eigen::MatrixXd zdraws(opts.mc_samples, q);
  for (int s = 0; s < opts.mc_samples; ++s)
    for (int c = 0; c < q; ++c) zdraws(s, c) = noise[c].quantile(uniform01(rng));

  std::vector<double> zrow(q);
  auto objective = [&](const std::vector<double>& x) {
    double sum = 0.0, sum2 = 0.0;
    for (int s = 0; s < opts.mc_samples; ++s) {
      for (int c = 0; c < q; ++c) zrow[c] = zdraws(s, c);
      const double y = g(x, zrow);
      if (loss.kind == LossKind::Variance) {
        sum += y;
        sum2 += y * y;
      } else {
        sum += eval_loss(loss, y);
      }
    }
    if (loss.kind == LossKind::Variance) {
      const double mean = sum / opts.mc_samples;
      return std::max(0.0, sum2 / opts.mc_samples - mean * mean);
    }
    return sum / opts.mc_samples;
  };

  RobustSettingResult res;
  if (p <= 2) {
    std::vector<double> grid(opts.grid);
    for (int i = 0; i < opts.grid; ++i) grid[i] = static_cast<double>(i) / (opts.grid - 1);
    std::vector<double> best_x;
    double best = std::numeric_limits<double>::infinity();
    double worst = -std::numeric_limits<double>::infinity();
    std::vector<double> x(p);
    std::vector<int> idx(p, 0);
    for (;;) {
      for (int c = 0; c < p; ++c) x[c] = grid[idx[p - 1 - c]];  // lexicographic
      const double v = objective(x);
      worst = std::max(worst, v);
      if (v < best) {
        best = v;
        best_x = x;
      }
      int c = 0;
      while (c < p && ++idx[c] == opts.grid) {
        idx[c] = 0;
        ++c;
      }
      if (c == p) break;
    }
    res.x = best_x;
    res.objective = best;
    res.flat = (worst - best) <= 1e-12 * std::max(1.0, std::abs(worst));
    if (res.flat) res.x.assign(p, 0.0);  // lexicographic-smallest grid point
    return res;
  }

  // p > 2: multistart pattern search over [0,1]^p.
  const std::vector<double> lo(p, 0.0), hi(p, 1.0);
  Rng srng = make_rng(mix_seed(opts.seed, 0x10B1u));
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> best_x(p, 0.0);
  for (int s = 0; s < opts.multistarts; ++s) {
    std::vector<double> x0(p);
    for (auto& v : x0) v = uniform01(srng);
    auto f = [&](const std::vector<double>& x) { return objective(x); };
    OptimResult r = pattern_search(f, x0, lo, hi, 0.25, 1e-6);
    if (r.value < best) {
      best = r.value;
      best_x = r.x;
    }
  }
  res.x = best_x;
  res.objective = best;
  return res;
}

RobustSettingResult robust_setting(const KrigingModel& model, const LossSpec& loss,
                                   const NoiseModels& noise,
                                   const RobustOptions& opts) {
  const Design& design = model.design();
  const std::vector<int> ctrl = design.control_columns();
  const std::vector<int> nz = design.noise_columns();
  if (ctrl.empty())
    throw std::invalid_argument("robust_setting: no control factors");
  if (noise.size() != nz.size() && noise.size() != 1 && !nz.empty())
    throw std::invalid_argument("robust_setting: noise model count mismatch");
  NoiseModels per_col;
  for (std::size_t c = 0; c < nz.size(); ++c)
    per_col.push_back(noise[noise.size() == 1 ? 0 : c]);

  std::vector<double> point(design.n_factors());
  auto g = [&](std::span<const double> x, std::span<const double> z) {
    for (std::size_t c = 0; c < ctrl.size(); ++c) point[ctrl[c]] = x[c];
    for (std::size_t c = 0; c < nz.size(); ++c) point[nz[c]] = z[c];
    return model.predict_mean(point);
  };
  return robust_setting(g, static_cast<int>(ctrl.size()), loss, per_col, opts);
}

void emit_profile(const Design& design, const CorrelationParams& theta,
                  const NoiseModels& models, const ProfileSpec& spec,
                  const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("emit_profile: cannot open " + path);
  const bool two_d = spec.dim2.has_value();
  out << (two_d ? "g1,g2,wrmse\n" : "g,wrmse\n");
  if (spec.grid1.empty() || (two_d && spec.grid2.empty())) return;

  std::vector<double> point = spec.fixed;
  point.resize(design.n_factors(), 0.5);
  const CorrFactor factor(design, theta);
  std::vector<const NoiseModel*> per_col(design.n_factors(), nullptr);
  {
    std::vector<int> nz;
    for (int j = 0; j < design.n_factors(); ++j)
      if (design.factor(j).role == FactorRole::NoiseExternal) nz.push_back(j);
    for (std::size_t c = 0; c < nz.size(); ++c)
      per_col[nz[c]] = &models[models.size() == 1 ? 0 : c];
  }
  auto wrmse_at = [&](const std::vector<double>& pt) {
    double f = 1.0;
    for (int j = 0; j < design.n_factors(); ++j)
      if (per_col[j]) f *= per_col[j]->pdf(pt[j]);
    return f == 0.0 ? 0.0 : std::sqrt(factor.mse(pt)) * f;
  };

  for (double g1 : spec.grid1) {
    point[spec.dim1] = g1;
    if (!two_d) {
      out << fmt17(g1) << ',' << fmt17(wrmse_at(point)) << '\n';
      continue;
    }
    for (double g2 : spec.grid2) {
      point[*spec.dim2] = g2;
      out << fmt17(g1) << ',' << fmt17(g2) << ',' << fmt17(wrmse_at(point)) << '\n';
    }
  }
}

// --------------------------------------------------------------------------
// Simulated example
// --------------------------------------------------------------------------

std::string recipe_name(RecipeKind kind) {
  switch (kind) {
    case RecipeKind::TrMaxProLHD: return "TrMaxProLHD";
    case RecipeKind::DTMaxProLHD: return "DTMaxProLHD";
    case RecipeKind::TrJCA: return "TrJCA";
    case RecipeKind::DTJCA: return "DTJCA";
  }
  return "?";
}

double study_response(double x, std::span<const double> z,
                      std::span<const double> beta, std::span<const double> gamma) {
  double s = 0.0;
  for (int i = 0; i < 4; ++i) s += beta[i] * (x - gamma[i]) * z[i] * z[i];
  const double d = x - gamma[4];
  return s * std::exp(-d * d);
}

double study_true_robust_setting(std::span<const double> beta,
                                 std::span<const double> gamma, int grid) {
  // Var_z(y | x) = 2 exp(-2 (x-gamma5)^2) sum_i beta_i^2 (x-gamma_i)^2 for
  // iid N(0,1) noise, so the optimum is a deterministic 1-D minimization.
  double best_x = 0.0, best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid; ++i) {
    const double x = static_cast<double>(i) / (grid - 1);
    double s = 0.0;
    for (int j = 0; j < 4; ++j) {
      const double d = x - gamma[j];
      s += beta[j] * beta[j] * d * d;
    }
    const double dx = x - gamma[4];
    const double v = 2.0 * std::exp(-2.0 * dx * dx) * s;
    if (v < best) {
      best = v;
      best_x = x;
    }
  }
  return best_x;
}

Design build_recipe_design(const DesignRecipe& recipe, const StudyConfig& cfg) {
  const NoiseModels noise{NoiseModel::normal(0.0, 1.0)};
  const BetaWarp warp{recipe.alpha};
  const std::uint64_t dseed = mix_seed(cfg.seed, 0xDE51u);

  Design base;
  switch (recipe.kind) {
    case RecipeKind::TrMaxProLHD:
    case RecipeKind::DTMaxProLHD: {
      Design lhd = maxpro_lhd(recipe.n1 * recipe.n2, 5, dseed, cfg.lhd_iters);
      std::vector<FactorSpec> factors = default_factors(1, 4);
      base = Design(lhd.runs(), std::move(factors));
      break;
    }
    case RecipeKind::TrJCA:
    case RecipeKind::DTJCA: {
      const std::vector<double> levels = uniform_design(recipe.n1);
      Eigen::MatrixXd cx(recipe.n1, 1);
      for (int i = 0; i < recipe.n1; ++i) cx(i, 0) = levels[i];
      Design dx(cx, default_factors(1, 0));
      Design dz = maximin_lhd(recipe.n2, 4, mix_seed(dseed, 0x2u), cfg.lhd_iters);
      for (int j = 0; j < 4; ++j) dz.factor(j).role = FactorRole::NoiseExternal;
      base = jittered_cross_array(dx, dz, mix_seed(dseed, 0x3u), cfg.jca_restarts)
                 .design;
      break;
    }
  }

  const bool dt = recipe.kind == RecipeKind::DTMaxProLHD ||
                  recipe.kind == RecipeKind::DTJCA;
  return dt ? double_transformed_noise(base, noise, warp)
            : transformed_noise(base, noise);
}

StudyReport run_simulated_example(const StudyConfig& cfg) {
  if (cfg.replications < 1)
    throw std::invalid_argument("StudyConfig: replications must be >= 1");
  if (cfg.designs.empty())
    throw std::invalid_argument("StudyConfig: no designs configured");
  validate_loss(cfg.loss);

  const NoiseModels noise{NoiseModel::normal(0.0, 1.0)};

  // Designs are shared across replications.
  std::vector<Design> designs;
  designs.reserve(cfg.designs.size());
  for (const auto& recipe : cfg.designs)
    designs.push_back(build_recipe_design(recipe, cfg));

  // Test points: scrambled Sobol, noise columns back-transformed.
  SobolSequence sobol(5, mix_seed(cfg.seed, 0x50B0u));
  Eigen::MatrixXd test = sobol.sample(cfg.test_samples);
  for (int i = 0; i < test.rows(); ++i)
    for (int j = 1; j < 5; ++j) test(i, j) = norm_quantile(test(i, j));

  StudyReport report;
  report.seed = cfg.seed;
  report.config_hash = cfg.config_hash();
  report.version = kVersion;
  report.rows.resize(static_cast<std::size_t>(cfg.replications) *
                     cfg.designs.size());
  report.attempted = cfg.replications * static_cast<int>(cfg.designs.size());

  parallel_for(cfg.replications, [&](std::size_t rep) {
    Rng rng = make_rng(mix_seed(cfg.seed, 0xCA5Eu ^ rep));
    double beta[4], gamma[5];
    for (double& b : beta) b = uniform01(rng);
    for (double& g : gamma) g = uniform01(rng);
    const double x_star = study_true_robust_setting(beta, gamma);

    for (std::size_t d = 0; d < designs.size(); ++d) {
      ReplicationRow row;
      row.replication = static_cast<int>(rep);
      row.design = recipe_name(cfg.designs[d].kind);
      try {
        const Design& design = designs[d];
        Eigen::VectorXd y(design.n_runs());
        std::vector<double> z(4);
        for (int i = 0; i < design.n_runs(); ++i) {
          for (int j = 0; j < 4; ++j) z[j] = design.runs()(i, j + 1);
          y(i) = study_response(design.runs()(i, 0), z, beta, gamma);
        }
        FitOptions fopts;
        fopts.theta_lo = cfg.theta_lo;
        fopts.theta_hi = cfg.theta_hi;
        fopts.starts = cfg.fit_starts;
        fopts.seed = mix_seed(cfg.seed, 0xF17u ^ (rep * 131 + d));
        const KrigingModel model = fit_kriging(design, y, fopts);

        double sq = 0.0;
        std::vector<double> pt(5);
        for (int i = 0; i < test.rows(); ++i) {
          for (int j = 0; j < 5; ++j) pt[j] = test(i, j);
          std::span<const double> zs(pt.data() + 1, 4);
          const double err = model.predict_mean(pt) -
                             study_response(pt[0], zs, beta, gamma);
          sq += err * err;
        }
        row.rmspe = std::sqrt(sq / test.rows());

        RobustOptions ropts;
        ropts.grid = cfg.robust_grid;
        ropts.mc_samples = cfg.robust_mc;
        ropts.seed = mix_seed(cfg.seed, 0x10B5u);
        const RobustSettingResult rs =
            robust_setting(model, cfg.loss, noise, ropts);
        row.robust_error = rs.x[0] - x_star;
      } catch (const std::exception&) {
        row.failed = true;
      }
      report.rows[rep * designs.size() + d] = std::move(row);
    }
  });

  for (const auto& row : report.rows)
    if (!row.failed) ++report.completed;
  return report;
}

// --------------------------------------------------------------------------
// Config / report serialization
// --------------------------------------------------------------------------

namespace {

RecipeKind recipe_from_name(const std::string& name) {
  for (RecipeKind k : {RecipeKind::TrMaxProLHD, RecipeKind::DTMaxProLHD,
                       RecipeKind::TrJCA, RecipeKind::DTJCA})
    if (recipe_name(k) == name) return k;
  throw std::invalid_argument("unknown design recipe '" + name + "'");
}

nlohmann::json loss_to_json(const LossSpec& loss) {
  nlohmann::json j;
  switch (loss.kind) {
    case LossKind::Variance:
      j["kind"] = "variance";
      break;
    case LossKind::Quadratic:
      j["kind"] = "quadratic";
      j["target"] = loss.target;
      break;
    case LossKind::CustomGrid:
      j["kind"] = "custom";
      j["grid_y"] = loss.grid_y;
      j["grid_loss"] = loss.grid_loss;
      break;
  }
  return j;
}

LossSpec loss_from_json(const nlohmann::json& j) {
  LossSpec loss;
  const std::string kind = j.value("kind", "variance");
  if (kind == "variance") {
    loss.kind = LossKind::Variance;
  } else if (kind == "quadratic") {
    loss.kind = LossKind::Quadratic;
    loss.target = j.value("target", 0.0);
  } else if (kind == "custom") {
    loss.kind = LossKind::CustomGrid;
    loss.grid_y = j.at("grid_y").get<std::vector<double>>();
    loss.grid_loss = j.at("grid_loss").get<std::vector<double>>();
  } else {
    throw std::invalid_argument("unknown loss kind '" + kind + "'");
  }
  return loss;
}

}  // namespace

std::string StudyConfig::to_json() const {
  nlohmann::json root;
  nlohmann::json& j = root["robustfill_config_v1"];
  j["replications"] = replications;
  j["test_samples"] = test_samples;
  j["seed"] = seed;
  j["loss"] = loss_to_json(loss);
  j["theta_lo"] = theta_lo;
  j["theta_hi"] = theta_hi;
  j["fit_starts"] = fit_starts;
  j["robust_grid"] = robust_grid;
  j["robust_mc"] = robust_mc;
  j["lhd_iters"] = lhd_iters;
  j["jca_restarts"] = jca_restarts;
  j["designs"] = nlohmann::json::array();
  for (const auto& r : designs) {
    nlohmann::json d;
    d["type"] = recipe_name(r.kind);
    d["n1"] = r.n1;
    d["n2"] = r.n2;
    d["alpha"] = r.alpha;
    j["designs"].push_back(d);
  }
  return root.dump(2);
}

StudyConfig StudyConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("StudyConfig: cannot open " + path);
  nlohmann::json root = nlohmann::json::parse(in);
  if (!root.contains("robustfill_config_v1"))
    throw std::invalid_argument("StudyConfig: missing robustfill_config_v1 key");
  const nlohmann::json& j = root["robustfill_config_v1"];
  StudyConfig cfg;
  cfg.replications = j.value("replications", cfg.replications);
  cfg.test_samples = j.value("test_samples", cfg.test_samples);
  cfg.seed = j.value("seed", cfg.seed);
  if (j.contains("loss")) cfg.loss = loss_from_json(j["loss"]);
  cfg.theta_lo = j.value("theta_lo", cfg.theta_lo);
  cfg.theta_hi = j.value("theta_hi", cfg.theta_hi);
  cfg.fit_starts = j.value("fit_starts", cfg.fit_starts);
  cfg.robust_grid = j.value("robust_grid", cfg.robust_grid);
  cfg.robust_mc = j.value("robust_mc", cfg.robust_mc);
  cfg.lhd_iters = j.value("lhd_iters", cfg.lhd_iters);
  cfg.jca_restarts = j.value("jca_restarts", cfg.jca_restarts);
  if (j.contains("designs")) {
    cfg.designs.clear();
    for (const auto& d : j["designs"]) {
      DesignRecipe r;
      r.kind = recipe_from_name(d.at("type").get<std::string>());
      r.n1 = d.value("n1", r.n1);
      r.n2 = d.value("n2", r.n2);
      r.alpha = d.value("alpha", r.alpha);
      cfg.designs.push_back(r);
    }
  }
  return cfg;
}

std::string StudyConfig::config_hash() const {
  // FNV-1a over the canonical JSON dump.
  const std::string s = to_json();
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

double StudyReport::median_rmspe(const std::string& design) const {
  std::vector<double> v;
  for (const auto& r : rows)
    if (!r.failed && r.design == design) v.push_back(r.rmspe);
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double StudyReport::median_abs_robust_error(const std::string& design) const {
  std::vector<double> v;
  for (const auto& r : rows)
    if (!r.failed && r.design == design) v.push_back(std::abs(r.robust_error));
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void StudyReport::write_csv(std::ostream& out) const {
  out << "# robustfill " << version << " seed=" << seed
      << " config=" << config_hash << " attempted=" << attempted
      << " completed=" << completed << '\n';
  out << "replication,design,rmspe,robust_error,failed\n";
  for (const auto& r : rows) {
    out << r.replication << ',' << r.design << ',' << fmt17(r.rmspe) << ','
        << fmt17(r.robust_error) << ',' << (r.failed ? 1 : 0) << '\n';
  }
}

void StudyReport::write_csv(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("StudyReport: cannot open " + path);
  write_csv(out);
}

std::string StudyReport::to_json() const {
  nlohmann::json j;
  j["version"] = version;
  j["seed"] = seed;
  j["config_hash"] = config_hash;
  j["attempted"] = attempted;
  j["completed"] = completed;
  j["rows"] = nlohmann::json::array();
  std::vector<std::string> names;
  for (const auto& r : rows) {
    nlohmann::json row;
    row["replication"] = r.replication;
    row["design"] = r.design;
    row["rmspe"] = r.rmspe;
    row["robust_error"] = r.robust_error;
    row["failed"] = r.failed;
    j["rows"].push_back(row);
    if (std::find(names.begin(), names.end(), r.design) == names.end())
      names.push_back(r.design);
  }
  auto quartiles = [this](const std::string& name, bool absolute,
                          bool use_rmspe) {
    std::vector<double> v;
    for (const auto& r : rows) {
      if (r.failed || r.design != name) continue;
      const double val = use_rmspe ? r.rmspe : r.robust_error;
      v.push_back(absolute ? std::abs(val) : val);
    }
    std::sort(v.begin(), v.end());
    auto q = [&](double p) {
      if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
      const double idx = p * (v.size() - 1);
      const std::size_t lo = static_cast<std::size_t>(idx);
      const std::size_t hi = std::min(lo + 1, v.size() - 1);
      return v[lo] + (idx - lo) * (v[hi] - v[lo]);
    };
    return nlohmann::json{{"p25", q(0.25)}, {"p50", q(0.5)}, {"p75", q(0.75)}};
  };
  nlohmann::json summary;
  for (const auto& name : names) {
    summary[name] = {{"median_rmspe", median_rmspe(name)},
                     {"median_abs_robust_error", median_abs_robust_error(name)},
                     {"rmspe_quartiles", quartiles(name, false, true)},
                     {"abs_robust_error_quartiles", quartiles(name, true, false)}};
  }
  j["summary"] = summary;
  return j.dump(2);
}

}  // namespace robustfill
