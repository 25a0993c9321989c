#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "robustfill/design_io.hpp"
#include "robustfill/generators.hpp"
#include "robustfill/rng.hpp"
#include "robustfill/study.hpp"

using namespace robustfill;

namespace {

const NoiseModel kCoded = NoiseModel::normal(0.5, 1.0 / 6.0);

// Fit a model to y = f(x, z) sampled on a transformed LHD.
KrigingModel fit_function(int n, double (*f)(double, double), std::uint64_t seed) {
  Design base = maxpro_lhd(n, 2, seed, 6000);
  Design d(base.runs(), default_factors(1, 1));
  d = transformed_noise(d, {kCoded});
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y(i) = f(d.runs()(i, 0), d.runs()(i, 1));
  FitOptions opts;
  opts.seed = seed;
  return fit_kriging(d, y, opts);
}

}  // namespace

TEST_CASE("robust_setting finds the zero-sensitivity point") {
  // y = z (x - 0.3)^2: variance over z vanishes at x = 0.3
  const KrigingModel model = fit_function(
      40, [](double x, double z) { return z * (x - 0.3) * (x - 0.3); }, 5);
  RobustOptions opts;
  opts.grid = 201;
  opts.mc_samples = 2048;
  opts.seed = 9;
  const RobustSettingResult r =
      robust_setting(model, LossSpec{}, {kCoded}, opts);
  CHECK_FALSE(r.flat);
  CHECK(std::abs(r.x[0] - 0.3) <= 0.02);
}

TEST_CASE("robust_setting flags a flat objective") {
  Design base = maxpro_lhd(20, 2, 77, 4000);
  Design d(base.runs(), default_factors(1, 1));
  d = transformed_noise(d, {kCoded});
  const Eigen::VectorXd y = Eigen::VectorXd::Constant(20, 3.0);
  const KrigingModel model = fit_kriging(d, y);
  const RobustSettingResult r = robust_setting(model, LossSpec{}, {kCoded});
  CHECK(r.flat);
  CHECK(r.x[0] == 0.0);  // lexicographic-smallest grid point
}

TEST_CASE("robust_setting agrees with the brute-force oracle on the study function") {
  Rng rng = make_rng(2024);
  double beta[4], gamma[5];
  for (double& b : beta) b = uniform01(rng);
  for (double& g : gamma) g = uniform01(rng);

  // brute force on the true function with 1e5 Monte Carlo noise draws
  const int mc = 100000;
  std::vector<std::array<double, 4>> zs(mc);
  for (auto& z : zs)
    for (double& v : z) v = normal_draw(rng);
  double best_x = 0.0, best_v = 1e300;
  for (int gidx = 0; gidx <= 500; ++gidx) {
    const double x = gidx / 500.0;
    double sum = 0.0, sum2 = 0.0;
    for (const auto& z : zs) {
      const double y = study_response(x, {z.data(), 4}, beta, gamma);
      sum += y;
      sum2 += y * y;
    }
    const double v = sum2 / mc - (sum / mc) * (sum / mc);
    if (v < best_v) {
      best_v = v;
      best_x = x;
    }
  }
  // the analytic optimum agrees with the Monte Carlo one
  const double analytic = study_true_robust_setting(beta, gamma);
  CHECK(std::abs(best_x - analytic) <= 0.005);

  // the search machinery on the true response reproduces the brute-force
  // argmin at grid resolution
  {
    auto truth = [&](std::span<const double> x, std::span<const double> z) {
      return study_response(x[0], z, beta, gamma);
    };
    RobustOptions ropts;
    ropts.grid = 101;
    ropts.mc_samples = 32768;
    ropts.seed = 8;
    const NoiseModels std4(4, NoiseModel::normal(0.0, 1.0));
    const RobustSettingResult r = robust_setting(truth, 1, LossSpec{}, std4, ropts);
    CHECK(std::abs(r.x[0] - analytic) <= 0.02);
  }

  // the plug-in estimate from a fitted emulator is model-error limited
  StudyConfig cfg;
  cfg.designs = {{RecipeKind::DTMaxProLHD, 6, 12, 2.0 / 3.0}};
  cfg.lhd_iters = 8000;
  const Design design = build_recipe_design(cfg.designs[0], cfg);
  Eigen::VectorXd y(design.n_runs());
  for (int i = 0; i < design.n_runs(); ++i) {
    const double* row = design.runs().row(i).data();
    std::vector<double> z(design.runs().row(i).begin() + 1,
                          design.runs().row(i).end());
    y(i) = study_response(row[0], z, beta, gamma);
  }
  FitOptions fopts;
  fopts.seed = 31;
  const KrigingModel model = fit_kriging(design, y, fopts);
  RobustOptions ropts;
  ropts.grid = 101;
  ropts.mc_samples = 4096;
  ropts.seed = 8;
  const RobustSettingResult r =
      robust_setting(model, LossSpec{}, {NoiseModel::normal(0.0, 1.0)}, ropts);
  CHECK(std::abs(r.x[0] - analytic) <= 0.1);
}

TEST_CASE("robust setting is invariant to shifting the response") {
  Rng rng = make_rng(31337);
  for (int rep = 0; rep < 10; ++rep) {
    Design base = maxpro_lhd(24, 2, 1000 + rep, 3000);
    Design d(base.runs(), default_factors(1, 1));
    d = transformed_noise(d, {kCoded});
    Eigen::VectorXd y(24);
    for (int i = 0; i < 24; ++i) {
      const double x = d.runs()(i, 0), z = d.runs()(i, 1);
      y(i) = (z - 0.5) * std::sin(3.0 * x) + 0.2 * z * z;
    }
    FitOptions fopts;
    fopts.seed = rep;
    fopts.starts = 4;
    const KrigingModel m1 = fit_kriging(d, y, fopts);
    const KrigingModel m2 =
        fit_kriging(d, y.array() + 17.5, fopts);
    RobustOptions ropts;
    ropts.grid = 101;
    ropts.mc_samples = 1024;
    ropts.seed = rep;
    const RobustSettingResult r1 = robust_setting(m1, LossSpec{}, {kCoded}, ropts);
    const RobustSettingResult r2 = robust_setting(m2, LossSpec{}, {kCoded}, ropts);
    CHECK(r1.x[0] == r2.x[0]);
  }
}

TEST_CASE("loss specifications") {
  const KrigingModel model = fit_function(
      30, [](double x, double z) { return z + 0.0 * x; }, 3);
  RobustOptions opts;
  opts.grid = 51;
  opts.mc_samples = 512;

  SUBCASE("quadratic loss") {
    LossSpec loss;
    loss.kind = LossKind::Quadratic;
    loss.target = 0.5;
    const RobustSettingResult r = robust_setting(model, loss, {kCoded}, opts);
    CHECK(r.objective >= 0.0);
  }
  SUBCASE("custom grid loss validates its knots") {
    LossSpec loss;
    loss.kind = LossKind::CustomGrid;
    loss.grid_y = {0.0};
    loss.grid_loss = {1.0};
    CHECK_THROWS_AS(robust_setting(model, loss, {kCoded}, opts),
                    std::invalid_argument);
  }
}

TEST_CASE("emit_profile") {
  const Design d = transformed_noise(
      Design(maxpro_lhd(10, 1, 55, 3000).runs(), default_factors(0, 1)),
      {kCoded});
  const CorrelationParams theta{{}, {1000.0}};

  SUBCASE("header-only file for an empty grid") {
    ProfileSpec spec;
    spec.dim1 = 0;
    emit_profile(d, theta, {kCoded}, spec, "profile_empty.csv");
    std::ifstream in("profile_empty.csv");
    std::string line;
    CHECK(std::getline(in, line));
    CHECK(line == "g,wrmse");
    CHECK_FALSE(std::getline(in, line));
  }
  SUBCASE("profile is zero at a design point and level in the center") {
    ProfileSpec spec;
    spec.dim1 = 0;
    const double sigma = 1.0 / 6.0;
    for (int i = 0; i <= 200; ++i)
      spec.grid1.push_back(0.5 - 2.0 * sigma + 4.0 * sigma * i / 200.0);
    spec.grid1.push_back(d.runs()(3, 0));  // exact design point
    emit_profile(d, theta, {kCoded}, spec, "profile_t.csv");

    std::ifstream in("profile_t.csv");
    std::string line;
    std::getline(in, line);
    std::vector<double> vals;
    double last = -1.0;
    while (std::getline(in, line)) {
      const auto comma = line.find(',');
      last = std::stod(line.substr(comma + 1));
      vals.push_back(last);
    }
    REQUIRE(vals.size() == 202);
    CHECK(vals.back() < 1e-6);  // design point
    vals.pop_back();
    std::sort(vals.begin(), vals.end());
    CHECK(vals.back() / vals[vals.size() / 2] <= 2.0);
  }
}

TEST_CASE("study config serialization and hashing") {
  StudyConfig cfg;
  cfg.designs = {{RecipeKind::TrMaxProLHD, 6, 9, 2.0 / 3.0},
                 {RecipeKind::DTJCA, 6, 9, 2.0 / 3.0}};
  cfg.replications = 4;
  cfg.seed = 99;
  const std::string json = cfg.to_json();
  CHECK(json.find("robustfill_config_v1") != std::string::npos);

  std::ofstream("study_cfg.json") << json;
  const StudyConfig back = StudyConfig::from_json_file("study_cfg.json");
  CHECK(back.to_json() == json);
  CHECK(back.config_hash() == cfg.config_hash());

  std::ofstream("bad_cfg.json") << "{\"wrong_key\": {}}";
  CHECK_THROWS_AS(StudyConfig::from_json_file("bad_cfg.json"),
                  std::invalid_argument);
}

TEST_CASE("degenerate zero response across a design") {
  StudyConfig cfg;
  cfg.designs = {{RecipeKind::TrMaxProLHD, 6, 5, 2.0 / 3.0}};
  cfg.lhd_iters = 2000;
  const Design d = build_recipe_design(cfg.designs[0], cfg);
  const Eigen::VectorXd y = Eigen::VectorXd::Zero(d.n_runs());
  const KrigingModel m = fit_kriging(d, y);
  CHECK(m.constant_model());
  double sq = 0.0;
  for (int i = 0; i < d.n_runs(); ++i) {
    std::vector<double> pt(d.n_factors());
    for (int j = 0; j < d.n_factors(); ++j) pt[j] = d.runs()(i, j);
    sq += m.predict_mean(pt) * m.predict_mean(pt);
  }
  CHECK(sq == 0.0);
}

TEST_CASE("run_simulated_example is deterministic and ordered") {
  StudyConfig cfg;
  cfg.designs = {{RecipeKind::TrMaxProLHD, 6, 9, 2.0 / 3.0},
                 {RecipeKind::DTJCA, 6, 9, 2.0 / 3.0}};
  cfg.replications = 2;
  cfg.test_samples = 40;
  cfg.seed = 11;
  cfg.lhd_iters = 4000;
  cfg.jca_restarts = 4;
  cfg.fit_starts = 4;
  cfg.robust_grid = 101;
  cfg.robust_mc = 512;

  const StudyReport a = run_simulated_example(cfg);
  const StudyReport b = run_simulated_example(cfg);

  std::stringstream sa, sb;
  a.write_csv(sa);
  b.write_csv(sb);
  CHECK(sa.str() == sb.str());
  CHECK(a.attempted == 4);
  CHECK(a.completed == 4);
  CHECK(a.rows.size() == 4);
  // fixed row order: replication-major, design order as configured
  CHECK(a.rows[0].design == "TrMaxProLHD");
  CHECK(a.rows[1].design == "DTJCA");
  CHECK(a.rows[0].replication == 0);
  CHECK(a.rows[2].replication == 1);
  for (const auto& row : a.rows) {
    CHECK(row.rmspe >= 0.0);
    CHECK(std::isfinite(row.robust_error));
  }
  CHECK(a.to_json().find("median_rmspe") != std::string::npos);
}
