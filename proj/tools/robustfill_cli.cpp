// robustfill command-line interface: design generation, criterion
// evaluation, kriging fits, robust-setting search, and the simulated
// robustness study.  Exit codes: 0 success, 2 parse/usage error, 3
// numerical failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <span>

#include "robustfill/criteria.hpp"
#include "robustfill/design_io.hpp"
#include "robustfill/generators.hpp"
#include "robustfill/gp.hpp"
#include "robustfill/rng.hpp"
#include "robustfill/study.hpp"

namespace rf = robustfill;

namespace {

rf::NoiseModel model_from_flags(const std::string& dist, double mean, double sd,
                                double lo, double hi) {
  if (dist == "normal") return rf::NoiseModel::normal(mean, sd);
  if (dist == "truncnorm") return rf::NoiseModel::truncated_normal(mean, sd, lo, hi);
  if (dist == "uniform") return rf::NoiseModel::uniform(lo, hi);
  throw CLI::ValidationError("--dist", "unknown distribution '" + dist + "'");
}

Eigen::VectorXd read_response(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open response file " + path);
  std::vector<double> vals;
  double v;
  while (in >> v) vals.push_back(v);
  Eigen::VectorXd y(vals.size());
  for (std::size_t i = 0; i < vals.size(); ++i) y(i) = vals[i];
  return y;
}

rf::CorrelationParams theta_for(const rf::Design& d, double value) {
  return rf::CorrelationParams::constant(value, d.n_control(), d.n_noise());
}

void write_model_json(const std::string& path, const rf::KrigingModel& m,
                      const std::string& design_path,
                      const std::string& response_path) {
  nlohmann::json j;
  j["design"] = design_path;
  j["response"] = response_path;
  j["mu"] = m.mu();
  j["tau2"] = m.tau2();
  j["constant_model"] = m.constant_model();
  j["theta_x"] = m.theta().theta_x;
  j["theta_z"] = m.theta().theta_z;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << j.dump(2) << '\n';
}

int run(int argc, char** argv) {
  CLI::App app{"space-filling designs for robustness experiments"};
  app.require_subcommand(1);

  // ---- generate ----
  auto* gen = app.add_subcommand("generate", "construct a design");
  std::string type = "maxprolhd", noise = "none", out_path = "design.csv";
  int n1 = 6, n2 = 9, p = 1, q = 1, iters = 20000, restarts = 16;
  double alpha = 2.0 / 3.0, mean = 0.5, sd = 1.0 / 6.0, lo = 0.0, hi = 1.0;
  std::string dist = "normal";
  std::uint64_t seed = 1;
  gen->add_option("--type", type, "mmlhd|maxprolhd|cross|jca")->capture_default_str();
  gen->add_option("--n1", n1, "runs (control array for cross/jca)")->capture_default_str();
  gen->add_option("--n2", n2, "noise-array runs (cross/jca)")->capture_default_str();
  gen->add_option("--p", p, "control factors")->capture_default_str();
  gen->add_option("--q", q, "noise factors")->capture_default_str();
  gen->add_option("--noise", noise, "noise-column transform: none|tr|dt|hybrid")
      ->capture_default_str();
  gen->add_option("--alpha", alpha, "beta-warp alpha for dt")->capture_default_str();
  gen->add_option("--seed", seed, "RNG seed")->capture_default_str();
  gen->add_option("--iters", iters, "annealing iterations")->capture_default_str();
  gen->add_option("--restarts", restarts, "JCA restarts")->capture_default_str();
  gen->add_option("--dist", dist, "noise distribution: normal|truncnorm|uniform")
      ->capture_default_str();
  gen->add_option("--mean", mean, "noise mean")->capture_default_str();
  gen->add_option("--sd", sd, "noise sd")->capture_default_str();
  gen->add_option("--lo", lo, "noise support lower end")->capture_default_str();
  gen->add_option("--hi", hi, "noise support upper end")->capture_default_str();
  gen->add_option("--out", out_path, "output CSV")->capture_default_str();

  // ---- evaluate ----
  auto* ev = app.add_subcommand("evaluate", "evaluate a design criterion");
  std::string criterion = "irmse", design_path, profile_out = "profile.csv";
  double theta_value = 10.0;
  std::vector<double> theta_set{5.0, 10.0, 20.0, 30.0};
  int nodes = 64, profile_points = 201;
  ev->add_option("--criterion", criterion,
                 "irmse|imse|wrmse-profile|minmax-eff")->capture_default_str();
  ev->add_option("--design", design_path, "design CSV")->required();
  ev->add_option("--theta", theta_value, "correlation parameter")->capture_default_str();
  ev->add_option("--theta-set", theta_set, "Theta for minmax-eff")->capture_default_str();
  ev->add_option("--nodes", nodes, "quadrature nodes per dimension")->capture_default_str();
  ev->add_option("--dist", dist, "noise distribution")->capture_default_str();
  ev->add_option("--mean", mean, "noise mean")->capture_default_str();
  ev->add_option("--sd", sd, "noise sd")->capture_default_str();
  ev->add_option("--lo", lo, "noise support lower end")->capture_default_str();
  ev->add_option("--hi", hi, "noise support upper end")->capture_default_str();
  ev->add_option("--seed", seed, "seed (minmax-eff optimizer)")->capture_default_str();
  ev->add_option("--out", profile_out, "profile CSV output")->capture_default_str();
  ev->add_option("--points", profile_points, "profile grid points")->capture_default_str();

  // ---- fit ----
  auto* fit = app.add_subcommand("fit", "fit a kriging model");
  std::string response_path, model_out = "model.json";
  double theta_lo = 1e-2, theta_hi = 1e3;
  int starts = 8;
  fit->add_option("--design", design_path, "design CSV")->required();
  fit->add_option("--response", response_path, "response values, one per line")
      ->required();
  fit->add_option("--theta-lo", theta_lo, "lower theta bound")->capture_default_str();
  fit->add_option("--theta-hi", theta_hi, "upper theta bound")->capture_default_str();
  fit->add_option("--starts", starts, "multistart count")->capture_default_str();
  fit->add_option("--seed", seed, "RNG seed")->capture_default_str();
  fit->add_option("--out", model_out, "model JSON output")->capture_default_str();

  // ---- robust ----
  auto* rob = app.add_subcommand("robust", "robust-setting search");
  int grid = 501, mc = 4096;
  std::string loss_kind = "variance";
  double loss_target = 0.0;
  rob->add_option("--design", design_path, "design CSV")->required();
  rob->add_option("--response", response_path, "response values")->required();
  rob->add_option("--loss", loss_kind, "variance|quadratic")->capture_default_str();
  rob->add_option("--target", loss_target, "quadratic-loss target")->capture_default_str();
  rob->add_option("--grid", grid, "grid points per control dim")->capture_default_str();
  rob->add_option("--mc", mc, "noise Monte Carlo samples")->capture_default_str();
  rob->add_option("--dist", dist, "noise distribution")->capture_default_str();
  rob->add_option("--mean", mean, "noise mean")->capture_default_str();
  rob->add_option("--sd", sd, "noise sd")->capture_default_str();
  rob->add_option("--lo", lo, "noise support lower end")->capture_default_str();
  rob->add_option("--hi", hi, "noise support upper end")->capture_default_str();
  rob->add_option("--seed", seed, "RNG seed")->capture_default_str();
  rob->add_option("--theta-lo", theta_lo, "lower theta bound")->capture_default_str();
  rob->add_option("--theta-hi", theta_hi, "upper theta bound")->capture_default_str();

  // ---- simulate ----
  auto* sim = app.add_subcommand("simulate", "run the simulated robustness study");
  std::string config_path, report_out = "report.csv", report_json;
  sim->add_option("config", config_path, "StudyConfig JSON")->required();
  sim->add_option("--out", report_out, "report CSV output")->capture_default_str();
  sim->add_option("--json", report_json, "report JSON output")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (gen->parsed()) {
    rf::Design design;
    if (type == "mmlhd" || type == "maxprolhd") {
      const int n = n1;
      rf::Design lhd = type == "mmlhd" ? rf::maximin_lhd(n, p + q, seed, iters)
                                       : rf::maxpro_lhd(n, p + q, seed, iters);
      design = rf::Design(lhd.runs(), rf::default_factors(p, q));
    } else if (type == "cross" || type == "jca") {
      Eigen::MatrixXd cx;
      if (p == 1) {
        // one control factor: equally spaced levels
        cx.resize(n1, 1);
        const std::vector<double> lv = rf::uniform_design(n1);
        for (int i = 0; i < n1; ++i) cx(i, 0) = lv[i];
      } else {
        cx = rf::maximin_lhd(n1, p, seed, iters).runs();
      }
      rf::Design dx(cx, rf::default_factors(p, 0));
      rf::Design dz_lhd = rf::maximin_lhd(n2, q, rf::mix_seed(seed, 2), iters);
      std::vector<rf::FactorSpec> zf;
      for (int j = 0; j < q; ++j)
        zf.push_back({"z" + std::to_string(j + 1), rf::FactorRole::NoiseExternal});
      rf::Design dz(dz_lhd.runs(), zf);
      design = type == "cross"
                   ? rf::cross_array(dx, dz).design
                   : rf::jittered_cross_array(dx, dz, seed, restarts).design;
    } else {
      throw CLI::ValidationError("--type", "unknown design type '" + type + "'");
    }

    if (noise != "none") {
      const rf::NoiseModels models{model_from_flags(dist, mean, sd, lo, hi)};
      if (noise == "tr") {
        design = rf::transformed_noise(design, models);
      } else if (noise == "dt") {
        design = rf::double_transformed_noise(design, models, rf::BetaWarp{alpha});
      } else if (noise == "hybrid") {
        const int n = design.n_runs();
        rf::Robust1DResult r = rf::robust_1d_noise_design(
            n, theta_set, models[0], rf::mix_seed(seed, 7));
        design = rf::hybrid_noise_design(design, r.transform);
      } else {
        throw CLI::ValidationError("--noise", "unknown transform '" + noise + "'");
      }
    }
    rf::write_design(design, out_path);
    std::cout << "wrote " << out_path << " (" << design.n_runs() << " runs, "
              << design.n_factors() << " factors)\n";
    return 0;
  }

  if (ev->parsed()) {
    const rf::Design design = rf::read_design(design_path);
    const rf::NoiseModels models{model_from_flags(dist, mean, sd, lo, hi)};
    rf::CriterionConfig cfg;
    cfg.nodes_per_dim = nodes;
    cfg.seed = seed;
    if (criterion == "irmse") {
      std::cout << rf::irmse(design, theta_for(design, theta_value), models, cfg)
                << '\n';
    } else if (criterion == "imse") {
      std::cout << rf::imse(design, theta_for(design, theta_value), models, cfg)
                << '\n';
    } else if (criterion == "wrmse-profile") {
      const std::vector<int> nz = design.noise_columns();
      if (nz.empty()) throw std::runtime_error("design has no noise columns");
      rf::ProfileSpec spec;
      spec.dim1 = nz[0];
      const rf::Interval sup = models[0].support();
      const double glo = sup.bounded_below ? sup.lo : mean - 4.0 * sd;
      const double ghi = sup.bounded_above ? sup.hi : mean + 4.0 * sd;
      for (int i = 0; i < profile_points; ++i)
        spec.grid1.push_back(glo + (ghi - glo) * i / (profile_points - 1));
      spec.fixed.assign(design.n_factors(), 0.5);
      rf::emit_profile(design, theta_for(design, theta_value), models, spec,
                       profile_out);
      std::cout << "wrote " << profile_out << '\n';
    } else if (criterion == "minmax-eff") {
      if (design.n_noise() != 1 || design.n_control() != 0)
        throw std::runtime_error(
            "minmax-eff expects a one-column noise design (use the library "
            "API for the general case)");
      std::vector<double> pts(design.n_runs());
      for (int i = 0; i < design.n_runs(); ++i) pts[i] = design.runs()(i, 0);
      std::sort(pts.begin(), pts.end());
      rf::Robust1DResult r = rf::robust_1d_noise_design(
          design.n_runs(), theta_set, models[0], seed);
      double worst = 1.0;
      for (std::size_t j = 0; j < theta_set.size(); ++j) {
        const double v = rf::irmse_1d_noise(pts, theta_set[j], models[0], nodes);
        worst = std::min(worst, std::min(1.0, r.best_irmse[j] / v));
      }
      std::cout << worst << '\n';
    } else {
      throw CLI::ValidationError("--criterion", "unknown criterion");
    }
    return 0;
  }

  if (fit->parsed()) {
    const rf::Design design = rf::read_design(design_path);
    const Eigen::VectorXd y = read_response(response_path);
    rf::FitOptions opts;
    opts.theta_lo = theta_lo;
    opts.theta_hi = theta_hi;
    opts.starts = starts;
    opts.seed = seed;
    const rf::KrigingModel model = rf::fit_kriging(design, y, opts);
    write_model_json(model_out, model, design_path, response_path);
    std::cout << "wrote " << model_out << '\n';
    return 0;
  }

  if (rob->parsed()) {
    const rf::Design design = rf::read_design(design_path);
    const Eigen::VectorXd y = read_response(response_path);
    rf::FitOptions fopts;
    fopts.theta_lo = theta_lo;
    fopts.theta_hi = theta_hi;
    fopts.seed = seed;
    const rf::KrigingModel model = rf::fit_kriging(design, y, fopts);
    rf::LossSpec loss;
    if (loss_kind == "variance") {
      loss.kind = rf::LossKind::Variance;
    } else if (loss_kind == "quadratic") {
      loss.kind = rf::LossKind::Quadratic;
      loss.target = loss_target;
    } else {
      throw CLI::ValidationError("--loss", "unknown loss '" + loss_kind + "'");
    }
    rf::RobustOptions ropts;
    ropts.grid = grid;
    ropts.mc_samples = mc;
    ropts.seed = seed;
    const rf::NoiseModels models{model_from_flags(dist, mean, sd, lo, hi)};
    const rf::RobustSettingResult res = rf::robust_setting(model, loss, models, ropts);
    for (std::size_t i = 0; i < res.x.size(); ++i)
      std::cout << (i ? "," : "") << res.x[i];
    std::cout << (res.flat ? " (flat objective)" : "") << '\n';
    return 0;
  }

  if (sim->parsed()) {
    const rf::StudyConfig cfg = rf::StudyConfig::from_json_file(config_path);
    const rf::StudyReport report = rf::run_simulated_example(cfg);
    report.write_csv(report_out);
    if (!report_json.empty()) {
      std::ofstream out(report_json, std::ios::binary);
      out << report.to_json() << '\n';
    }
    std::cout << "wrote " << report_out << " (attempted=" << report.attempted
              << " completed=" << report.completed << ")\n";
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const CLI::ParseError&) {
    return 2;
  } catch (const rf::ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  }
}
