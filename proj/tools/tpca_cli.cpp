#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "tpca/benchmarks.hpp"
#include "tpca/csv_io.hpp"
#include "tpca/report.hpp"
#include "tpca/simlab.hpp"

namespace {

using tpca::Index;
using tpca::Json;
using tpca::Matrix;
using tpca::Panel;

double elapsed_seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

Json load_config(const std::string& path) {
  if (path.empty()) return Json::object();
  std::ifstream in(path);
  if (!in) throw tpca::InvalidArgument("cannot open config " + path);
  Json j;
  in >> j;
  return j;
}

// Common mask flags shared by several subcommands.
struct MaskArgs {
  std::string kind = "fully_observed";
  double p = 0.5;
  double start_fraction = 0.5;
  double c = 0.0;
  int period = 2;
  int phase = 0;
  int t1 = 1, t2 = 1;
  double threshold = 0.0;
  double p1 = 1.0;

  void attach(CLI::App* app) {
    app->add_option("--mask-kind", kind,
                    "mar|block|staggered|low_frequency|mixed_frequency|"
                    "censoring|loading_dependent|fully_observed");
    app->add_option("--mask-p", p, "observation probability");
    app->add_option("--mask-start-fraction", start_fraction);
    app->add_option("--mask-c", c, "staggered adoption start fraction");
    app->add_option("--mask-period", period);
    app->add_option("--mask-phase", phase);
    app->add_option("--mask-t1", t1);
    app->add_option("--mask-t2", t2);
    app->add_option("--mask-threshold", threshold);
    app->add_option("--mask-p1", p1);
  }

  tpca::MaskSpec spec(std::uint64_t seed) const {
    tpca::MaskSpec s;
    s.kind = tpca::mask_kind_from_string(kind);
    s.p = p;
    s.start_fraction = start_fraction;
    s.c = c;
    s.period = period;
    s.phase = phase;
    s.t1 = t1;
    s.t2 = t2;
    s.threshold = threshold;
    s.p1 = p1;
    s.seed = seed;
    return s;
  }

  Json echo() const {
    return Json{{"kind", kind},          {"p", p},
                {"start_fraction", start_fraction},
                {"c", c},                {"period", period},
                {"phase", phase},        {"t1", t1},
                {"t2", t2},              {"threshold", threshold},
                {"p1", p1}};
  }
};

// Rescale and concatenate auxiliary panels so each contributes on the scale
// of the first one; they then share a single r grid.
Panel combine_aux(const std::vector<Panel>& panels) {
  if (panels.size() == 1) return panels[0];
  const Index T = panels[0].periods();
  Index total = 0;
  for (const Panel& p : panels) {
    if (p.periods() != T)
      throw tpca::InvalidArgument("auxiliary panels disagree on T");
    total += p.units();
  }
  const double n1 = static_cast<double>(panels[0].units());
  Matrix values(T, total);
  tpca::Mask mask(T, total);
  Index at = 0;
  for (const Panel& p : panels) {
    const double scale = std::sqrt(n1 / static_cast<double>(p.units()));
    values.middleCols(at, p.units()) =
        p.mask.select(p.values * scale, Matrix::Zero(T, p.units()));
    mask.middleCols(at, p.units()) = p.mask;
    at += p.units();
  }
  return Panel(std::move(values), std::move(mask));
}

tpca::ObsStatsMode omega_mode_for(const Panel& y, int sample_size,
                                  std::uint64_t seed) {
  if (y.units() <= 30) return tpca::ObsStatsMode::exact();
  return tpca::ObsStatsMode::sample(sample_size, seed);
}

int run_impute(const std::vector<std::string>& x_paths,
               const std::string& y_path, int k, const std::string& gamma,
               const std::string& objective, bool anchor, double ci_level,
               std::uint64_t seed, const std::string& out,
               const std::string& report_path, const std::string& config) {
  const auto start = std::chrono::steady_clock::now();
  std::vector<Panel> aux;
  for (const std::string& p : x_paths) aux.push_back(tpca::load_csv(p));
  if (aux.empty()) throw tpca::InvalidArgument("impute: need --x");
  const Panel x = combine_aux(aux);
  Panel y = tpca::load_csv(y_path);
  if (anchor) y = tpca::anchor_forward_fill(y);

  tpca::ReportBuilder report;
  report.set_seed(seed);
  Json echo = load_config(config);
  echo["k"] = k;
  echo["gamma"] = gamma;
  echo["objective"] = objective;
  echo["anchor"] = anchor;
  report.set_config_echo(echo);

  const tpca::GammaObjective obj =
      objective == "missing" ? tpca::GammaObjective::MissingEntries
                             : tpca::GammaObjective::AllEntries;
  double gamma_value;
  if (gamma == "auto") {
    tpca::GammaSelection sel =
        tpca::select_gamma(x, y, k, tpca::default_r_grid(), obj,
                           omega_mode_for(y, 100000, seed));
    gamma_value = sel.gamma_star;
    report.set_gamma(sel);
  } else {
    gamma_value = std::stod(gamma);
    report.set_fixed_gamma(gamma_value);
  }

  const tpca::FactorFit f = tpca::fit(x, y, k, gamma_value);
  const Panel imputed = tpca::impute(f, y);
  tpca::write_csv(out, imputed);

  const tpca::ModelMoments m = tpca::plugin_moments(f, x, y);
  const tpca::ObsStats s =
      tpca::obs_stats(y.mask, omega_mode_for(y, 100000, seed));
  const double r = gamma_value * static_cast<double>(y.units()) /
                   static_cast<double>(x.units());
  const tpca::VarianceReport vr = tpca::corollary_variances(m, s, f, r);
  const tpca::IntervalMatrix ci = tpca::confidence_intervals(vr, f, ci_level);

  Panel lower = y, upper = y;
  lower.values = ci.lower;
  upper.values = ci.upper;
  lower.mask.setConstant(true);
  upper.mask.setConstant(true);
  tpca::write_csv(out + ".ci_lower.csv", lower);
  tpca::write_csv(out + ".ci_upper.csv", upper);

  report.set_omega(s);
  report.set_ci_level(ci_level);
  report.set_runtime_seconds(elapsed_seconds(start));
  report.write(report_path);
  return 0;
}

int run_select_gamma(const std::string& x_path, const std::string& y_path,
                     int k, const std::string& objective, std::uint64_t seed,
                     double r_min, double r_max, int r_size,
                     const std::string& report_path) {
  const auto start = std::chrono::steady_clock::now();
  const Panel x = tpca::load_csv(x_path);
  const Panel y = tpca::load_csv(y_path);
  std::vector<double> grid;
  if (r_min > 0.0 && r_max > r_min && r_size >= 2) {
    for (int i = 0; i < r_size; ++i)
      grid.push_back(r_min * std::pow(r_max / r_min,
                                      static_cast<double>(i) /
                                          static_cast<double>(r_size - 1)));
  } else {
    grid = tpca::default_r_grid();
  }
  const tpca::GammaObjective obj =
      objective == "missing" ? tpca::GammaObjective::MissingEntries
                             : tpca::GammaObjective::AllEntries;
  const tpca::GammaSelection sel =
      tpca::select_gamma(x, y, k, grid, obj, omega_mode_for(y, 100000, seed));

  tpca::ReportBuilder report;
  report.set_seed(seed);
  report.set_config_echo(Json{{"k", k}, {"objective", objective}});
  report.set_gamma(sel);
  report.set_runtime_seconds(elapsed_seconds(start));
  report.write(report_path);
  std::cout << "gamma_star " << sel.gamma_star << " (r_star " << sel.r_star
            << ")\n";
  return 0;
}

int run_simulate(const std::string& config_path, int reps_override,
                 std::uint64_t seed, const std::string& gamma,
                 const std::string& report_path) {
  const auto start = std::chrono::steady_clock::now();
  Json cfg = load_config(config_path);

  tpca::DgpSpec dgp;
  if (cfg.contains("dgp")) {
    const Json& d = cfg["dgp"];
    if (d.contains("kind"))
      dgp.kind = tpca::dgp_kind_from_string(d["kind"].get<std::string>());
    dgp.periods = d.value("T", 200);
    dgp.n_x = d.value("n_x", 200);
    dgp.n_y = d.value("n_y", 200);
    dgp.k = d.value("k", 2);
    dgp.sigma_F = d.value("sigma_F", 1.0);
    dgp.sigma_Lx = d.value("sigma_Lx", 1.0);
    dgp.sigma_Ly = d.value("sigma_Ly", 1.0);
    dgp.sigma_ex = d.value("sigma_ex", 1.0);
    dgp.sigma_ey = d.value("sigma_ey", 1.0);
  }

  tpca::MaskSpec mask;
  if (cfg.contains("mask")) {
    const Json& mj = cfg["mask"];
    mask.kind = tpca::mask_kind_from_string(
        mj.value("kind", std::string("fully_observed")));
    mask.p = mj.value("p", 0.5);
    mask.start_fraction = mj.value("start_fraction", 0.5);
    mask.c = mj.value("c", 0.0);
    mask.period = mj.value("period", 2);
    mask.phase = mj.value("phase", 0);
    mask.t1 = mj.value("t1", 1);
    mask.t2 = mj.value("t2", 1);
    mask.threshold = mj.value("threshold", 0.0);
    mask.p1 = mj.value("p1", 1.0);
  }

  std::vector<tpca::BenchmarkId> estimators;
  if (cfg.contains("estimators")) {
    for (const auto& tag : cfg["estimators"])
      estimators.push_back(
          tpca::benchmark_from_string(tag.get<std::string>()));
  } else {
    estimators = {tpca::BenchmarkId::TPCA, tpca::BenchmarkId::XP_Y,
                  tpca::BenchmarkId::XP_Z1, tpca::BenchmarkId::SE_PCA};
  }

  int reps = reps_override > 0 ? reps_override : cfg.value("reps", 50);
  tpca::RunOptions options;
  std::string gamma_mode = gamma.empty()
                               ? cfg.value("gamma", std::string("auto"))
                               : gamma;
  if (gamma_mode != "auto") options.fixed_gamma = std::stod(gamma_mode);
  if (cfg.value("objective", std::string("all")) == "missing")
    options.objective = tpca::GammaObjective::MissingEntries;

  const tpca::McResult result =
      tpca::run_table(dgp, mask, estimators, reps, seed, options);

  tpca::ReportBuilder report;
  report.set_seed(seed);
  cfg["reps"] = reps;
  report.set_config_echo(cfg);
  report.set_estimators(result);
  report.set_runtime_seconds(elapsed_seconds(start));
  report.write(report_path);
  for (const auto& [id, r] : result.estimators) {
    std::cout << tpca::to_string(id) << ": ";
    if (r.feasible())
      std::cout << "all " << r.mse_all << " obs " << r.mse_obs << " miss "
                << r.mse_miss << "\n";
    else
      std::cout << "infeasible\n";
  }
  return 0;
}

int run_mask(const MaskArgs& args, const std::string& y_path, int rows,
             int cols, std::uint64_t seed, const std::string& out) {
  tpca::MaskSpec spec = args.spec(seed);
  if (!y_path.empty()) {
    const Panel y = tpca::load_csv(y_path);
    tpca::MaskContext ctx;
    ctx.values = &y.values;
    const tpca::Mask m =
        tpca::generate_mask(spec, y.periods(), y.units(), ctx);
    const tpca::MaskedPanel masked = tpca::apply_mask(y, m);
    tpca::write_csv(out, masked.panel);
    std::cout << masked.held_out.size() << " held-out cells\n";
    return 0;
  }
  if (rows < 1 || cols < 1)
    throw tpca::InvalidArgument("mask: need --y or --rows/--cols");
  const tpca::Mask m = tpca::generate_mask(spec, rows, cols, {});
  Panel p;
  p.values = m.cast<double>();
  p.mask = tpca::Mask::Constant(rows, cols, true);
  tpca::write_csv(out, p);
  return 0;
}

int run_omega(const std::string& y_path, const std::string& mode,
              int sample_size, std::uint64_t seed,
              const std::string& report_path) {
  const auto start = std::chrono::steady_clock::now();
  const Panel y = tpca::load_csv(y_path);
  tpca::ObsStatsMode m;
  if (mode == "sampled")
    m = tpca::ObsStatsMode::sample(sample_size, seed);
  else if (mode == "exact")
    m = tpca::ObsStatsMode::exact();
  else if (mode == "auto")
    m = omega_mode_for(y, sample_size, seed);
  else
    throw tpca::InvalidArgument("omega: mode must be exact|sampled|auto");
  const tpca::ObsStats s = tpca::obs_stats(y.mask, m);

  tpca::ReportBuilder report;
  report.set_seed(seed);
  report.set_config_echo(Json{{"mode", mode}});
  report.set_omega(s);
  report.set_runtime_seconds(elapsed_seconds(start));
  report.write(report_path);
  std::cout << "omega1 " << s.omega1 << " omega2 " << s.omega2 << " omega3 "
            << s.omega3 << "\n";
  return 0;
}

int run_benchmark(const std::string& x_path, const std::string& y_path, int k,
                  const MaskArgs& mask_args, std::uint64_t seed, bool anchor,
                  const std::string& report_path) {
  const auto start = std::chrono::steady_clock::now();
  const Panel x = tpca::load_csv(x_path);
  Panel y = tpca::load_csv(y_path);

  tpca::MaskContext ctx;
  ctx.values = &y.values;
  const tpca::Mask m =
      tpca::generate_mask(mask_args.spec(seed), y.periods(), y.units(), ctx);
  const tpca::MaskedPanel masked = tpca::apply_mask(y, m);
  if (masked.held_out.empty())
    throw tpca::InvalidArgument("benchmark: mask hides no observed cells");
  Panel target = masked.panel;
  if (anchor) target = tpca::anchor_forward_fill(target);

  auto held_out_mse = [&](const tpca::FactorFit& f) {
    double num = 0.0, den = 0.0;
    for (const tpca::HeldOutCell& c : masked.held_out) {
      const double d = f.common_y(c.t, c.i) - c.truth;
      num += d * d;
      den += c.truth * c.truth;
    }
    if (!(den > 0.0))
      throw tpca::NumericalError("benchmark: zero denominator");
    return num / den;
  };

  tpca::ReportBuilder report;
  report.set_seed(seed);
  report.set_config_echo(
      Json{{"k", k}, {"anchor", anchor}, {"mask", mask_args.echo()}});

  Json estimators = Json::object();
  const std::vector<tpca::BenchmarkId> all = {
      tpca::BenchmarkId::TPCA, tpca::BenchmarkId::XP_Y,
      tpca::BenchmarkId::XP_Z1, tpca::BenchmarkId::SE_PCA};
  for (tpca::BenchmarkId id : all) {
    Json e;
    try {
      tpca::FactorFit f;
      switch (id) {
        case tpca::BenchmarkId::TPCA: {
          const tpca::GammaSelection sel = tpca::select_gamma(
              x, target, k, tpca::default_r_grid(),
              tpca::GammaObjective::AllEntries,
              omega_mode_for(target, 100000, seed));
          f = tpca::fit(x, target, k, sel.gamma_star);
          e["gamma_star"] = sel.gamma_star;
          break;
        }
        case tpca::BenchmarkId::XP_Y:
          f = tpca::xp_y(target, k);
          break;
        case tpca::BenchmarkId::XP_Z1:
          f = tpca::xp_z1(x, target, k);
          break;
        case tpca::BenchmarkId::SE_PCA:
          f = tpca::se_pca(x, target, k);
          break;
      }
      e["feasible"] = true;
      e["rel_mse_held_out"] = held_out_mse(f);
    } catch (const tpca::InfeasibleError& ex) {
      e["feasible"] = false;
      e["error"] = ex.what();
    }
    estimators[tpca::to_string(id)] = std::move(e);
  }
  report.doc["estimators"] = std::move(estimators);
  report.set_runtime_seconds(elapsed_seconds(start));
  report.write(report_path);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Target-PCA: factor estimation and imputation for partially "
               "observed panels"};
  app.require_subcommand(1);

  std::vector<std::string> x_paths;
  std::string y_path, config, out = "out.csv", report_path = "report.json";
  std::string gamma = "auto", objective = "all", mode = "auto";
  int k = 2, reps = 0, rows = 0, cols = 0, sample_size = 100000;
  int r_size = 0;
  double r_min = 0.0, r_max = 0.0, ci_level = 0.95;
  std::uint64_t seed = 0;
  bool anchor = false;
  MaskArgs mask_args;

  CLI::App* impute = app.add_subcommand(
      "impute", "fit, impute missing target entries, confidence intervals");
  impute->add_option("--x,--aux", x_paths, "auxiliary panel CSV (repeatable)")
      ->required();
  impute->add_option("--y", y_path, "target panel CSV")->required();
  impute->add_option("--k", k, "number of factors");
  impute->add_option("--gamma", gamma, "target weight, number or 'auto'");
  impute->add_option("--objective", objective, "all|missing");
  impute->add_flag("--anchor", anchor, "forward-fill the target first");
  impute->add_option("--ci-level", ci_level);
  impute->add_option("--seed", seed);
  impute->add_option("--out", out, "imputed CSV path");
  impute->add_option("--report", report_path);
  impute->add_option("--config", config, "JSON config echoed into the report");

  CLI::App* select = app.add_subcommand(
      "select-gamma", "two-stage data-driven target weight");
  std::string sx;
  select->add_option("--x", sx)->required();
  select->add_option("--y", y_path)->required();
  select->add_option("--k", k);
  select->add_option("--objective", objective, "all|missing");
  select->add_option("--seed", seed);
  select->add_option("--r-min", r_min);
  select->add_option("--r-max", r_max);
  select->add_option("--r-size", r_size);
  select->add_option("--report", report_path);

  CLI::App* simulate =
      app.add_subcommand("simulate", "Monte Carlo table runner");
  simulate->add_option("--config", config, "JSON simulation config");
  simulate->add_option("--reps", reps);
  simulate->add_option("--seed", seed);
  simulate->add_option("--gamma", gamma, "pin gamma, or 'auto'");
  simulate->add_option("--report", report_path);

  CLI::App* mask_cmd =
      app.add_subcommand("mask", "generate or apply an observation mask");
  mask_args.attach(mask_cmd);
  mask_cmd->add_option("--y", y_path, "panel to mask (optional)");
  mask_cmd->add_option("--rows", rows);
  mask_cmd->add_option("--cols", cols);
  mask_cmd->add_option("--seed", seed);
  mask_cmd->add_option("--out", out);

  CLI::App* omega =
      app.add_subcommand("omega", "observation-pattern statistics");
  omega->add_option("--y", y_path)->required();
  omega->add_option("--mode", mode, "exact|sampled|auto");
  omega->add_option("--sample-size", sample_size);
  omega->add_option("--seed", seed);
  omega->add_option("--report", report_path);

  CLI::App* benchmark = app.add_subcommand(
      "benchmark", "all four estimators on a masked real panel");
  std::string bx;
  benchmark->add_option("--x", bx)->required();
  benchmark->add_option("--y", y_path)->required();
  benchmark->add_option("--k", k);
  mask_args.attach(benchmark);
  benchmark->add_option("--seed", seed);
  benchmark->add_flag("--anchor", anchor);
  benchmark->add_option("--report", report_path);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (impute->parsed())
      return run_impute(x_paths, y_path, k, gamma, objective, anchor,
                        ci_level, seed, out, report_path, config);
    if (select->parsed())
      return run_select_gamma(sx, y_path, k, objective, seed, r_min, r_max,
                              r_size, report_path);
    if (simulate->parsed())
      return run_simulate(config, reps, seed,
                          gamma == "auto" ? std::string() : gamma,
                          report_path);
    if (mask_cmd->parsed())
      return run_mask(mask_args, y_path, rows, cols, seed, out);
    if (omega->parsed())
      return run_omega(y_path, mode, sample_size, seed, report_path);
    if (benchmark->parsed())
      return run_benchmark(bx, y_path, k, mask_args, seed, anchor,
                           report_path);
  } catch (const tpca::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const tpca::InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return 3;
  } catch (const tpca::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 2;
}
