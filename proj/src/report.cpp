#include "tpca/report.hpp"

#include <fstream>

#include "tpca/errors.hpp"

namespace tpca {

ReportBuilder::ReportBuilder() {
  doc = Json{
      {"version", "1.0"},
      {"config_echo", Json::object()},
      {"gamma_first", nullptr},
      {"gamma_star", nullptr},
      {"objective_curve", Json::array()},
      {"estimators", Json::object()},
      {"omega", Json::object()},
      {"ci_level", nullptr},
      {"runtime_seconds", nullptr},
      {"seed", nullptr},
  };
}

void ReportBuilder::set_config_echo(const Json& config) {
  doc["config_echo"] = config;
}

void ReportBuilder::set_seed(std::uint64_t seed) { doc["seed"] = seed; }

void ReportBuilder::set_runtime_seconds(double seconds) {
  doc["runtime_seconds"] = seconds;
}

void ReportBuilder::set_ci_level(double level) { doc["ci_level"] = level; }

void ReportBuilder::set_gamma(const GammaSelection& selection) {
  doc["gamma_first"] = selection.gamma_first;
  doc["gamma_star"] = selection.gamma_star;
  Json curve = Json::array();
  for (std::size_t i = 0; i < selection.r_grid.size(); ++i) {
    curve.push_back(Json{{"r", selection.r_grid[i]},
                         {"value", selection.objective_values[i]}});
  }
  doc["objective_curve"] = std::move(curve);
}

void ReportBuilder::set_fixed_gamma(double gamma) {
  doc["gamma_star"] = gamma;
}

void ReportBuilder::set_omega(const ObsStats& stats) {
  Json omega;
  omega["omega1"] = stats.omega1;
  omega["omega2"] = stats.omega2;
  omega["omega3"] = stats.omega3;
  omega["sampled"] = stats.mode.sampled;
  if (stats.mode.sampled) {
    omega["sample_size"] = stats.mode.sample_size;
    omega["sample_seed"] = stats.mode.seed;
  }
  auto vec = [](const Vector& v) {
    Json a = Json::array();
    for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
  };
  omega["q_ii"] = vec(stats.q_ii);
  omega["omega1_i"] = vec(stats.omega1_i);
  omega["omega21_i"] = vec(stats.omega21_i);
  omega["omega22_i"] = vec(stats.omega22_i);
  omega["omega23_i"] = vec(stats.omega23_i);
  omega["omega3_i"] = vec(stats.omega3_i);
  doc["omega"] = std::move(omega);
}

void ReportBuilder::set_estimators(const McResult& result) {
  Json est = Json::object();
  for (const auto& [id, r] : result.estimators) {
    Json e;
    e["feasible"] = r.feasible();
    if (r.feasible()) {
      e["rel_mse_obs"] = r.mse_obs;
      e["rel_mse_miss"] = r.mse_miss;
      e["rel_mse_all"] = r.mse_all;
      e["se"] = r.se_all;
      e["feasible_reps"] = r.feasible_reps;
    }
    e["infeasible_reps"] = r.infeasible_reps;
    est[to_string(id)] = std::move(e);
  }
  doc["estimators"] = std::move(est);
  if (result.mean_gamma_star > 0.0)
    doc["gamma_star"] = result.mean_gamma_star;
}

void ReportBuilder::write(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("report: cannot write " + path);
  out << dump();
}

}  // namespace tpca
