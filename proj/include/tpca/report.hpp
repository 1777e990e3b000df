#pragma once

#include <nlohmann/json.hpp>
#include <string>

#include "tpca/moments.hpp"
#include "tpca/simlab.hpp"
#include "tpca/variance.hpp"

namespace tpca {

using Json = nlohmann::ordered_json;

/// Stable report schema shared by all CLI subcommands:
/// {version, config_echo, gamma_first, gamma_star, objective_curve,
///  estimators, omega, ci_level, runtime_seconds, seed}.
struct ReportBuilder {
  Json doc;

  ReportBuilder();

  void set_config_echo(const Json& config);
  void set_seed(std::uint64_t seed);
  void set_runtime_seconds(double seconds);
  void set_ci_level(double level);
  void set_gamma(const GammaSelection& selection);
  void set_fixed_gamma(double gamma);
  void set_omega(const ObsStats& stats);
  void set_estimators(const McResult& result);

  std::string dump() const { return doc.dump(2) + "\n"; }
  void write(const std::string& path) const;
};

}  // namespace tpca
