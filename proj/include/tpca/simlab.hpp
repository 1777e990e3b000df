#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tpca/benchmarks.hpp"
#include "tpca/patterns.hpp"
#include "tpca/variance.hpp"

namespace tpca {

struct DgpSpec {
  enum class Kind {
    TwoFactorIID,
    ConsistencyToy,
    EfficiencyOneFactor,
    LoadingDependentDGP,
  };

  Kind kind = Kind::TwoFactorIID;
  Index periods = 200;
  Index n_x = 200;
  Index n_y = 200;
  int k = 2;
  double sigma_F = 1.0;
  double sigma_Lx = 1.0;
  double sigma_Ly = 1.0;
  double sigma_ex = 1.0;
  double sigma_ey = 1.0;
  std::uint64_t seed = 0;
};

std::string to_string(DgpSpec::Kind kind);
DgpSpec::Kind dgp_kind_from_string(const std::string& tag);

struct SimData {
  Panel x;
  Panel y;
  Matrix true_F;   // T x k
  Matrix true_Lx;  // N_x x k
  Matrix true_Ly;  // N_y x k
  Matrix true_C;   // T x N_y
};

SimData generate(const DgpSpec& spec);

enum class CellSet { Observed, Missing, All };

/// Relative MSE: sum (est - true)^2 / sum true^2 over the selected cells.
double relative_mse(const Matrix& est_C, const Matrix& true_C,
                    const Mask& observed, CellSet cells);

struct McEstimatorResult {
  double mse_obs = 0.0, mse_miss = 0.0, mse_all = 0.0;
  double se_obs = 0.0, se_miss = 0.0, se_all = 0.0;
  int feasible_reps = 0;
  int infeasible_reps = 0;
  bool feasible() const { return feasible_reps > 0; }
};

struct McResult {
  std::map<BenchmarkId, McEstimatorResult> estimators;
  int reps = 0;
  std::uint64_t master_seed = 0;
  double mean_gamma_star = 0.0;  // only when T-PCA ran with auto gamma
};

struct RunOptions {
  /// Pin T-PCA's gamma instead of two-stage selection per replication.
  std::optional<double> fixed_gamma;
  GammaObjective objective = GammaObjective::AllEntries;
  int threads = 0;  // 0 = hardware concurrency
};

McResult run_table(const DgpSpec& dgp, const MaskSpec& mask,
                   const std::vector<BenchmarkId>& estimators, int reps,
                   std::uint64_t master_seed, const RunOptions& options = {});

}  // namespace tpca
