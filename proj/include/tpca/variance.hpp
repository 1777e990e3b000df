#pragma once

#include <vector>

#include "tpca/moments.hpp"

namespace tpca {

/// Closed-form asymptotic variances of the simplified model, split into the
/// fully-observed part and the missing-data correction.
struct VarianceReport {
  std::vector<Matrix> sigma_Lambda_obs;   // per Y unit, k x k
  std::vector<Matrix> sigma_Lambda_miss;  // per Y unit, k x k
  std::vector<Matrix> sigma_F_obs;        // per period, k x k
  std::vector<Matrix> sigma_F_miss;       // per period, k x k
  Matrix sigma_C;                         // T x N_y, per-entry Sigma_C
  Matrix cross_term;                      // T x N_y, the -2*cov contribution
  Index delta = 0;                        // min(N_y, T)
  double r = 1.0;
  double gamma = 1.0;
};

VarianceReport corollary_variances(const ModelMoments& m, const ObsStats& s,
                                   const FactorFit& fit, double r);

/// Weak-factor observed-data factor variance (simulation diagnostic; requires
/// ground-truth p_w). `weak` selects the weak coordinates of the k-factor
/// model; the returned block is k_w x k_w.
Matrix weak_factor_obs_variance(const ModelMoments& m, double r, double p_w,
                                const std::vector<int>& weak, Index t);

struct IntervalMatrix {
  Matrix lower;  // T x N_y
  Matrix upper;  // T x N_y
  double level = 0.95;
};

IntervalMatrix confidence_intervals(const VarianceReport& report,
                                    const FactorFit& fit, double level);

enum class GammaObjective { AllEntries, MissingEntries };

struct GammaSelection {
  double gamma_first = 1.0;  // N_x / N_y
  std::vector<double> r_grid;
  GammaObjective objective = GammaObjective::AllEntries;
  std::vector<double> objective_values;
  double r_star = 1.0;
  double gamma_star = 1.0;
};

std::vector<double> default_r_grid();

/// Two-stage selection: one fit at gamma = N_x/N_y, plug-in moments and
/// observation statistics computed once, then the summed Sigma_C objective is
/// evaluated analytically per grid point.
GammaSelection select_gamma(const Panel& x, const Panel& y, int k,
                            const std::vector<double>& r_grid,
                            GammaObjective objective,
                            const ObsStatsMode& omega_mode,
                            const FitOptions& options = {});

}  // namespace tpca
