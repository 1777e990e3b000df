#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "tpca/estimator.hpp"
#include "tpca/panel.hpp"

namespace tpca {

/// |Q_ij| and q_ij = |Q_ij| / T for every unit pair.
struct PairCounts {
  Eigen::MatrixXi counts;
  Matrix q;
};

/// Sigma~_ij = |Q_ij|^-1 sum_{t in Q_ij} Z_ti Z_tj over commonly observed
/// periods. Throws InfeasibleError if some pair is never jointly observed,
/// unless zero_empty_pairs downgrades such off-diagonal entries to 0 (no
/// information); a unit with no observations at all is always an error.
std::pair<Matrix, PairCounts> pairwise_second_moment(
    const Panel& z, bool zero_empty_pairs = false);

inline std::pair<Matrix, PairCounts> pairwise_second_moment(
    const WeightedConcat& z, bool zero_empty_pairs = false) {
  return pairwise_second_moment(z.panel, zero_empty_pairs);
}

struct ObsStatsMode {
  bool sampled = false;
  int sample_size = 100000;  // tuples per statistic
  std::uint64_t seed = 0;
  /// Score tuples with an empty joint observation set as 0 instead of
  /// failing; see pairwise_second_moment.
  bool zero_empty_pairs = false;

  static ObsStatsMode exact() { return {}; }
  static ObsStatsMode sample(int size, std::uint64_t seed) {
    ObsStatsMode m;
    m.sampled = true;
    m.sample_size = size;
    m.seed = seed;
    return m;
  }
};

/// Observation-pattern statistics: averages of q_{il,jh} / (q_il q_jh).
/// Each average runs over tuples of distinct indices (repeated indices
/// contribute 1/q factors that would bias the averages away from their
/// population limits by O(1/N)). All fields equal 1 exactly for a fully
/// observed mask.
struct ObsStats {
  Vector omega1_i;   // avg over j != i of q_ij / (q_ii q_jj)
  Vector omega21_i;  // avg over j, l != i of q_{ii,jl} / (q_ii q_jl)
  Vector omega22_i;  // avg over j != i, j != l of q_{jj,il} / (q_jj q_il)
  Vector omega23_i;  // avg over distinct i, j, l of q_{ij,il} / (q_ij q_il)
  Vector omega3_i;   // avg over {i,l}, {j,h} disjoint of q_{il,jh}/(q_il q_jh)
  double omega1 = 1.0;
  double omega2 = 1.0;  // average of omega21_i
  double omega3 = 1.0;
  Vector q_ii;  // per-unit observed fraction

  // Monte Carlo standard errors of the sampled per-unit averages; zero in
  // exact mode.
  Vector omega21_se, omega22_se, omega23_se, omega3_se;
  ObsStatsMode mode;
};

ObsStats obs_stats(const Mask& mask, const ObsStatsMode& mode);

/// Plug-in moments of the fitted model feeding the variance formulas.
struct ModelMoments {
  Matrix sigma_F;                  // k x k
  Matrix sigma_Lx;                 // k x k
  Matrix sigma_Ly;                 // k x k
  std::vector<Matrix> sigma_Ly_t;  // per period, k x k
  Matrix xi_F;                     // k^2 x k^2, Var(vec(F_t F_t'))
  double var_ex = 0.0;
  double var_ey = 0.0;
  Index n_x = 0, n_y = 0, periods = 0;
  int k = 0;
};

ModelMoments plugin_moments(const FactorFit& fit, const Panel& x,
                            const Panel& y);

}  // namespace tpca
