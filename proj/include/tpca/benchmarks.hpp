#pragma once

#include <string>

#include "tpca/estimator.hpp"

namespace tpca {

enum class BenchmarkId { TPCA, XP_Y, XP_Z1, SE_PCA };

std::string to_string(BenchmarkId id);
BenchmarkId benchmark_from_string(const std::string& tag);

/// PCA applied to Y alone (target-PCA with gamma = infinity). Throws
/// InfeasibleError when some period has no observed Y unit.
FactorFit xp_y(const Panel& y, int k, const FitOptions& options = {});

/// Target-PCA on the unweighted concatenation Z^(1) = [X, Y].
FactorFit xp_z1(const Panel& x, const Panel& y, int k,
                const FitOptions& options = {});

/// Separate PCAs on X and Y; the 2k combined factors are re-regressed on each
/// Y unit's observed history (minimum-norm OLS when collinear). Degrades to
/// X-only factors when the Y fit is infeasible.
FactorFit se_pca(const Panel& x, const Panel& y, int k,
                 const FitOptions& options = {});

}  // namespace tpca
