#pragma once

#include "tpca/panel.hpp"

namespace tpca {

/// Estimated factor model. Loadings of the Y block are reported unscaled,
/// i.e. already divided by sqrt(gamma).
struct FactorFit {
  Matrix factors;      // T x k
  Matrix loadings_x;   // N_x x k (may have 0 rows)
  Matrix loadings_y;   // N_y x k
  Vector eigenvalues;  // k, descending
  double gamma = 1.0;
  Matrix common_x;  // T x N_x
  Matrix common_y;  // T x N_y

  Index k() const { return factors.cols(); }
  Index periods() const { return factors.rows(); }
};

struct FitOptions {
  /// Downgrade a singular time-t Gram matrix to a ridge solve instead of
  /// throwing. The ridge is 1e-8 * trace / k.
  bool ridge_singular_gram = false;
  /// Score never-jointly-observed unit pairs as a zero moment instead of
  /// failing; needed for very sparse observation patterns where some pairs
  /// carry no information.
  bool zero_empty_pairs = false;
};

/// Target-PCA: eigendecomposition of the pairwise second-moment matrix of
/// Z^(gamma), then a per-period weighted regression of observed entries on
/// the loadings.
FactorFit fit(const Panel& x, const Panel& y, int k, double gamma,
              const FitOptions& options = {});

/// Replace missing cells of y with the estimated common component and mark
/// them observed; observed cells keep their actual values.
Panel impute(const FactorFit& fit, const Panel& y);

/// Least-squares H minimizing ||truth - est * H||_F; test/simulation metric.
Matrix align_rotation(const Matrix& est_factors, const Matrix& true_factors);

namespace detail {

/// Shared pipeline: PCA on the pairwise second-moment matrix of an already
/// weighted panel plus the per-period regression. Loadings are normalized by
/// the panel width.
struct RawFit {
  Matrix loadings;  // N x k, Lambda' Lambda / N = I_k
  Matrix factors;   // T x k
  Vector eigenvalues;
};

RawFit fit_weighted_panel(const Panel& z, int k, const FitOptions& options);

/// Deterministic eigenvector convention: flip each column so its
/// largest-magnitude entry is positive; break exact eigenvalue ties by
/// first-differing-coordinate lexicographic order.
void canonicalize_eigenvectors(Matrix& vectors, Vector& values);

}  // namespace detail

}  // namespace tpca
