#include "tpca/estimator.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "tpca/moments.hpp"

namespace tpca {
namespace detail {

void canonicalize_eigenvectors(Matrix& vectors, Vector& values) {
  const Index n = vectors.rows();
  const Index k = vectors.cols();

  // Sign: largest-magnitude entry positive (lowest index on magnitude ties).
  for (Index c = 0; c < k; ++c) {
    Index best = 0;
    double best_abs = -1.0;
    for (Index i = 0; i < n; ++i) {
      const double a = std::abs(vectors(i, c));
      if (a > best_abs) {
        best_abs = a;
        best = i;
      }
    }
    if (vectors(best, c) < 0.0) vectors.col(c) = -vectors.col(c);
  }

  // Exact eigenvalue ties: order by first-differing-coordinate lexicographic
  // comparison of the (sign-fixed) vectors.
  std::vector<Index> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    if (values(a) != values(b)) return values(a) > values(b);
    for (Index i = 0; i < n; ++i) {
      if (vectors(i, a) != vectors(i, b)) return vectors(i, a) < vectors(i, b);
    }
    return false;
  });
  Matrix v2(n, k);
  Vector d2(k);
  for (Index c = 0; c < k; ++c) {
    v2.col(c) = vectors.col(order[static_cast<std::size_t>(c)]);
    d2(c) = values(order[static_cast<std::size_t>(c)]);
  }
  vectors = std::move(v2);
  values = std::move(d2);
}

RawFit fit_weighted_panel(const Panel& z, int k, const FitOptions& options) {
  const Index T = z.periods();
  const Index N = z.units();
  if (k < 1 || k >= std::min(T, N))
    throw InvalidArgument("fit: require 1 <= k < min(T, N); got k = " +
                          std::to_string(k));

  auto [sigma, pc] = pairwise_second_moment(z, options.zero_empty_pairs);
  sigma /= static_cast<double>(N);

  Eigen::SelfAdjointEigenSolver<Matrix> es(sigma);
  if (es.info() != Eigen::Success)
    throw NumericalError("fit: eigendecomposition did not converge");

  // Eigen returns ascending eigenvalues; keep the k algebraically largest.
  Matrix vectors(N, k);
  Vector values(k);
  for (int c = 0; c < k; ++c) {
    vectors.col(c) = es.eigenvectors().col(N - 1 - c);
    values(c) = es.eigenvalues()(N - 1 - c);
  }
  canonicalize_eigenvectors(vectors, values);

  RawFit raw;
  raw.loadings = std::sqrt(static_cast<double>(N)) * vectors;
  raw.eigenvalues = std::move(values);

  // Per-period weighted regression of observed entries on the loadings.
  raw.factors.resize(T, k);
  Matrix masked = z.mask.select(z.values, Matrix::Zero(T, N));
  for (Index t = 0; t < T; ++t) {
    Matrix gram = Matrix::Zero(k, k);
    Vector rhs = Vector::Zero(k);
    for (Index i = 0; i < N; ++i) {
      if (z.mask(t, i)) {
        const auto li = raw.loadings.row(i);
        gram.noalias() += li.transpose() * li;
        rhs.noalias() += masked(t, i) * li.transpose();
      }
    }
    Eigen::SelfAdjointEigenSolver<Matrix> ges(gram);
    const double max_ev = ges.eigenvalues().maxCoeff();
    const double min_ev = ges.eigenvalues().minCoeff();
    const double tol = std::max(max_ev, 0.0) * 1e-12;
    if (!(min_ev > tol)) {
      if (options.ridge_singular_gram) {
        gram.diagonal().array() +=
            1e-8 * gram.trace() / static_cast<double>(k);
        raw.factors.row(t) = gram.ldlt().solve(rhs).transpose();
        continue;
      }
      const double cond =
          min_ev > 0.0 ? max_ev / min_ev
                       : std::numeric_limits<double>::infinity();
      throw NumericalError(
          "fit: singular loading Gram matrix at period " + std::to_string(t) +
          " (condition estimate " + std::to_string(cond) + ")");
    }
    raw.factors.row(t) = ges.eigenvectors() *
                         (ges.eigenvectors().transpose() * rhs).cwiseQuotient(
                             ges.eigenvalues()).matrix();
  }
  return raw;
}

}  // namespace detail

FactorFit fit(const Panel& x, const Panel& y, int k, double gamma,
              const FitOptions& options) {
  WeightedConcat z = concat_weighted(x, y, gamma);
  detail::RawFit raw = detail::fit_weighted_panel(z.panel, k, options);

  FactorFit out;
  out.gamma = gamma;
  out.factors = std::move(raw.factors);
  out.eigenvalues = std::move(raw.eigenvalues);
  out.loadings_x = raw.loadings.topRows(z.n_x);
  out.loadings_y = raw.loadings.bottomRows(z.n_y) / std::sqrt(gamma);
  out.common_x.noalias() = out.factors * out.loadings_x.transpose();
  out.common_y.noalias() = out.factors * out.loadings_y.transpose();
  return out;
}

Panel impute(const FactorFit& fit, const Panel& y) {
  y.check();
  if (fit.common_y.rows() != y.periods() || fit.common_y.cols() != y.units())
    throw InvalidArgument("impute: fit was not produced on this panel");
  Panel out = y;
  for (Index i = 0; i < y.units(); ++i) {
    for (Index t = 0; t < y.periods(); ++t) {
      if (!y.mask(t, i)) {
        out.values(t, i) = fit.common_y(t, i);
        out.mask(t, i) = true;
      }
    }
  }
  return out;
}

Matrix align_rotation(const Matrix& est_factors, const Matrix& true_factors) {
  if (est_factors.rows() != true_factors.rows())
    throw InvalidArgument("align_rotation: row counts differ");
  Eigen::ColPivHouseholderQR<Matrix> qr(est_factors);
  if (qr.rank() < est_factors.cols())
    throw InvalidArgument("align_rotation: estimated factors are rank "
                          "deficient");
  return qr.solve(true_factors);
}

}  // namespace tpca
