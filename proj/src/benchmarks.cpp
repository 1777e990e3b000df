#include "tpca/benchmarks.hpp"

#include <Eigen/QR>
#include <limits>
#include <string>
#include <vector>

namespace tpca {

std::string to_string(BenchmarkId id) {
  switch (id) {
    case BenchmarkId::TPCA: return "T-PCA";
    case BenchmarkId::XP_Y: return "XP_Y";
    case BenchmarkId::XP_Z1: return "XP_Z1";
    case BenchmarkId::SE_PCA: return "SE-PCA";
  }
  throw InvalidArgument("unknown benchmark id");
}

BenchmarkId benchmark_from_string(const std::string& tag) {
  if (tag == "T-PCA" || tag == "TPCA" || tag == "tpca") return BenchmarkId::TPCA;
  if (tag == "XP_Y" || tag == "xp_y") return BenchmarkId::XP_Y;
  if (tag == "XP_Z1" || tag == "xp_z1") return BenchmarkId::XP_Z1;
  if (tag == "SE-PCA" || tag == "SE_PCA" || tag == "se_pca")
    return BenchmarkId::SE_PCA;
  throw InvalidArgument("unknown benchmark tag: " + tag);
}

namespace {

void require_every_period_observed(const Panel& y, const char* who) {
  for (Index t = 0; t < y.periods(); ++t) {
    if (!y.mask.row(t).any())
      throw InfeasibleError(std::string(who) + ": no observed unit at period " +
                            std::to_string(t));
  }
}

FactorFit single_panel_fit(const Panel& y, int k, const FitOptions& options,
                           const char* who) {
  require_every_period_observed(y, who);
  detail::RawFit raw;
  try {
    raw = detail::fit_weighted_panel(y, k, options);
  } catch (const NumericalError& e) {
    throw InfeasibleError(std::string(who) + ": " + e.what());
  }
  FactorFit out;
  out.gamma = std::numeric_limits<double>::infinity();
  out.factors = std::move(raw.factors);
  out.eigenvalues = std::move(raw.eigenvalues);
  out.loadings_x = Matrix(0, k);
  out.loadings_y = std::move(raw.loadings);
  out.common_x = Matrix(y.periods(), 0);
  out.common_y.noalias() = out.factors * out.loadings_y.transpose();
  return out;
}

}  // namespace

FactorFit xp_y(const Panel& y, int k, const FitOptions& options) {
  y.check();
  return single_panel_fit(y, k, options, "XP_Y");
}

FactorFit xp_z1(const Panel& x, const Panel& y, int k,
                const FitOptions& options) {
  return fit(x, y, k, 1.0, options);
}

FactorFit se_pca(const Panel& x, const Panel& y, int k,
                 const FitOptions& options) {
  x.check();
  y.check();
  FactorFit fx = single_panel_fit(x, k, options, "SE-PCA/X");

  bool have_y = true;
  FactorFit fy;
  try {
    fy = single_panel_fit(y, k, options, "SE-PCA/Y");
  } catch (const InfeasibleError&) {
    have_y = false;  // degrade to PCA on X
  }

  const Index T = y.periods();
  const Index kk = have_y ? 2 * k : k;
  Matrix factors(T, kk);
  factors.leftCols(k) = fx.factors;
  if (have_y) factors.rightCols(k) = fy.factors;

  // Per-unit time-series OLS of observed Y on the combined factors;
  // minimum-norm solution when the 2k columns are collinear.
  Matrix loadings_y(y.units(), kk);
  for (Index i = 0; i < y.units(); ++i) {
    std::vector<Index> obs;
    for (Index t = 0; t < T; ++t)
      if (y.mask(t, i)) obs.push_back(t);
    if (static_cast<Index>(obs.size()) < kk)
      throw InfeasibleError("SE-PCA: unit " + std::to_string(i) + " has " +
                            std::to_string(obs.size()) +
                            " observed periods, fewer than the " +
                            std::to_string(kk) + " combined factors");
    Matrix ft(static_cast<Index>(obs.size()), kk);
    Vector yt(static_cast<Index>(obs.size()));
    for (std::size_t s = 0; s < obs.size(); ++s) {
      ft.row(static_cast<Index>(s)) = factors.row(obs[s]);
      yt(static_cast<Index>(s)) = y.values(obs[s], i);
    }
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(ft);
    loadings_y.row(i) = cod.solve(yt).transpose();
  }

  FactorFit out;
  out.gamma = 1.0;
  out.factors = std::move(factors);
  out.loadings_y = std::move(loadings_y);
  out.loadings_x = Matrix::Zero(x.units(), kk);
  out.loadings_x.leftCols(k) = fx.loadings_y;  // X fit stores loadings in _y
  out.eigenvalues.resize(kk);
  out.eigenvalues.head(k) = fx.eigenvalues;
  if (have_y) out.eigenvalues.tail(k) = fy.eigenvalues;
  out.common_x.noalias() = out.factors * out.loadings_x.transpose();
  out.common_y.noalias() = out.factors * out.loadings_y.transpose();
  return out;
}

}  // namespace tpca
