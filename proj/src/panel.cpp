#include "tpca/panel.hpp"

#include <cmath>

namespace tpca {

WeightedConcat concat_weighted(const Panel& x, const Panel& y, double gamma) {
  x.check();
  y.check();
  if (x.periods() != y.periods())
    throw InvalidArgument("concat_weighted: panels disagree on T (" +
                          std::to_string(x.periods()) + " vs " +
                          std::to_string(y.periods()) + ")");
  if (!(gamma > 0.0) || !std::isfinite(gamma))
    throw InvalidArgument("concat_weighted: gamma must be positive and finite");

  const Index T = x.periods();
  const Index n_x = x.units();
  const Index n_y = y.units();
  const double root_gamma = std::sqrt(gamma);

  Matrix v(T, n_x + n_y);
  v.leftCols(n_x) = x.values;
  v.rightCols(n_y) = y.values * root_gamma;
  Mask m(T, n_x + n_y);
  m.leftCols(n_x) = x.mask;
  m.rightCols(n_y) = y.mask;
  // Keep the zero placeholder exact on unobserved cells.
  v = m.select(v, Matrix::Zero(T, n_x + n_y));

  WeightedConcat z;
  z.panel = Panel(std::move(v), std::move(m));
  z.gamma = gamma;
  z.n_x = n_x;
  z.n_y = n_y;
  return z;
}

Panel anchor_forward_fill(const Panel& y) {
  y.check();
  Panel out = y;
  for (Index i = 0; i < y.units(); ++i) {
    bool seen = false;
    double last = 0.0;
    for (Index t = 0; t < y.periods(); ++t) {
      if (y.mask(t, i)) {
        seen = true;
        last = y.values(t, i);
      } else if (seen) {
        out.values(t, i) = last;
        out.mask(t, i) = true;
      }
    }
  }
  return out;
}

StandardizeResult standardize(const Panel& p) {
  p.check();
  const Index T = p.periods();
  const Index N = p.units();
  StandardizeResult res;
  res.panel = p;
  res.means = Vector::Zero(N);
  res.stds = Vector::Ones(N);
  for (Index i = 0; i < N; ++i) {
    double sum = 0.0;
    Index n_obs = 0;
    for (Index t = 0; t < T; ++t) {
      if (p.mask(t, i)) {
        sum += p.values(t, i);
        ++n_obs;
      }
    }
    if (n_obs < 2)
      throw InvalidArgument("standardize: unit " + std::to_string(i) +
                            " has fewer than 2 observations");
    const double mean = sum / static_cast<double>(n_obs);
    double ss = 0.0;
    for (Index t = 0; t < T; ++t) {
      if (p.mask(t, i)) {
        const double d = p.values(t, i) - mean;
        ss += d * d;
      }
    }
    const double sd = std::sqrt(ss / static_cast<double>(n_obs));
    if (!(sd > 0.0))
      throw InvalidArgument("standardize: unit " + std::to_string(i) +
                            " has zero variance over observed cells");
    res.means(i) = mean;
    res.stds(i) = sd;
    for (Index t = 0; t < T; ++t) {
      if (p.mask(t, i))
        res.panel.values(t, i) = (p.values(t, i) - mean) / sd;
    }
  }
  return res;
}

Panel inverse_standardize(const Panel& p, const Vector& means,
                          const Vector& stds) {
  p.check();
  if (means.size() != p.units() || stds.size() != p.units())
    throw InvalidArgument("inverse_standardize: per-unit stats size mismatch");
  Panel out = p;
  for (Index i = 0; i < p.units(); ++i) {
    for (Index t = 0; t < p.periods(); ++t) {
      if (p.mask(t, i))
        out.values(t, i) = p.values(t, i) * stds(i) + means(i);
    }
  }
  return out;
}

}  // namespace tpca
