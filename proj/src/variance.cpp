#include "tpca/variance.hpp"

#include <Eigen/LU>
#include <cmath>
#include <string>
#include <vector>

#include "tpca/rng.hpp"

namespace tpca {

namespace {

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// v (k x 1) kron M (k x k) -> k^2 x k, block b = v(b) * M.
Matrix kron_vec(const Vector& v, const Matrix& m) {
  Matrix out(v.size() * m.rows(), m.cols());
  for (Index b = 0; b < v.size(); ++b)
    out.block(b * m.rows(), 0, m.rows(), m.cols()) = v(b) * m;
  return out;
}

// I_k kron row vector v' -> k x k^2 with v' on the block diagonal.
Matrix i_kron_row(const Vector& v) {
  const Index k = v.size();
  Matrix out = Matrix::Zero(k, k * k);
  for (Index b = 0; b < k; ++b) out.block(b, b * k, 1, k) = v.transpose();
  return out;
}

Matrix safe_inverse(const Matrix& a, const char* name) {
  Eigen::FullPivLU<Matrix> lu(a);
  if (!lu.isInvertible())
    throw NumericalError(std::string("corollary_variances: singular ") + name);
  return lu.inverse();
}

}  // namespace

VarianceReport corollary_variances(const ModelMoments& m, const ObsStats& s,
                                   const FactorFit& fit, double r) {
  if (!(r > 0.0) || !std::isfinite(r))
    throw InvalidArgument("corollary_variances: r must be positive and finite");
  const int k = m.k;
  const Index T = m.periods;
  const Index n_y = m.n_y;
  if (fit.k() != k || fit.periods() != T || fit.loadings_y.rows() != n_y)
    throw InvalidArgument("corollary_variances: fit does not match moments");
  if (s.q_ii.size() != n_y)
    throw InvalidArgument("corollary_variances: obs stats do not match N_y");

  const Matrix& SF = m.sigma_F;
  const Matrix SFinv = safe_inverse(SF, "Sigma_F");
  const Matrix& SLx = m.sigma_Lx;
  const Matrix rSLy = r * m.sigma_Ly;
  const Matrix A = SLx + rSLy;
  const Matrix Ainv = safe_inverse(A, "Sigma_Lx + r*Sigma_Ly");
  const Matrix& Xi = m.xi_F;

  VarianceReport rep;
  rep.r = r;
  rep.gamma = r * static_cast<double>(m.n_x) / static_cast<double>(n_y);
  rep.delta = delta_rate(n_y, T);
  const double delta = static_cast<double>(rep.delta);
  const double dT = delta / static_cast<double>(T);
  const double dN = delta / static_cast<double>(n_y);

  // Part 1: loadings, per Y unit.
  rep.sigma_Lambda_obs.resize(static_cast<std::size_t>(n_y));
  rep.sigma_Lambda_miss.resize(static_cast<std::size_t>(n_y));
  const Matrix noise_core =
      m.var_ey * rSLy * SF * rSLy;  // sigma_ey^2 r^2 SLy SF SLy
  for (Index i = 0; i < n_y; ++i) {
    const double qii = s.q_ii(i);
    const Vector li = fit.loadings_y.row(i).transpose();
    rep.sigma_Lambda_obs[i] = (m.var_ey / qii) * SFinv;

    const Matrix ki_id = kron_vec(li, Matrix::Identity(k, k));  // k^2 x k
    const Matrix ki_ly = kron_vec(li, rSLy);                    // k^2 x k
    Matrix miss =
        (1.0 / qii - 1.0) * SFinv * ki_id.transpose() * Xi * ki_id * SFinv;
    miss += (s.omega23_i(i) - 1.0 / qii) * SFinv * Ainv *
            (noise_core + ki_ly.transpose() * Xi * ki_ly) * Ainv * SFinv;
    rep.sigma_Lambda_miss[i] = 0.5 * (miss + miss.transpose());
  }

  // Part 2 (strong factors) and the cross term of part 3, per period.
  rep.sigma_F_obs.resize(static_cast<std::size_t>(T));
  rep.sigma_F_miss.resize(static_cast<std::size_t>(T));
  rep.sigma_C.resize(T, n_y);
  rep.cross_term.resize(T, n_y);

  const double nr = static_cast<double>(n_y) / static_cast<double>(m.n_x);
  const Matrix kron_x_y = kron(SLx, rSLy);

  for (Index t = 0; t < T; ++t) {
    const Matrix rSLyt = r * m.sigma_Ly_t[static_cast<std::size_t>(t)];
    const Matrix B = SLx + rSLyt;
    const Matrix Binv = safe_inverse(B, "Sigma_Lx + r*Sigma_Ly_t");

    rep.sigma_F_obs[t] =
        Binv * (nr * m.var_ex * SLx + r * r * m.var_ey *
                                          m.sigma_Ly_t[static_cast<std::size_t>(
                                              t)]) *
        Binv;

    const Matrix P = kron_x_y + kron(rSLyt, SLx);
    const Matrix R = kron(rSLyt, rSLy);
    const Vector vt = (fit.factors.row(t) * SFinv * Ainv).transpose();
    const Matrix iv = i_kron_row(vt);  // k x k^2

    const Matrix PXi = P * Xi;
    const Matrix RXi = R * Xi;
    const Matrix core =
        PXi * ((s.omega1 - 1.0) * P + (s.omega2 - 1.0) * R) +
        RXi * ((s.omega2 - 1.0) * P + (s.omega3 - 1.0) * R);
    Matrix miss = Binv * iv * core * iv.transpose() * Binv;
    rep.sigma_F_miss[t] = 0.5 * (miss + miss.transpose());

    // Cross-covariance machinery: W1 = Binv (I (x) v') P Xi and the analogue
    // with R, pre-multiplied against the two possible right-hand kron blocks.
    const Matrix W1 = Binv * iv * PXi;  // k x k^2
    const Matrix W2 = Binv * iv * RXi;
    std::vector<Matrix> w1x(static_cast<std::size_t>(k)),
        w1y(static_cast<std::size_t>(k)), w2x(static_cast<std::size_t>(k)),
        w2y(static_cast<std::size_t>(k));
    for (int b = 0; b < k; ++b) {
      const Matrix blk1 = W1.block(0, b * k, k, k);
      const Matrix blk2 = W2.block(0, b * k, k, k);
      w1x[b] = blk1 * SLx;
      w1y[b] = blk1 * rSLy;
      w2x[b] = blk2 * SLx;
      w2y[b] = blk2 * rSLy;
    }
    const Vector ut = Ainv * SFinv * fit.factors.row(t).transpose();
    const Vector ft = fit.factors.row(t).transpose();

    for (Index i = 0; i < n_y; ++i) {
      const Vector li = fit.loadings_y.row(i).transpose();
      Matrix e = Matrix::Zero(k, k);
      for (int b = 0; b < k; ++b) {
        e += li(b) * ((s.omega1_i(i) - 1.0) * w1x[b] +
                      (s.omega22_i(i) - 1.0) * w1y[b] +
                      (s.omega21_i(i) - 1.0) * w2x[b] +
                      (s.omega3_i(i) - 1.0) * w2y[b]);
      }
      const double cross = li.dot(e * ut);

      const double load_part =
          ft.dot((rep.sigma_Lambda_obs[i] + rep.sigma_Lambda_miss[i]) * ft);
      const double fac_obs = li.dot(rep.sigma_F_obs[t] * li);
      const double fac_miss = li.dot(rep.sigma_F_miss[t] * li);
      rep.cross_term(t, i) = -2.0 * dT * cross;
      rep.sigma_C(t, i) =
          dT * load_part + dN * fac_obs + dT * fac_miss + rep.cross_term(t, i);
    }
  }
  return rep;
}

Matrix weak_factor_obs_variance(const ModelMoments& m, double r, double p_w,
                                const std::vector<int>& weak, Index t) {
  if (!(p_w > 0.0 && p_w <= 1.0))
    throw InvalidArgument("weak_factor_obs_variance: p_w must be in (0, 1]");
  if (t < 0 || t >= m.periods)
    throw InvalidArgument("weak_factor_obs_variance: period out of range");
  const int k = m.k;
  const Index kw = static_cast<Index>(weak.size());
  if (kw < 1 || kw > k)
    throw InvalidArgument("weak_factor_obs_variance: bad weak index set");
  for (int w : weak)
    if (w < 0 || w >= k)
      throw InvalidArgument("weak_factor_obs_variance: weak index out of "
                            "range");

  const Matrix& SLyt = m.sigma_Ly_t[static_cast<std::size_t>(t)];
  const Matrix B = m.sigma_Lx + r * SLyt;
  Eigen::FullPivLU<Matrix> lu(B);
  if (!lu.isInvertible())
    throw NumericalError("weak_factor_obs_variance: singular Sigma_Lx + "
                         "r*Sigma_Ly_t");
  const Matrix Binv = lu.inverse();

  auto block = [&](const Matrix& a) {
    Matrix out(kw, kw);
    for (Index i = 0; i < kw; ++i)
      for (Index j = 0; j < kw; ++j) out(i, j) = a(weak[i], weak[j]);
    return out;
  };

  const double n_w = std::min(static_cast<double>(m.n_y) / p_w,
                              static_cast<double>(m.n_x));
  const Matrix slyt_w = block(SLyt) / p_w;  // (N_y p_w)^-1 normalization
  const Matrix mid = (n_w / static_cast<double>(m.n_x)) * m.var_ex *
                         block(m.sigma_Lx) +
                     r * r * (p_w * n_w / static_cast<double>(m.n_y)) *
                         m.var_ey * slyt_w;
  const Matrix binv_w = block(Binv);
  return binv_w * mid * binv_w;
}

IntervalMatrix confidence_intervals(const VarianceReport& report,
                                    const FactorFit& fit, double level) {
  if (!(level > 0.0 && level < 1.0))
    throw InvalidArgument("confidence_intervals: level must be in (0, 1)");
  if (fit.common_y.rows() != report.sigma_C.rows() ||
      fit.common_y.cols() != report.sigma_C.cols())
    throw InvalidArgument("confidence_intervals: fit does not match report");

  const double z = CounterRng::normal_quantile(0.5 * (1.0 + level));
  const double delta = static_cast<double>(report.delta);

  IntervalMatrix out;
  out.level = level;
  out.lower.resizeLike(report.sigma_C);
  out.upper.resizeLike(report.sigma_C);
  for (Index i = 0; i < report.sigma_C.cols(); ++i) {
    for (Index t = 0; t < report.sigma_C.rows(); ++t) {
      const double v = report.sigma_C(t, i);
      if (!(v > 0.0))
        throw NumericalError(
            "confidence_intervals: non-positive variance at (t, i) = (" +
            std::to_string(t) + ", " + std::to_string(i) + ")");
      const double half = z * std::sqrt(v / delta);
      out.lower(t, i) = fit.common_y(t, i) - half;
      out.upper(t, i) = fit.common_y(t, i) + half;
    }
  }
  return out;
}

std::vector<double> default_r_grid() {
  std::vector<double> grid(61);
  for (int i = 0; i <= 60; ++i)
    grid[static_cast<std::size_t>(i)] =
        std::pow(10.0, -2.0 + 4.0 * static_cast<double>(i) / 60.0);
  return grid;
}

GammaSelection select_gamma(const Panel& x, const Panel& y, int k,
                            const std::vector<double>& r_grid,
                            GammaObjective objective,
                            const ObsStatsMode& omega_mode,
                            const FitOptions& options) {
  if (r_grid.empty())
    throw InvalidArgument("select_gamma: empty r grid");
  for (std::size_t i = 0; i < r_grid.size(); ++i) {
    if (!(r_grid[i] > 0.0))
      throw InvalidArgument("select_gamma: grid values must be positive");
    if (i > 0 && !(r_grid[i] > r_grid[i - 1]))
      throw InvalidArgument("select_gamma: grid must be strictly increasing");
  }

  GammaSelection sel;
  sel.gamma_first =
      static_cast<double>(x.units()) / static_cast<double>(y.units());
  sel.r_grid = r_grid;
  sel.objective = objective;

  const FactorFit first = fit(x, y, k, sel.gamma_first, options);
  const ModelMoments moments = plugin_moments(first, x, y);
  ObsStatsMode mode = omega_mode;
  if (!mode.sampled && y.units() > 30) mode.sampled = true;
  const ObsStats stats = obs_stats(y.mask, mode);

  sel.objective_values.reserve(r_grid.size());
  std::size_t best = 0;
  for (std::size_t g = 0; g < r_grid.size(); ++g) {
    const VarianceReport rep =
        corollary_variances(moments, stats, first, r_grid[g]);
    double value = 0.0;
    if (objective == GammaObjective::AllEntries) {
      value = rep.sigma_C.sum();
    } else {
      for (Index i = 0; i < y.units(); ++i)
        for (Index t = 0; t < y.periods(); ++t)
          if (!y.mask(t, i)) value += rep.sigma_C(t, i);
    }
    sel.objective_values.push_back(value);
    if (value < sel.objective_values[best]) best = g;
  }
  sel.r_star = r_grid[best];
  sel.gamma_star = sel.r_star * sel.gamma_first;
  return sel;
}

}  // namespace tpca
