#include <doctest.h>

#include <cmath>
#include <vector>

#include "tpca/rng.hpp"
#include "tpca/simlab.hpp"
#include "tpca/variance.hpp"

using namespace tpca;

namespace {

ObsStats full_stats(Index n) {
  ObsStats s;
  s.omega1_i = Vector::Ones(n);
  s.omega21_i = Vector::Ones(n);
  s.omega22_i = Vector::Ones(n);
  s.omega23_i = Vector::Ones(n);
  s.omega3_i = Vector::Ones(n);
  s.q_ii = Vector::Ones(n);
  s.omega1 = s.omega2 = s.omega3 = 1.0;
  return s;
}

// MAR observation statistics in population form.
ObsStats mar_stats(Index n, double p) {
  ObsStats s = full_stats(n);
  s.q_ii = Vector::Constant(n, p);
  s.omega23_i = Vector::Constant(n, 1.0 / p);
  return s;
}

Matrix random_spd(CounterRng& rng, int k) {
  Matrix m(k, k);
  for (int j = 0; j < k; ++j)
    for (int i = 0; i < k; ++i) m(i, j) = rng.normal();
  return m.transpose() * m + Matrix::Identity(k, k);
}

}  // namespace

TEST_CASE("full observation kills every missing-data correction") {
  CounterRng rng(31);
  const int k = 2;
  const Index T = 12, n_x = 30, n_y = 10;
  ModelMoments m;
  m.sigma_F = random_spd(rng, k);
  m.sigma_Lx = random_spd(rng, k);
  m.sigma_Ly = random_spd(rng, k);
  m.sigma_Ly_t.assign(T, m.sigma_Ly);
  m.xi_F = random_spd(rng, k * k);
  m.var_ex = 1.3;
  m.var_ey = 0.7;
  m.n_x = n_x;
  m.n_y = n_y;
  m.periods = T;
  m.k = k;

  FactorFit f;
  f.factors = Matrix(T, k);
  for (int j = 0; j < k; ++j)
    for (Index t = 0; t < T; ++t) f.factors(t, j) = rng.normal();
  f.loadings_x = Matrix::Zero(n_x, k);
  f.loadings_y = Matrix(n_y, k);
  for (int j = 0; j < k; ++j)
    for (Index i = 0; i < n_y; ++i) f.loadings_y(i, j) = rng.normal();
  f.gamma = 1.0;

  const double r = 0.8;
  const VarianceReport rep = corollary_variances(m, full_stats(n_y), f, r);
  for (Index i = 0; i < n_y; ++i)
    CHECK(rep.sigma_Lambda_miss[i].cwiseAbs().maxCoeff() < 1e-12);
  for (Index t = 0; t < T; ++t)
    CHECK(rep.sigma_F_miss[t].cwiseAbs().maxCoeff() < 1e-12);
  CHECK(rep.cross_term.cwiseAbs().maxCoeff() < 1e-12);

  // independent assembly of the two surviving observed-data terms
  const Matrix sF_inv = m.sigma_F.inverse();
  const Matrix B = m.sigma_Lx + r * m.sigma_Ly;
  const Matrix sF_obs =
      B.inverse() *
      (static_cast<double>(n_y) / static_cast<double>(n_x) * m.var_ex *
           m.sigma_Lx +
       r * r * m.var_ey * m.sigma_Ly) *
      B.inverse();
  const double delta = static_cast<double>(rep.delta);
  for (Index t = 0; t < T; ++t)
    for (Index i = 0; i < n_y; ++i) {
      const Vector ft = f.factors.row(t).transpose();
      const Vector li = f.loadings_y.row(i).transpose();
      const double oracle =
          delta / static_cast<double>(T) * m.var_ey *
              (ft.transpose() * sF_inv * ft)(0) +
          delta / static_cast<double>(n_y) *
              (li.transpose() * sF_obs * li)(0);
      CHECK(rep.sigma_C(t, i) == doctest::Approx(oracle).epsilon(1e-10));
    }
}

TEST_CASE("k=1 MAR corollary collapses to the closed form termwise") {
  const Index T = 7, n_x = 40, n_y = 20;
  const double p = 0.6;
  for (double sF : {0.8, 1.0, 1.7}) {
    for (double sey : {0.5, 2.0}) {
      for (double r : {0.3, 1.0, 2.5}) {
        const double sLx = 1.2, sLy = 0.9, sex = 1.4;
        ModelMoments m;
        m.sigma_F = Matrix::Constant(1, 1, sF * sF);
        m.sigma_Lx = Matrix::Constant(1, 1, sLx * sLx);
        m.sigma_Ly = Matrix::Constant(1, 1, sLy * sLy);
        m.sigma_Ly_t.assign(T, Matrix::Constant(1, 1, p * sLy * sLy));
        m.xi_F = Matrix::Constant(1, 1, 2.0 * std::pow(sF, 4.0));  // gaussian
        m.var_ex = sex * sex;
        m.var_ey = sey * sey;
        m.n_x = n_x;
        m.n_y = n_y;
        m.periods = T;
        m.k = 1;

        CounterRng rng(101);
        FactorFit f;
        f.factors = Matrix(T, 1);
        for (Index t = 0; t < T; ++t) f.factors(t, 0) = rng.normal();
        f.loadings_x = Matrix::Zero(n_x, 1);
        f.loadings_y = Matrix(n_y, 1);
        for (Index i = 0; i < n_y; ++i) f.loadings_y(i, 0) = rng.normal();
        f.gamma = r * static_cast<double>(n_x) / static_cast<double>(n_y);

        const VarianceReport rep =
            corollary_variances(m, mar_stats(n_y, p), f, r);
        const double delta = static_cast<double>(rep.delta);
        const double ratio =
            static_cast<double>(n_y) / static_cast<double>(n_x);
        const double b = sLx * sLx + r * p * sLy * sLy;
        for (Index t = 0; t < T; ++t) {
          CHECK(std::abs(rep.sigma_F_miss[t](0, 0)) < 1e-12);
          for (Index i = 0; i < n_y; ++i) {
            const double F2 = f.factors(t, 0) * f.factors(t, 0);
            const double L2 = f.loadings_y(i, 0) * f.loadings_y(i, 0);
            const double term_obs_loading =
                delta / T * sey * sey / (p * sF * sF) * F2;
            const double term_miss_loading =
                delta / T * (1.0 / p - 1.0) *
                (2.0 * std::pow(sF, 4.0) / std::pow(sF, 4.0)) * L2 * F2;
            const double term_obs_factor =
                delta / n_y * L2 / (b * b) *
                (ratio * sLx * sLx * sex * sex +
                 r * r * p * sLy * sLy * sey * sey);
            const double oracle =
                term_obs_loading + term_miss_loading + term_obs_factor;
            CHECK(std::abs(rep.sigma_C(t, i) - oracle) <
                  1e-10 * std::max(1.0, std::abs(oracle)));
            CHECK(std::abs(rep.cross_term(t, i)) < 1e-12);
          }
        }
      }
    }
  }
}

TEST_CASE("confidence intervals have the normal-quantile half width") {
  FactorFit f;
  f.factors = Matrix::Zero(2, 1);
  f.loadings_x = Matrix::Zero(0, 1);
  f.loadings_y = Matrix::Zero(3, 1);
  f.common_y = Matrix::Constant(2, 3, 5.0);
  f.common_x = Matrix::Zero(2, 0);
  f.eigenvalues = Vector::Ones(1);

  VarianceReport rep;
  rep.sigma_C = Matrix::Constant(2, 3, 4.0);
  rep.delta = 2;
  const IntervalMatrix ci = confidence_intervals(rep, f, 0.95);
  const double half = 1.959963984540054 * std::sqrt(4.0 / 2.0);
  CHECK(ci.upper(0, 0) == doctest::Approx(5.0 + half).epsilon(1e-12));
  CHECK(ci.lower(1, 2) == doctest::Approx(5.0 - half).epsilon(1e-12));

  CHECK_THROWS_AS(confidence_intervals(rep, f, 1.2), InvalidArgument);
  rep.sigma_C(0, 0) = -1.0;
  CHECK_THROWS_AS(confidence_intervals(rep, f, 0.95), NumericalError);
}

TEST_CASE("weak-factor variance reduces to the standard one at p_w = 1") {
  CounterRng rng(41);
  const int k = 2;
  const Index T = 5, n_x = 50, n_y = 20;
  ModelMoments m;
  m.sigma_F = random_spd(rng, k);
  m.sigma_Lx = random_spd(rng, k);
  m.sigma_Ly = random_spd(rng, k);
  m.sigma_Ly_t.clear();
  for (Index t = 0; t < T; ++t) m.sigma_Ly_t.push_back(random_spd(rng, k));
  m.xi_F = random_spd(rng, k * k);
  m.var_ex = 0.9;
  m.var_ey = 1.6;
  m.n_x = n_x;
  m.n_y = n_y;
  m.periods = T;
  m.k = k;

  FactorFit f;
  f.factors = Matrix::Ones(T, k);
  f.loadings_x = Matrix::Zero(n_x, k);
  f.loadings_y = Matrix::Ones(n_y, k);
  f.gamma = 1.0;

  const double r = 1.3;
  const VarianceReport rep = corollary_variances(m, full_stats(n_y), f, r);
  for (Index t = 0; t < T; ++t) {
    const Matrix w = weak_factor_obs_variance(m, r, 1.0, {0, 1}, t);
    CHECK((w - rep.sigma_F_obs[t]).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("weak-factor variance with noiseless X keeps only the Y term") {
  const int k = 1;
  ModelMoments m;
  m.sigma_F = Matrix::Ones(1, 1);
  m.sigma_Lx = Matrix::Constant(1, 1, 2.0);
  m.sigma_Ly = Matrix::Ones(1, 1);
  m.sigma_Ly_t.assign(1, Matrix::Constant(1, 1, 0.5));
  m.xi_F = Matrix::Ones(1, 1);
  m.var_ex = 0.0;
  m.var_ey = 4.0;
  m.n_x = 100;
  m.n_y = 50;
  m.periods = 1;
  m.k = k;
  const double r = 2.0, p_w = 0.5;
  const double n_w = std::min(50.0 / p_w, 100.0);
  const double b = 2.0 + r * 0.5;
  const double oracle =
      r * r * (p_w * n_w / 50.0) * 4.0 * (0.5 / p_w) / (b * b);
  const Matrix w = weak_factor_obs_variance(m, r, p_w, {0}, 0);
  CHECK(w(0, 0) == doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("gamma selection tracks the noise-variance ratio") {
  DgpSpec spec;
  spec.kind = DgpSpec::Kind::EfficiencyOneFactor;
  spec.periods = 150;
  spec.n_x = 150;
  spec.n_y = 150;
  spec.k = 1;
  spec.sigma_ex = 2.0;
  spec.sigma_ey = 1.0;
  spec.seed = 303;
  SimData d = generate(spec);
  CounterRng rng(55);
  for (Index i = 0; i < 150; ++i)
    for (Index t = 0; t < 150; ++t)
      if (!rng.bernoulli(0.7)) {
        d.y.mask(t, i) = false;
        d.y.values(t, i) = 0.0;
      }
  const GammaSelection sel =
      select_gamma(d.x, d.y, 1, default_r_grid(), GammaObjective::AllEntries,
                   ObsStatsMode::sample(50000, 1));
  CHECK(sel.gamma_first == doctest::Approx(1.0));
  CHECK(sel.objective_values.size() == sel.r_grid.size());
  CHECK(sel.gamma_star == doctest::Approx(sel.r_star * sel.gamma_first));
  // sigma_ex^2 / sigma_ey^2 = 4; allow a few grid steps of noise
  CHECK(sel.gamma_star > 4.0 / std::pow(10.0, 4.0 * 3.0 / 60.0));
  CHECK(sel.gamma_star < 4.0 * std::pow(10.0, 4.0 * 3.0 / 60.0));
}

TEST_CASE("gamma selection validates its grid") {
  DgpSpec spec;
  spec.kind = DgpSpec::Kind::EfficiencyOneFactor;
  spec.periods = 20;
  spec.n_x = 20;
  spec.n_y = 20;
  spec.k = 1;
  spec.seed = 1;
  const SimData d = generate(spec);
  CHECK_THROWS_AS(select_gamma(d.x, d.y, 1, {}, GammaObjective::AllEntries,
                               ObsStatsMode::exact()),
                  InvalidArgument);
  CHECK_THROWS_AS(select_gamma(d.x, d.y, 1, {2.0, 1.0},
                               GammaObjective::AllEntries,
                               ObsStatsMode::exact()),
                  InvalidArgument);
  CHECK_THROWS_AS(select_gamma(d.x, d.y, 1, {-1.0, 1.0},
                               GammaObjective::AllEntries,
                               ObsStatsMode::exact()),
                  InvalidArgument);
}

TEST_CASE("default grid spans 1e-2..1e2 with 61 log-spaced points") {
  const std::vector<double> g = default_r_grid();
  REQUIRE(g.size() == 61);
  CHECK(g.front() == doctest::Approx(1e-2).epsilon(1e-12));
  CHECK(g.back() == doctest::Approx(1e2).epsilon(1e-12));
  CHECK(g[30] == doctest::Approx(1.0).epsilon(1e-12));
}
