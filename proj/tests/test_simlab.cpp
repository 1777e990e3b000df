#include <doctest.h>

#include <cmath>

#include "tpca/simlab.hpp"

using namespace tpca;

TEST_CASE("dgp kind names round-trip") {
  using K = DgpSpec::Kind;
  for (K k : {K::TwoFactorIID, K::ConsistencyToy, K::EfficiencyOneFactor,
              K::LoadingDependentDGP})
    CHECK(dgp_kind_from_string(to_string(k)) == k);
  CHECK_THROWS_AS(dgp_kind_from_string("unknown"), InvalidArgument);
}

TEST_CASE("generated data obeys the factor structure") {
  DgpSpec spec;
  spec.periods = 40;
  spec.n_x = 25;
  spec.n_y = 15;
  spec.sigma_ex = 0.0;
  spec.sigma_ey = 0.0;
  spec.seed = 2;
  const SimData d = generate(spec);
  CHECK((d.y.values - d.true_F * d.true_Ly.transpose())
            .cwiseAbs()
            .maxCoeff() < 1e-12);
  CHECK((d.x.values - d.true_F * d.true_Lx.transpose())
            .cwiseAbs()
            .maxCoeff() < 1e-12);
  CHECK((d.true_C - d.true_F * d.true_Ly.transpose()).cwiseAbs().maxCoeff() ==
        0.0);
  CHECK(d.x.mask.all());
  CHECK(d.y.mask.all());
}

TEST_CASE("cell variance matches k sigma_F^2 sigma_L^2 + sigma_e^2") {
  DgpSpec spec;
  spec.periods = 400;
  spec.n_x = 10;
  spec.n_y = 400;
  spec.sigma_ey = 2.0;
  spec.seed = 6;
  const SimData d = generate(spec);
  const double var = d.y.values.array().square().mean();
  CHECK(var == doctest::Approx(2.0 * 1.0 * 1.0 + 4.0).epsilon(0.05));
}

TEST_CASE("generation is deterministic in the seed") {
  DgpSpec spec;
  spec.periods = 20;
  spec.n_x = 10;
  spec.n_y = 10;
  spec.seed = 7;
  const SimData a = generate(spec);
  const SimData b = generate(spec);
  CHECK((a.x.values - b.x.values).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.y.values - b.y.values).cwiseAbs().maxCoeff() == 0.0);
  spec.seed = 8;
  const SimData c = generate(spec);
  CHECK((a.y.values - c.y.values).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("the consistency toy zeroes the documented loading blocks") {
  DgpSpec spec;
  spec.kind = DgpSpec::Kind::ConsistencyToy;
  spec.periods = 30;
  spec.n_x = 50;
  spec.n_y = 25;
  spec.seed = 3;
  const SimData d = generate(spec);
  CHECK(d.true_Lx.col(0).cwiseAbs().maxCoeff() == 0.0);
  CHECK(d.true_Lx.col(1).cwiseAbs().maxCoeff() > 0.0);
  const Index cut = static_cast<Index>(std::ceil(std::sqrt(25.0)));
  for (Index i = cut; i < 25; ++i) CHECK(d.true_Ly(i, 1) == 0.0);
  CHECK(d.true_Ly.topRows(cut).col(1).cwiseAbs().maxCoeff() > 0.0);
  CHECK_THROWS_AS(
      [] {
        DgpSpec bad;
        bad.kind = DgpSpec::Kind::ConsistencyToy;
        bad.k = 3;
        return generate(bad);
      }(),
      InvalidArgument);
}

TEST_CASE("relative mse is 0 at truth and 1 at zero") {
  Matrix truth(3, 2);
  truth << 1, 2, 3, 4, 5, 6;
  const Mask obs = Mask::Constant(3, 2, true);
  CHECK(relative_mse(truth, truth, obs, CellSet::All) == 0.0);
  CHECK(relative_mse(Matrix::Zero(3, 2), truth, obs, CellSet::All) == 1.0);

  Mask half = Mask::Constant(3, 2, true);
  half(0, 0) = false;
  Matrix est = truth;
  est(0, 0) = 0.0;  // error only on the missing cell
  CHECK(relative_mse(est, truth, half, CellSet::Observed) == 0.0);
  CHECK(relative_mse(est, truth, half, CellSet::Missing) == 1.0);
  CHECK_THROWS_AS(relative_mse(est, truth, Mask::Constant(3, 2, true),
                               CellSet::Missing),
                  InvalidArgument);
}

TEST_CASE("a noiseless single replication scores zero error") {
  DgpSpec spec;
  spec.periods = 40;
  spec.n_x = 30;
  spec.n_y = 20;
  spec.sigma_ex = 0.0;
  spec.sigma_ey = 0.0;
  RunOptions opts;
  opts.fixed_gamma = 1.0;
  opts.threads = 1;
  const McResult res = run_table(spec, MaskSpec::fully_observed(),
                                 {BenchmarkId::TPCA}, 1, 5, opts);
  const McEstimatorResult& t = res.estimators.at(BenchmarkId::TPCA);
  CHECK(t.feasible_reps == 1);
  CHECK(t.mse_all < 1e-8);

  // with a MAR mask the pairwise moments are only approximately rank-k, so
  // the error is small but nonzero
  const McResult mar = run_table(spec, MaskSpec::mar(0.7, 1),
                                 {BenchmarkId::TPCA}, 1, 5, opts);
  CHECK(mar.estimators.at(BenchmarkId::TPCA).mse_miss < 0.1);
}

TEST_CASE("monte carlo tables are seed deterministic and thread invariant") {
  DgpSpec spec;
  spec.periods = 30;
  spec.n_x = 25;
  spec.n_y = 15;
  spec.sigma_ey = 2.0;
  RunOptions one;
  one.fixed_gamma = 2.0;
  one.threads = 1;
  RunOptions many = one;
  many.threads = 4;
  const std::vector<BenchmarkId> est = {BenchmarkId::TPCA, BenchmarkId::XP_Y,
                                        BenchmarkId::SE_PCA};
  const McResult a = run_table(spec, MaskSpec::mar(0.6, 2), est, 6, 11, one);
  const McResult b = run_table(spec, MaskSpec::mar(0.6, 2), est, 6, 11, many);
  for (BenchmarkId id : est) {
    CHECK(a.estimators.at(id).mse_all == b.estimators.at(id).mse_all);
    CHECK(a.estimators.at(id).mse_miss == b.estimators.at(id).mse_miss);
    CHECK(a.estimators.at(id).se_all == b.estimators.at(id).se_all);
  }
  const McResult c = run_table(spec, MaskSpec::mar(0.6, 2), est, 6, 12, one);
  CHECK(a.estimators.at(BenchmarkId::TPCA).mse_all !=
        c.estimators.at(BenchmarkId::TPCA).mse_all);
}

TEST_CASE("infeasible replications are counted, not averaged") {
  DgpSpec spec;
  spec.periods = 24;
  spec.n_x = 20;
  spec.n_y = 12;
  RunOptions opts;
  opts.fixed_gamma = 1.0;
  opts.threads = 1;
  // a low-frequency target panel leaves XP_Y with empty periods
  const McResult res =
      run_table(spec, MaskSpec::low_frequency(3), {BenchmarkId::XP_Y,
                                                   BenchmarkId::TPCA},
                3, 4, opts);
  CHECK(res.estimators.at(BenchmarkId::XP_Y).infeasible_reps == 3);
  CHECK_FALSE(res.estimators.at(BenchmarkId::XP_Y).feasible());
  CHECK(res.estimators.at(BenchmarkId::TPCA).feasible_reps == 3);
}
