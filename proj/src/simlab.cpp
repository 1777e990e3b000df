#include "tpca/simlab.hpp"

#include <atomic>
#include <cmath>
#include <thread>
#include <vector>

#include "tpca/rng.hpp"

namespace tpca {

std::string to_string(DgpSpec::Kind kind) {
  switch (kind) {
    case DgpSpec::Kind::TwoFactorIID: return "two_factor_iid";
    case DgpSpec::Kind::ConsistencyToy: return "consistency_toy";
    case DgpSpec::Kind::EfficiencyOneFactor: return "efficiency_one_factor";
    case DgpSpec::Kind::LoadingDependentDGP: return "loading_dependent";
  }
  throw InvalidArgument("unknown DGP kind");
}

DgpSpec::Kind dgp_kind_from_string(const std::string& tag) {
  if (tag == "two_factor_iid") return DgpSpec::Kind::TwoFactorIID;
  if (tag == "consistency_toy") return DgpSpec::Kind::ConsistencyToy;
  if (tag == "efficiency_one_factor")
    return DgpSpec::Kind::EfficiencyOneFactor;
  if (tag == "loading_dependent") return DgpSpec::Kind::LoadingDependentDGP;
  throw InvalidArgument("unknown DGP kind: " + tag);
}

namespace {

Matrix gaussian_matrix(CounterRng rng, Index rows, Index cols, double sd) {
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = sd * rng.normal();
  return m;
}

}  // namespace

SimData generate(const DgpSpec& spec) {
  if (spec.periods < 1 || spec.n_x < 1 || spec.n_y < 1 || spec.k < 1)
    throw InvalidArgument("generate: dimensions must be positive");
  if ((spec.kind == DgpSpec::Kind::ConsistencyToy ||
       spec.kind == DgpSpec::Kind::LoadingDependentDGP) &&
      spec.k != 2)
    throw InvalidArgument("generate: this DGP is a two-factor model");
  if (spec.kind == DgpSpec::Kind::EfficiencyOneFactor && spec.k != 1)
    throw InvalidArgument("generate: this DGP is a one-factor model");

  const CounterRng base(spec.seed);
  SimData d;
  d.true_F = gaussian_matrix(base.derive(10), spec.periods, spec.k,
                             spec.sigma_F);
  d.true_Lx = gaussian_matrix(base.derive(11), spec.n_x, spec.k,
                              spec.sigma_Lx);
  d.true_Ly = gaussian_matrix(base.derive(12), spec.n_y, spec.k,
                              spec.sigma_Ly);

  switch (spec.kind) {
    case DgpSpec::Kind::ConsistencyToy: {
      // Factor 1 is absent from X; factor 2 loads only on the first
      // ceil(sqrt(N_y)) units of Y (a weak factor in Y).
      d.true_Lx.col(0).setZero();
      const Index strong_until = static_cast<Index>(
          std::ceil(std::sqrt(static_cast<double>(spec.n_y))));
      for (Index i = strong_until; i < spec.n_y; ++i) d.true_Ly(i, 1) = 0.0;
      break;
    }
    case DgpSpec::Kind::LoadingDependentDGP:
      d.true_Lx.col(0).setZero();
      break;
    case DgpSpec::Kind::TwoFactorIID:
    case DgpSpec::Kind::EfficiencyOneFactor:
      break;
  }

  d.true_C.noalias() = d.true_F * d.true_Ly.transpose();
  Matrix xv = d.true_F * d.true_Lx.transpose() +
              gaussian_matrix(base.derive(13), spec.periods, spec.n_x,
                              spec.sigma_ex);
  Matrix yv = d.true_C + gaussian_matrix(base.derive(14), spec.periods,
                                         spec.n_y, spec.sigma_ey);
  d.x = Panel::fully_observed(std::move(xv));
  d.y = Panel::fully_observed(std::move(yv));
  return d;
}

double relative_mse(const Matrix& est_C, const Matrix& true_C,
                    const Mask& observed, CellSet cells) {
  if (est_C.rows() != true_C.rows() || est_C.cols() != true_C.cols() ||
      observed.rows() != true_C.rows() || observed.cols() != true_C.cols())
    throw InvalidArgument("relative_mse: dimension mismatch");
  double num = 0.0, den = 0.0;
  long n = 0;
  for (Index i = 0; i < true_C.cols(); ++i) {
    for (Index t = 0; t < true_C.rows(); ++t) {
      const bool in_set = cells == CellSet::All ||
                          (cells == CellSet::Observed && observed(t, i)) ||
                          (cells == CellSet::Missing && !observed(t, i));
      if (!in_set) continue;
      const double d = est_C(t, i) - true_C(t, i);
      num += d * d;
      den += true_C(t, i) * true_C(t, i);
      ++n;
    }
  }
  if (n == 0) throw InvalidArgument("relative_mse: empty cell set");
  if (!(den > 0.0)) throw NumericalError("relative_mse: zero denominator");
  return num / den;
}

namespace {

struct RepOutcome {
  bool feasible = false;
  double mse_obs = 0.0, mse_miss = 0.0, mse_all = 0.0;
};

struct RepRow {
  std::vector<RepOutcome> by_estimator;
  double gamma_star = 0.0;
  bool has_gamma = false;
};

}  // namespace

McResult run_table(const DgpSpec& dgp, const MaskSpec& mask,
                   const std::vector<BenchmarkId>& estimators, int reps,
                   std::uint64_t master_seed, const RunOptions& options) {
  if (reps < 1) throw InvalidArgument("run_table: reps must be >= 1");
  if (estimators.empty())
    throw InvalidArgument("run_table: no estimators requested");

  const CounterRng master(master_seed);
  std::vector<RepRow> rows(static_cast<std::size_t>(reps));

  auto run_rep = [&](int rep) {
    const CounterRng rep_rng = master.derive(static_cast<std::uint64_t>(rep));
    DgpSpec d = dgp;
    d.seed = rep_rng.derive(1).next_u64();
    const SimData sim = generate(d);

    MaskSpec ms = mask;
    ms.seed = rep_rng.derive(2).next_u64();
    MaskContext ctx;
    ctx.values = &sim.y.values;
    ctx.loadings = &sim.true_Ly;
    const Mask w = generate_mask(ms, d.periods, d.n_y, ctx);
    const MaskedPanel masked = apply_mask(sim.y, w);
    const Mask& observed = masked.panel.mask;

    // Sparse patterns (e.g. loading-dependent with small p) routinely leave
    // a few unit pairs with no joint observations; such pairs carry no
    // moment information and are scored as zero rather than aborting the
    // replication.
    FitOptions fit_opts;
    fit_opts.zero_empty_pairs = true;

    RepRow row;
    row.by_estimator.resize(estimators.size());
    for (std::size_t e = 0; e < estimators.size(); ++e) {
      RepOutcome& out = row.by_estimator[e];
      try {
        FactorFit f;
        switch (estimators[e]) {
          case BenchmarkId::TPCA: {
            double gamma;
            if (options.fixed_gamma) {
              gamma = *options.fixed_gamma;
            } else {
              ObsStatsMode omode = ObsStatsMode::sample(
                  100000, rep_rng.derive(3).next_u64());
              omode.zero_empty_pairs = true;
              GammaSelection sel =
                  select_gamma(sim.x, masked.panel, d.k, default_r_grid(),
                               options.objective, omode, fit_opts);
              gamma = sel.gamma_star;
              row.gamma_star = gamma;
              row.has_gamma = true;
            }
            f = fit(sim.x, masked.panel, d.k, gamma, fit_opts);
            break;
          }
          case BenchmarkId::XP_Y:
            f = xp_y(masked.panel, d.k, fit_opts);
            break;
          case BenchmarkId::XP_Z1:
            f = xp_z1(sim.x, masked.panel, d.k, fit_opts);
            break;
          case BenchmarkId::SE_PCA:
            f = se_pca(sim.x, masked.panel, d.k, fit_opts);
            break;
        }
        out.mse_obs =
            relative_mse(f.common_y, sim.true_C, observed, CellSet::Observed);
        out.mse_miss = observed.all()
                           ? 0.0
                           : relative_mse(f.common_y, sim.true_C, observed,
                                          CellSet::Missing);
        out.mse_all =
            relative_mse(f.common_y, sim.true_C, observed, CellSet::All);
        out.feasible = true;
      } catch (const InfeasibleError&) {
        out.feasible = false;
      } catch (const NumericalError&) {
        out.feasible = false;
      }
    }
    rows[static_cast<std::size_t>(rep)] = std::move(row);
  };

  int n_threads = options.threads > 0
                      ? options.threads
                      : static_cast<int>(std::thread::hardware_concurrency());
  n_threads = std::max(1, std::min(n_threads, reps));
  if (n_threads == 1) {
    for (int rep = 0; rep < reps; ++rep) run_rep(rep);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int w = 0; w < n_threads; ++w) {
      pool.emplace_back([&] {
        for (int rep = next.fetch_add(1); rep < reps;
             rep = next.fetch_add(1))
          run_rep(rep);
      });
    }
    for (auto& th : pool) th.join();
  }

  McResult result;
  result.reps = reps;
  result.master_seed = master_seed;
  double gamma_sum = 0.0;
  int gamma_n = 0;
  for (const RepRow& row : rows) {
    if (row.has_gamma) {
      gamma_sum += row.gamma_star;
      ++gamma_n;
    }
  }
  if (gamma_n > 0) result.mean_gamma_star = gamma_sum / gamma_n;

  for (std::size_t e = 0; e < estimators.size(); ++e) {
    McEstimatorResult agg;
    double s_obs = 0.0, s_miss = 0.0, s_all = 0.0;
    double q_obs = 0.0, q_miss = 0.0, q_all = 0.0;
    for (const RepRow& row : rows) {
      const RepOutcome& out = row.by_estimator[e];
      if (!out.feasible) {
        ++agg.infeasible_reps;
        continue;
      }
      ++agg.feasible_reps;
      s_obs += out.mse_obs;
      s_miss += out.mse_miss;
      s_all += out.mse_all;
      q_obs += out.mse_obs * out.mse_obs;
      q_miss += out.mse_miss * out.mse_miss;
      q_all += out.mse_all * out.mse_all;
    }
    if (agg.feasible_reps > 0) {
      const double n = agg.feasible_reps;
      agg.mse_obs = s_obs / n;
      agg.mse_miss = s_miss / n;
      agg.mse_all = s_all / n;
      if (agg.feasible_reps > 1) {
        auto se = [n](double s, double q, double mean) {
          const double var = std::max(0.0, q / n - mean * mean);
          return std::sqrt(var / (n - 1.0));
        };
        agg.se_obs = se(s_obs, q_obs, agg.mse_obs);
        agg.se_miss = se(s_miss, q_miss, agg.mse_miss);
        agg.se_all = se(s_all, q_all, agg.mse_all);
      }
    }
    result.estimators[estimators[e]] = agg;
  }
  return result;
}

}  // namespace tpca
