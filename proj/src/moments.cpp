#include "tpca/moments.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "tpca/rng.hpp"

namespace tpca {

std::pair<Matrix, PairCounts> pairwise_second_moment(const Panel& z,
                                                     bool zero_empty_pairs) {
  z.check();
  const Index T = z.periods();
  const Index N = z.units();

  // The placeholder is 0 on unobserved cells, so the masked cross products
  // are plain matrix products.
  Matrix masked = z.mask.select(z.values, Matrix::Zero(T, N));
  Matrix sums = masked.transpose() * masked;
  Matrix mask_d = z.mask.cast<double>();
  Matrix counts_d = mask_d.transpose() * mask_d;

  PairCounts pc;
  pc.counts.resize(N, N);
  pc.q.resize(N, N);
  Matrix sigma(N, N);
  for (Index i = 0; i < N; ++i) {
    for (Index j = i; j < N; ++j) {
      const auto c = static_cast<long>(std::llround(counts_d(i, j)));
      if (c == 0 && (i == j || !zero_empty_pairs))
        throw InfeasibleError("units " + std::to_string(i) + " and " +
                              std::to_string(j) +
                              " are never jointly observed");
      const double v = c == 0 ? 0.0 : sums(i, j) / static_cast<double>(c);
      sigma(i, j) = v;
      sigma(j, i) = v;
      pc.counts(i, j) = static_cast<int>(c);
      pc.counts(j, i) = static_cast<int>(c);
      const double q = static_cast<double>(c) / static_cast<double>(T);
      pc.q(i, j) = q;
      pc.q(j, i) = q;
    }
  }
  return {std::move(sigma), std::move(pc)};
}

namespace {

// One observation bitset per unit; all q_{il,jh} become popcounts of ANDs.
struct UnitBits {
  Index periods = 0;
  int words = 0;
  std::vector<std::uint64_t> data;  // units * words

  explicit UnitBits(const Mask& mask)
      : periods(mask.rows()),
        words(static_cast<int>((mask.rows() + 63) / 64)),
        data(static_cast<std::size_t>(mask.cols()) * words, 0) {
    for (Index i = 0; i < mask.cols(); ++i) {
      std::uint64_t* row = unit(i);
      for (Index t = 0; t < periods; ++t) {
        if (mask(t, i)) row[t / 64] |= (1ULL << (t % 64));
      }
    }
  }

  std::uint64_t* unit(Index i) {
    return data.data() + static_cast<std::size_t>(i) * words;
  }
  const std::uint64_t* unit(Index i) const {
    return data.data() + static_cast<std::size_t>(i) * words;
  }
};

int pop_and2(const std::uint64_t* a, const std::uint64_t* b, int words) {
  int c = 0;
  for (int w = 0; w < words; ++w) c += std::popcount(a[w] & b[w]);
  return c;
}

int pop_and3(const std::uint64_t* a, const std::uint64_t* b,
             const std::uint64_t* c, int words) {
  int n = 0;
  for (int w = 0; w < words; ++w) n += std::popcount(a[w] & b[w] & c[w]);
  return n;
}

int pop_and4(const std::uint64_t* a, const std::uint64_t* b,
             const std::uint64_t* c, const std::uint64_t* d, int words) {
  int n = 0;
  for (int w = 0; w < words; ++w)
    n += std::popcount(a[w] & b[w] & c[w] & d[w]);
  return n;
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

template <typename Draw>
MeanSe sample_mean(CounterRng& rng, int samples, Draw draw) {
  double sum = 0.0, sumsq = 0.0;
  for (int s = 0; s < samples; ++s) {
    const double v = draw(rng);
    sum += v;
    sumsq += v * v;
  }
  const double n = static_cast<double>(samples);
  MeanSe out;
  out.mean = sum / n;
  const double var = std::max(0.0, sumsq / n - out.mean * out.mean);
  out.se = samples > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
  return out;
}

}  // namespace

ObsStats obs_stats(const Mask& mask, const ObsStatsMode& mode) {
  const Index T = mask.rows();
  const Index N = mask.cols();
  if (T < 1 || N < 1) throw InvalidArgument("obs_stats: empty mask");
  if (!mode.sampled && N > 30)
    throw InvalidArgument(
        "obs_stats: exact mode enumerates O(N^4) tuples and is limited to "
        "N <= 30; use sampled mode");

  const UnitBits bits(mask);
  const int W = bits.words;
  const double Td = static_cast<double>(T);

  // q matrix; every pair must be jointly observed at least once.
  Matrix q(N, N);
  for (Index i = 0; i < N; ++i) {
    for (Index j = i; j < N; ++j) {
      const int c = pop_and2(bits.unit(i), bits.unit(j), W);
      if (c == 0 && (i == j || !mode.zero_empty_pairs))
        throw InfeasibleError("obs_stats: units " + std::to_string(i) +
                              " and " + std::to_string(j) +
                              " are never jointly observed (q_ij = 0)");
      q(i, j) = q(j, i) = static_cast<double>(c) / Td;
    }
  }

  ObsStats out;
  out.mode = mode;
  out.q_ii = q.diagonal();
  out.omega1_i = Vector::Zero(N);
  out.omega21_i = Vector::Zero(N);
  out.omega22_i = Vector::Zero(N);
  out.omega23_i = Vector::Zero(N);
  out.omega3_i = Vector::Zero(N);
  out.omega21_se = Vector::Zero(N);
  out.omega22_se = Vector::Zero(N);
  out.omega23_se = Vector::Zero(N);
  out.omega3_se = Vector::Zero(N);

  if (N < 3)
    throw InvalidArgument("obs_stats: need at least 3 units");

  // The omega limits are defined through tuples of distinct units; tuples
  // with repeated indices are excluded so the averages match those limits
  // without an O(1/N) offset (e.g. the j = i term of omega^(1) would
  // contribute 1/q_ii instead of 1).
  //
  // omega^(1) is O(N^2) and always computed exactly.
  for (Index i = 0; i < N; ++i) {
    double s = 0.0;
    for (Index j = 0; j < N; ++j)
      if (j != i) s += q(i, j) / (q(i, i) * q(j, j));
    out.omega1_i(i) = s / static_cast<double>(N - 1);
  }

  if (!mode.sampled) {
    // Pair bitsets make q_{il,jh} a two-operand popcount.
    std::vector<std::uint64_t> pair_bits(
        static_cast<std::size_t>(N) * N * W, 0);
    auto pair = [&](Index a, Index b) {
      return pair_bits.data() + (static_cast<std::size_t>(a) * N + b) * W;
    };
    for (Index a = 0; a < N; ++a) {
      for (Index b = a; b < N; ++b) {
        std::uint64_t* dst = pair(a, b);
        const std::uint64_t* ba = bits.unit(a);
        const std::uint64_t* bb = bits.unit(b);
        for (int w = 0; w < W; ++w) dst[w] = ba[w] & bb[w];
        if (b != a)
          std::copy(dst, dst + W, pair(b, a));
      }
    }

    const double Nm1 = static_cast<double>(N - 1);
    const double Nm2 = static_cast<double>(N - 2);
    for (Index i = 0; i < N; ++i) {
      double s21 = 0.0, s22 = 0.0, s23 = 0.0;
      // A joint count is <= every pairwise count in its denominator, so a
      // zero denominator implies a zero numerator; such tuples score 0.
      for (Index j = 0; j < N; ++j) {
        for (Index l = 0; l < N; ++l) {
          const int c_ijl = pop_and2(bits.unit(i), pair(j, l), W);
          const int c_jil = pop_and2(bits.unit(j), pair(i, l), W);
          // q_{ii,jl} = q_{jj,il} with roles swapped = the same triple AND.
          if (c_ijl > 0) {
            const double q3 = static_cast<double>(c_ijl) / Td;
            if (j != i && l != i) {
              s21 += q3 / (q(i, i) * q(j, l));
              if (j != l) s23 += q3 / (q(i, j) * q(i, l));
            }
          }
          if (c_jil > 0 && j != i && j != l)
            s22 += static_cast<double>(c_jil) / Td / (q(j, j) * q(i, l));
        }
      }
      out.omega21_i(i) = s21 / (Nm1 * Nm1);
      out.omega22_i(i) = s22 / (Nm1 * Nm1);
      out.omega23_i(i) = s23 / (Nm1 * Nm2);

      // The two pairs {i, l} and {j, h} must be disjoint; self-pairs (l = i
      // or j = h) are allowed.
      double s3 = 0.0;
      for (Index l = 0; l < N; ++l) {
        const std::uint64_t* cil = pair(i, l);
        const double qil = q(i, l);
        for (Index j = 0; j < N; ++j) {
          if (j == i || j == l) continue;
          for (Index h = 0; h < N; ++h) {
            if (h == i || h == l) continue;
            const int c4 = pop_and2(cil, pair(j, h), W);
            if (c4 > 0)
              s3 += static_cast<double>(c4) / Td / (qil * q(j, h));
          }
        }
      }
      out.omega3_i(i) = s3 / (Nm1 * Nm1 + Nm1 * Nm2 * Nm2);
    }
  } else {
    const int per_unit = std::max(
        1, static_cast<int>(mode.sample_size / static_cast<int>(N)));
    const CounterRng base(mode.seed);
    for (Index i = 0; i < N; ++i) {
      const std::uint64_t ui = static_cast<std::uint64_t>(i);
      const std::uint64_t n = static_cast<std::uint64_t>(N);
      const std::uint64_t* bi = bits.unit(i);

      // Tuples with repeated indices are rejected and redrawn, mirroring
      // the distinct-tuple sets of the exact branch.
      CounterRng r21 = base.derive(1, ui);
      MeanSe m21 = sample_mean(r21, per_unit, [&](CounterRng& g) {
        Index j, l;
        do {
          j = static_cast<Index>(g.below(n));
          l = static_cast<Index>(g.below(n));
        } while (j == i || l == i);
        const int c3 = pop_and3(bi, bits.unit(j), bits.unit(l), W);
        if (c3 == 0) return 0.0;  // zero numerator covers zero denominators
        return static_cast<double>(c3) / Td / (q(i, i) * q(j, l));
      });
      out.omega21_i(i) = m21.mean;
      out.omega21_se(i) = m21.se;

      CounterRng r22 = base.derive(2, ui);
      MeanSe m22 = sample_mean(r22, per_unit, [&](CounterRng& g) {
        Index j, l;
        do {
          j = static_cast<Index>(g.below(n));
          l = static_cast<Index>(g.below(n));
        } while (j == i || j == l);
        const int c3 = pop_and3(bits.unit(j), bi, bits.unit(l), W);
        if (c3 == 0) return 0.0;
        return static_cast<double>(c3) / Td / (q(j, j) * q(i, l));
      });
      out.omega22_i(i) = m22.mean;
      out.omega22_se(i) = m22.se;

      CounterRng r23 = base.derive(3, ui);
      MeanSe m23 = sample_mean(r23, per_unit, [&](CounterRng& g) {
        Index j, l;
        do {
          j = static_cast<Index>(g.below(n));
          l = static_cast<Index>(g.below(n));
        } while (j == i || l == i || j == l);
        const int c3 = pop_and3(bi, bits.unit(j), bits.unit(l), W);
        if (c3 == 0) return 0.0;
        return static_cast<double>(c3) / Td / (q(i, j) * q(i, l));
      });
      out.omega23_i(i) = m23.mean;
      out.omega23_se(i) = m23.se;

      CounterRng r3 = base.derive(4, ui);
      MeanSe m3 = sample_mean(r3, per_unit, [&](CounterRng& g) {
        Index j, l, h;
        do {
          l = static_cast<Index>(g.below(n));
          j = static_cast<Index>(g.below(n));
          h = static_cast<Index>(g.below(n));
        } while (j == i || j == l || h == i || h == l);
        const int c4 =
            pop_and4(bi, bits.unit(l), bits.unit(j), bits.unit(h), W);
        if (c4 == 0) return 0.0;
        return static_cast<double>(c4) / Td / (q(i, l) * q(j, h));
      });
      out.omega3_i(i) = m3.mean;
      out.omega3_se(i) = m3.se;
    }
  }

  out.omega1 = out.omega1_i.mean();
  out.omega2 = out.omega21_i.mean();
  out.omega3 = out.omega3_i.mean();
  return out;
}

ModelMoments plugin_moments(const FactorFit& fit, const Panel& x,
                            const Panel& y) {
  x.check();
  y.check();
  const Index T = fit.periods();
  const int k = static_cast<int>(fit.k());
  const Index n_x = x.units();
  const Index n_y = y.units();
  if (x.periods() != T || y.periods() != T)
    throw InvalidArgument("plugin_moments: panel periods differ from fit");
  if (fit.loadings_y.rows() != n_y ||
      (fit.loadings_x.rows() != 0 && fit.loadings_x.rows() != n_x))
    throw InvalidArgument("plugin_moments: fit does not match the panels");
  if (k >= std::min(T, n_x + n_y))
    throw InvalidArgument("plugin_moments: degenerate fit, k >= min(T, N)");

  ModelMoments m;
  m.k = k;
  m.n_x = n_x;
  m.n_y = n_y;
  m.periods = T;
  m.sigma_F = fit.factors.transpose() * fit.factors / static_cast<double>(T);
  m.sigma_Ly = fit.loadings_y.transpose() * fit.loadings_y /
               static_cast<double>(n_y);
  if (fit.loadings_x.rows() > 0)
    m.sigma_Lx = fit.loadings_x.transpose() * fit.loadings_x /
                 static_cast<double>(n_x);
  else
    m.sigma_Lx = Matrix::Zero(k, k);

  m.sigma_Ly_t.resize(static_cast<std::size_t>(T));
  for (Index t = 0; t < T; ++t) {
    Matrix s = Matrix::Zero(k, k);
    for (Index i = 0; i < n_y; ++i) {
      if (y.mask(t, i)) {
        const auto li = fit.loadings_y.row(i);
        s.noalias() += li.transpose() * li;
      }
    }
    m.sigma_Ly_t[static_cast<std::size_t>(t)] = s / static_cast<double>(n_y);
  }

  // Xi_F = Var(vec(F_t F_t')) with divisor T, column-major vec.
  Matrix vecs(k * k, T);
  for (Index t = 0; t < T; ++t) {
    Matrix ff = fit.factors.row(t).transpose() * fit.factors.row(t);
    vecs.col(t) = Eigen::Map<Vector>(ff.data(), k * k);
  }
  Vector mean_vec = vecs.rowwise().mean();
  Matrix centered = vecs.colwise() - mean_vec;
  m.xi_F = centered * centered.transpose() / static_cast<double>(T);

  auto residual_var = [](const Panel& p, const Matrix& common) {
    double ss = 0.0;
    long n = 0;
    for (Index i = 0; i < p.units(); ++i) {
      for (Index t = 0; t < p.periods(); ++t) {
        if (p.mask(t, i)) {
          const double d = p.values(t, i) - common(t, i);
          ss += d * d;
          ++n;
        }
      }
    }
    return n > 0 ? ss / static_cast<double>(n) : 0.0;
  };
  m.var_ey = residual_var(y, fit.common_y);
  m.var_ex = fit.common_x.size() > 0 ? residual_var(x, fit.common_x) : 0.0;
  return m;
}

}  // namespace tpca
