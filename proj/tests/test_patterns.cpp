#include <doctest.h>

#include <cmath>

#include "tpca/patterns.hpp"
#include "tpca/rng.hpp"

using namespace tpca;

TEST_CASE("mask kind names round-trip") {
  using K = MaskSpec::Kind;
  for (K k : {K::MAR, K::Block, K::Staggered, K::LowFrequency,
              K::MixedFrequency, K::Censoring, K::LoadingDependent,
              K::FullyObserved})
    CHECK(mask_kind_from_string(to_string(k)) == k);
  CHECK_THROWS_AS(mask_kind_from_string("sometimes"), InvalidArgument);
}

TEST_CASE("seeded masks are reproducible and seed-sensitive") {
  const MaskSpec spec = MaskSpec::mar(0.5, 12);
  const Mask a = generate_mask(spec, 40, 30);
  const Mask b = generate_mask(spec, 40, 30);
  CHECK((a == b).all());
  const Mask c = generate_mask(MaskSpec::mar(0.5, 13), 40, 30);
  CHECK_FALSE((a == c).all());
}

TEST_CASE("MAR mask hits the target observation fraction") {
  const Mask m = generate_mask(MaskSpec::mar(0.3, 5), 400, 200);
  const double frac =
      static_cast<double>(m.count()) / static_cast<double>(m.size());
  CHECK(frac == doctest::Approx(0.3).epsilon(0.02));
}

TEST_CASE("block mask removes whole unit tails starting halfway") {
  const double p = 0.6;
  const Index T = 100, N = 50;
  const Mask m = generate_mask(MaskSpec::block(p, 3), T, N);
  // first half fully observed
  for (Index t = 0; t < 50; ++t)
    for (Index i = 0; i < N; ++i) CHECK(m(t, i));
  // floor(2 (1-p) N) units dark for the whole second half
  Index dark = 0;
  for (Index i = 0; i < N; ++i) {
    bool all_missing = true, all_observed = true;
    for (Index t = 50; t < T; ++t) {
      if (m(t, i)) all_missing = false;
      else all_observed = false;
    }
    CHECK((all_missing || all_observed));
    if (all_missing) ++dark;
  }
  CHECK(dark == static_cast<Index>(std::floor(2.0 * (1.0 - p) * N)));
}

TEST_CASE("staggered missingness is monotone in time per unit") {
  const Mask m = generate_mask(MaskSpec::staggered(0.25, 7), 60, 40);
  for (Index i = 0; i < 40; ++i)
    for (Index t = 1; t < 60; ++t)
      if (!m(t - 1, i)) CHECK_FALSE(m(t, i));  // once missing, stays missing
  // before t/T reaches c nothing has dropped out yet
  for (Index i = 0; i < 40; ++i)
    for (Index t = 0; t <= 15; ++t) CHECK(m(t, i));
  // at the last period floor((59/60 - 0.25) * 40) = 29 units have dropped out
  Index missing_last = 0;
  for (Index i = 0; i < 40; ++i)
    if (!m(59, i)) ++missing_last;
  CHECK(missing_last == 29);
}

TEST_CASE("low-frequency mask keeps every m-th row") {
  const Mask m = generate_mask(MaskSpec::low_frequency(2), 10, 4);
  for (Index t = 0; t < 10; ++t)
    for (Index i = 0; i < 4; ++i) CHECK(m(t, i) == (t % 2 == 0));
  const Mask shifted = generate_mask(MaskSpec::low_frequency(3, 1), 9, 2);
  for (Index t = 0; t < 9; ++t) CHECK(shifted(t, 0) == (t % 3 == 1));
}

TEST_CASE("mixed-frequency mask splits units by sampling period") {
  const Mask m = generate_mask(MaskSpec::mixed_frequency(1, 3), 12, 6);
  for (Index t = 0; t < 12; ++t) {
    for (Index i = 0; i < 3; ++i) CHECK(m(t, i));
    for (Index i = 3; i < 6; ++i) CHECK(m(t, i) == (t % 3 == 0));
  }
}

TEST_CASE("censoring keeps roughly the in-band share of standard normals") {
  CounterRng rng(17);
  Matrix v(300, 100);
  for (Index i = 0; i < 100; ++i)
    for (Index t = 0; t < 300; ++t) v(t, i) = rng.normal();
  MaskContext ctx;
  ctx.values = &v;
  const Mask m = generate_mask(MaskSpec::censoring(0.6), 300, 100, ctx);
  const double frac =
      static_cast<double>(m.count()) / static_cast<double>(m.size());
  // P(|N(0,1)| <= 0.6) ~= 0.4515
  CHECK(frac == doctest::Approx(0.4515).epsilon(0.03));
  for (Index i = 0; i < 100; ++i)
    for (Index t = 0; t < 300; ++t)
      CHECK(m(t, i) == (std::abs(v(t, i)) <= 0.6));
  CHECK_THROWS_AS(generate_mask(MaskSpec::censoring(0.6), 300, 100),
                  InvalidArgument);
}

TEST_CASE("loading-dependent mask thins only high-loading units") {
  Matrix loadings(4, 2);
  loadings << 1.0, 0.05, 1.0, 0.5, 1.0, -0.4, 1.0, 0.0;
  MaskContext ctx;
  ctx.loadings = &loadings;
  const Mask m =
      generate_mask(MaskSpec::loading_dependent(0.1, 0.3, 9), 200, 4, ctx);
  // units 0 and 3 are below the threshold and stay fully observed
  for (Index t = 0; t < 200; ++t) {
    CHECK(m(t, 0));
    CHECK(m(t, 3));
  }
  for (Index i : {Index(1), Index(2)}) {
    const double frac =
        static_cast<double>(m.col(i).count()) / 200.0;
    CHECK(frac == doctest::Approx(0.3).epsilon(0.35));
  }
  CHECK_THROWS_AS(
      generate_mask(MaskSpec::loading_dependent(0.1, 0.3, 9), 200, 4),
      InvalidArgument);
}

TEST_CASE("apply_mask records held-out cells with their true values") {
  Matrix v(3, 2);
  v << 1, 2, 3, 4, 5, 6;
  Mask base = Mask::Constant(3, 2, true);
  base(2, 1) = false;  // already missing, must not be held out again
  Panel p(v, base);
  p.values(2, 1) = 0.0;

  Mask hide = Mask::Constant(3, 2, true);
  hide(0, 0) = false;
  hide(2, 1) = false;
  const MaskedPanel mp = apply_mask(p, hide);
  REQUIRE(mp.held_out.size() == 1);
  CHECK(mp.held_out[0].t == 0);
  CHECK(mp.held_out[0].i == 0);
  CHECK(mp.held_out[0].truth == 1.0);
  CHECK_FALSE(mp.panel.mask(0, 0));
  CHECK(mp.panel.values(0, 0) == 0.0);
  CHECK(mp.panel.values(1, 1) == 4.0);
}
