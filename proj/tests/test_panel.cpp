#include <doctest.h>

#include <cmath>

#include "tpca/panel.hpp"

using namespace tpca;

TEST_CASE("concat with gamma=1 is plain columnwise concatenation") {
  Matrix xv(2, 2), yv(2, 1);
  xv << 1, 2, 3, 4;
  yv << 5, 6;
  const Panel x = Panel::fully_observed(xv);
  const Panel y = Panel::fully_observed(yv);
  const WeightedConcat z = concat_weighted(x, y, 1.0);
  CHECK(z.n_x == 2);
  CHECK(z.n_y == 1);
  CHECK(z.panel.values(0, 0) == 1.0);
  CHECK(z.panel.values(0, 2) == 5.0);
  CHECK(z.panel.values(1, 2) == 6.0);
}

TEST_CASE("concat scales the Y block by sqrt(gamma)") {
  Matrix xv(1, 1), yv(1, 1);
  xv << 1.0;
  yv << 2.0;
  const WeightedConcat z = concat_weighted(Panel::fully_observed(xv),
                                           Panel::fully_observed(yv), 4.0);
  CHECK(z.panel.values(0, 1) == 4.0);  // 2 * sqrt(4)
}

TEST_CASE("concat with gamma = N_x/N_y scales by sqrt of the ratio") {
  const Index n_x = 200, n_y = 50;
  Matrix xv = Matrix::Ones(3, n_x);
  Matrix yv = Matrix::Ones(3, n_y);
  const WeightedConcat z =
      concat_weighted(Panel::fully_observed(xv), Panel::fully_observed(yv),
                      static_cast<double>(n_x) / static_cast<double>(n_y));
  CHECK(z.panel.values(0, n_x) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("concat then slice recovers X exactly and Y bit-exactly") {
  Matrix xv(3, 2), yv(3, 2);
  xv << 0.1, -2.7, 3.14, 0.0, 1e-9, 7.5;
  yv << 1.25, -0.5, 2.0, 0.75, -3.5, 0.125;
  Mask ym = Mask::Constant(3, 2, true);
  ym(1, 0) = false;
  Panel y(yv, ym);
  y.values(1, 0) = 0.0;
  const double gamma = 2.25;  // sqrt is exact in binary
  const WeightedConcat z =
      concat_weighted(Panel::fully_observed(xv), y, gamma);
  CHECK((z.panel.values.leftCols(2) - xv).cwiseAbs().maxCoeff() == 0.0);
  const Matrix back = z.panel.values.rightCols(2) / std::sqrt(gamma);
  for (Index i = 0; i < 2; ++i)
    for (Index t = 0; t < 3; ++t)
      if (ym(t, i)) CHECK(back(t, i) == y.values(t, i));
  CHECK(z.panel.values(1, 2) == 0.0);
  CHECK_FALSE(z.panel.mask(1, 2));
}

TEST_CASE("concat rejects bad inputs") {
  const Panel a = Panel::fully_observed(Matrix::Ones(2, 1));
  const Panel b = Panel::fully_observed(Matrix::Ones(3, 1));
  CHECK_THROWS_AS(concat_weighted(a, b, 1.0), InvalidArgument);
  const Panel c = Panel::fully_observed(Matrix::Ones(2, 1));
  CHECK_THROWS_AS(concat_weighted(a, c, 0.0), InvalidArgument);
  CHECK_THROWS_AS(concat_weighted(a, c, -1.0), InvalidArgument);
  CHECK_THROWS_AS(
      concat_weighted(a, c, std::numeric_limits<double>::infinity()),
      InvalidArgument);
}

TEST_CASE("anchoring fills forward from a single early observation") {
  const Index T = 12;
  Panel y;
  y.values = Matrix::Zero(T, 1);
  y.mask = Mask::Constant(T, 1, false);
  y.values(0, 0) = 3.1;
  y.mask(0, 0) = true;
  const Panel filled = anchor_forward_fill(y);
  for (Index t = 0; t < T; ++t) {
    CHECK(filled.mask(t, 0));
    CHECK(filled.values(t, 0) == 3.1);
  }
}

TEST_CASE("anchoring leaves a fully observed panel unchanged") {
  Matrix v(3, 2);
  v << 1, 2, 3, 4, 5, 6;
  const Panel y = Panel::fully_observed(v);
  const Panel filled = anchor_forward_fill(y);
  CHECK((filled.values - v).cwiseAbs().maxCoeff() == 0.0);
  CHECK(filled.mask.all());
}

TEST_CASE("anchoring does not back-fill before the first observation") {
  const Index T = 8;
  Panel y;
  y.values = Matrix::Zero(T, 1);
  y.mask = Mask::Constant(T, 1, false);
  y.values(4, 0) = 1.5;
  y.mask(4, 0) = true;
  const Panel filled = anchor_forward_fill(y);
  for (Index t = 0; t < 4; ++t) CHECK_FALSE(filled.mask(t, 0));
  for (Index t = 4; t < T; ++t) {
    CHECK(filled.mask(t, 0));
    CHECK(filled.values(t, 0) == 1.5);
  }
}

TEST_CASE("anchoring is idempotent") {
  Panel y;
  y.values = Matrix::Zero(6, 3);
  y.mask = Mask::Constant(6, 3, false);
  y.values(1, 0) = 2.0;
  y.mask(1, 0) = true;
  y.values(0, 1) = -1.0;
  y.mask(0, 1) = true;
  y.values(3, 1) = 4.0;
  y.mask(3, 1) = true;
  y.values(5, 2) = 9.0;
  y.mask(5, 2) = true;
  const Panel once = anchor_forward_fill(y);
  const Panel twice = anchor_forward_fill(once);
  CHECK((twice.values - once.values).cwiseAbs().maxCoeff() == 0.0);
  CHECK((twice.mask == once.mask).all());
}

TEST_CASE("standardize uses the population divisor") {
  Matrix v(2, 1);
  v << 1.0, 3.0;
  const StandardizeResult r = standardize(Panel::fully_observed(v));
  CHECK(r.means(0) == doctest::Approx(2.0));
  CHECK(r.stds(0) == doctest::Approx(1.0));  // sqrt(((1)^2+(1)^2)/2)
  CHECK(r.panel.values(0, 0) == doctest::Approx(-1.0));
  CHECK(r.panel.values(1, 0) == doctest::Approx(1.0));
}

TEST_CASE("standardize rejects constant and under-observed units") {
  Matrix v(3, 1);
  v << 2.0, 2.0, 2.0;
  CHECK_THROWS_AS(standardize(Panel::fully_observed(v)), InvalidArgument);

  Panel p;
  p.values = Matrix::Zero(3, 1);
  p.mask = Mask::Constant(3, 1, false);
  p.values(0, 0) = 1.0;
  p.mask(0, 0) = true;
  CHECK_THROWS_AS(standardize(p), InvalidArgument);
}

TEST_CASE("standardize is idempotent on already standardized data") {
  Matrix v(4, 1);
  v << -1.5, -0.5, 0.5, 1.5;  // mean 0
  const double sd = std::sqrt(v.array().square().mean());
  v /= sd;
  const StandardizeResult r = standardize(Panel::fully_observed(v));
  CHECK(std::abs(r.means(0)) < 1e-12);
  CHECK(std::abs(r.stds(0) - 1.0) < 1e-12);
}

TEST_CASE("standardize round-trips through inverse_standardize") {
  Matrix v(5, 2);
  v << 1.2, -3.0, 0.7, 2.5, -1.1, 4.0, 2.2, -0.5, 0.3, 1.0;
  Mask m = Mask::Constant(5, 2, true);
  m(2, 1) = false;
  Panel p(v, m);
  p.values(2, 1) = 0.0;
  const StandardizeResult r = standardize(p);
  const Panel back = inverse_standardize(r.panel, r.means, r.stds);
  for (Index i = 0; i < 2; ++i)
    for (Index t = 0; t < 5; ++t)
      if (m(t, i))
        CHECK(back.values(t, i) == doctest::Approx(p.values(t, i)).epsilon(1e-10));
}

TEST_CASE("delta rate is min(N_y, T)") {
  CHECK(delta_rate(50, 200) == 50);
  CHECK(delta_rate(200, 50) == 50);
  CHECK(delta_rate(7, 7) == 7);
}

TEST_CASE("panel validates dimensions") {
  Matrix v(2, 2);
  v.setZero();
  Mask m = Mask::Constant(3, 2, true);
  CHECK_THROWS_AS(Panel(v, m), InvalidArgument);
}
