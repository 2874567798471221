#include <doctest.h>

#include <cmath>
#include <vector>

#include "qpyramid/errors.hpp"
#include "qpyramid/quantile.hpp"
#include "qpyramid/rng.hpp"

using namespace qpyramid;

namespace {

PiecewiseQuantileFunction one_knot(double q1) { return PiecewiseQuantileFunction(DyadicQuantileVector(1, {q1})); }

DyadicQuantileVector random_q(int m, Rng& rng) {
  DyadicQuantileVector q(1, {rng.uniform(0.05, 0.95)});
  for (int l = 1; l < m; ++l) {
    std::vector<double> v(q.cells());
    for (auto& w : v) w = rng.uniform(0.05, 0.95);
    q = refine(q, v);
  }
  return q;
}

}  // namespace

TEST_CASE("construction enforces strict monotonicity") {
  CHECK_THROWS_AS(DyadicQuantileVector(1, {0.0}), DomainError);
  CHECK_THROWS_AS(DyadicQuantileVector(2, {0.2, 0.2, 0.5}), DomainError);
  CHECK_THROWS_AS(DyadicQuantileVector(2, {0.2, 0.5}), DomainError);
  CHECK_THROWS_AS(DyadicQuantileVector(2, {0.2, 0.2 + 1e-13, 0.5}), DomainError);
  CHECK_NOTHROW(DyadicQuantileVector(2, {0.2, 0.2 + 1e-11, 0.5}));
}

TEST_CASE("quantile_at examples") {
  const auto q = one_knot(0.3);
  CHECK(quantile_at(q, 0.5) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(quantile_at(q, 0.25) == doctest::Approx(0.15).epsilon(1e-15));
  CHECK(quantile_at(PiecewiseQuantileFunction(DyadicQuantileVector::identity(4)), 0.37) ==
        doctest::Approx(0.37).epsilon(1e-15));
  CHECK_THROWS_AS(quantile_at(q, 1.5), DomainError);
  CHECK_THROWS_AS(quantile_at(q, -0.1), DomainError);
}

TEST_CASE("cdf_at examples") {
  const auto q = one_knot(0.3);
  CHECK(cdf_at(q, 0.3) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(cdf_at(q, 0.15) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(cdf_at(PiecewiseQuantileFunction(DyadicQuantileVector::identity(3)), 0.9) == doctest::Approx(0.9));
}

TEST_CASE("density_at and quantile_density examples") {
  const auto q = one_knot(0.3);
  CHECK(density_at(q, 0.1) == doctest::Approx(1.0 / 0.6).epsilon(1e-14));
  CHECK(density_at(q, 0.8) == doctest::Approx(1.0 / 1.4).epsilon(1e-14));
  CHECK(density_at(PiecewiseQuantileFunction(DyadicQuantileVector::identity(5)), 0.123) == doctest::Approx(1.0));
  CHECK(quantile_density(q, 0.2) == doctest::Approx(0.6).epsilon(1e-14));
  CHECK(quantile_density(PiecewiseQuantileFunction(DyadicQuantileVector::identity(3)), 0.61) ==
        doctest::Approx(1.0));
}

TEST_CASE("quantile density on the first cell is 8 v^3 at level 3") {
  for (double v : {0.2, 0.5, 0.71}) {
    DyadicQuantileVector q(1, {v});
    q = refine(q, std::vector<double>{v, 0.5});
    q = refine(q, std::vector<double>{v, 0.5, 0.5, 0.5});
    CHECK(quantile_density(PiecewiseQuantileFunction(q), 0.06) == doctest::Approx(8.0 * v * v * v).epsilon(1e-12));
  }
}

TEST_CASE("quantile density on every level-3 cell equals the product of branch weights") {
  Rng rng(21);
  for (int rep = 0; rep < 50; ++rep) {
    const double v1 = rng.uniform();
    std::vector<double> v2{rng.uniform(), rng.uniform()};
    std::vector<double> v3{rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()};
    auto q = refine(refine(DyadicQuantileVector(1, {v1}), v2), v3);
    const PiecewiseQuantileFunction f(q);
    for (std::size_t cell = 0; cell < 8; ++cell) {
      const std::size_t b1 = cell >> 2;
      const std::size_t b2 = (cell >> 1) & 1;
      const std::size_t b3 = cell & 1;
      const double w1 = b1 == 0 ? v1 : 1.0 - v1;
      const double w2 = b2 == 0 ? v2[b1] : 1.0 - v2[b1];
      const double w3 = b3 == 0 ? v3[2 * b1 + b2] : 1.0 - v3[2 * b1 + b2];
      const double y = (static_cast<double>(cell) + 0.5) / 8.0;
      CHECK(quantile_density(f, y) == doctest::Approx(8.0 * w1 * w2 * w3).epsilon(1e-12));
    }
  }
}

TEST_CASE("refine examples and parent preservation") {
  const auto mid = refine(DyadicQuantileVector(1, {0.5}), std::vector<double>{0.5, 0.5});
  CHECK(mid == DyadicQuantileVector(2, {0.25, 0.5, 0.75}));
  const auto r = refine(DyadicQuantileVector(1, {0.3}), std::vector<double>{0.4, 0.2});
  CHECK(r.values()[0] == doctest::Approx(0.12).epsilon(1e-15));
  CHECK(r.values()[1] == 0.3);
  CHECK(r.values()[2] == doctest::Approx(0.44).epsilon(1e-15));
  CHECK_THROWS_AS(refine(DyadicQuantileVector(1, {0.3}), std::vector<double>{0.0, 0.2}), DomainError);
  CHECK_THROWS_AS(refine(DyadicQuantileVector(1, {0.3}), std::vector<double>{0.5}), DomainError);

  DyadicQuantileVector q(1, {0.5});
  for (int m = 2; m <= 8; ++m) {
    q = refine(q, std::vector<double>(q.cells(), 0.5));
    CHECK(q == DyadicQuantileVector::identity(m));
  }

  Rng rng(2);
  for (int rep = 0; rep < 20; ++rep) {
    const auto parent = random_q(5, rng);
    std::vector<double> v(parent.cells());
    for (auto& w : v) w = rng.uniform();
    const auto child = refine(parent, v);
    for (std::size_t j = 1; j < parent.cells(); ++j) CHECK(child.knot(2 * j) == parent.knot(j));
  }
}

TEST_CASE("max_increment examples") {
  CHECK(max_increment(DyadicQuantileVector::identity(6)) == doctest::Approx(1.0 / 64.0));
  CHECK(max_increment(DyadicQuantileVector(1, {0.3})) == doctest::Approx(0.7));
  CHECK(max_increment(DyadicQuantileVector(2, {0.12, 0.3, 0.44})) == doctest::Approx(0.56));
}

TEST_CASE("round trips and normalisation on random quantile functions") {
  Rng rng(9);
  for (int rep = 0; rep < 100; ++rep) {
    const auto q = random_q(1 + rep % 7, rng);
    const PiecewiseQuantileFunction f(q);
    for (int i = 0; i <= 50; ++i) {
      const double y = i / 50.0;
      CHECK(std::abs(cdf_at(f, quantile_at(f, y)) - y) <= 1e-12);
    }
    double integral = 0.0;
    for (std::size_t j = 1; j <= q.cells(); ++j) {
      const double mid = 0.5 * (q.knot(j - 1) + q.knot(j));
      integral += density_at(f, mid) * q.gap(j);
      const double y = (static_cast<double>(j) - 0.5) / static_cast<double>(q.cells());
      CHECK(std::abs(quantile_density(f, y) * density_at(f, quantile_at(f, y)) - 1.0) <= 1e-12);
    }
    CHECK(integral == doctest::Approx(1.0).epsilon(1e-13));
  }
}

TEST_CASE("cell convention is right-closed with zero in the first cell") {
  const PiecewiseQuantileFunction f(DyadicQuantileVector(2, {0.25, 0.5, 0.75}));
  CHECK(f.cell_of_value(0.0) == 1);
  CHECK(f.cell_of_value(0.25) == 1);
  CHECK(f.cell_of_value(0.2500001) == 2);
  CHECK(f.cell_of_value(1.0) == 4);
  // Dyadic y on a boundary belongs to the left cell.
  const PiecewiseQuantileFunction g(DyadicQuantileVector(1, {0.3}));
  CHECK(quantile_density(g, 0.5) == doctest::Approx(0.6));
}

TEST_CASE("unit affine map pads the data range") {
  const auto map = UnitAffineMap::padded(12.0, 20.0);
  CHECK(map.to_unit(12.0) > 0.0);
  CHECK(map.to_unit(20.0) < 1.0);
  CHECK(map.to_raw(map.to_unit(15.5)) == doctest::Approx(15.5));
  CHECK_THROWS_AS(UnitAffineMap(1.0, 1.0), DomainError);
}

TEST_CASE("pyramid bookkeeping") {
  using namespace pyramid;
  CHECK(node_level(4, 3) == 1);
  CHECK(node_level(2, 3) == 2);
  CHECK(node_level(6, 3) == 2);
  CHECK(node_level(1, 3) == 3);
  CHECK(parent_offset(4) == 4);
  CHECK(parent_offset(6) == 2);
  CHECK(parent_offset(5) == 1);
  CHECK(creation_order(2) == std::vector<std::size_t>{2, 1, 3});
  CHECK(dependent_nodes(4, 3) == std::vector<std::size_t>{4, 2, 6, 3, 5});
  CHECK(dependent_nodes(1, 3) == std::vector<std::size_t>{1});
}
