#include <doctest.h>

#include <cmath>
#include <vector>

#include "qpyramid/errors.hpp"
#include "qpyramid/priors.hpp"
#include "qpyramid/summaries.hpp"

using namespace qpyramid;

namespace {

// Dyadic approximation of Q(y) = y^2.
DyadicQuantileVector squared_knots(int m) {
  const std::size_t k = std::size_t{1} << m;
  std::vector<double> v(k - 1);
  for (std::size_t j = 1; j < k; ++j) {
    const double y = static_cast<double>(j) / static_cast<double>(k);
    v[j - 1] = y * y;
  }
  return DyadicQuantileVector(m, v);
}

std::vector<DyadicQuantileVector> prior_draws(const char* prior, int m, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  const auto spec = PriorSpec::parse(prior, m);
  std::vector<DyadicQuantileVector> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(sample_prior(spec, rng));
  return out;
}

}  // namespace

TEST_CASE("posterior summary of one draw has a zero-width band") {
  const DyadicQuantileVector q(2, {0.1, 0.3, 0.8});
  const std::vector<DyadicQuantileVector> draws{q};
  const auto grid = default_grid(33);
  const auto s = posterior_summary(draws, grid, 0.1);
  const PiecewiseQuantileFunction f(q);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(s.mean[i] == doctest::Approx(quantile_at(f, grid[i])));
    CHECK(s.lower[i] == s.upper[i]);
  }
  CHECK_THROWS_AS(posterior_summary(std::vector<DyadicQuantileVector>{}, grid, 0.1), DomainError);
}

TEST_CASE("identical draws give zero band width") {
  const std::vector<DyadicQuantileVector> draws(10, DyadicQuantileVector(1, {0.3}));
  const auto s = posterior_summary(draws, default_grid(50), 0.05);
  for (std::size_t i = 0; i < s.grid.size(); ++i) CHECK(s.upper[i] - s.lower[i] == 0.0);
}

TEST_CASE("prior mean curve of a symmetric pyramid is the identity") {
  const auto draws = prior_draws("beta:c=1", 4, 2000, 3);
  const auto grid = default_grid(31);
  const auto s = posterior_summary(draws, grid, 0.05);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double ss = 0.0;
    for (const auto& d : draws) {
      const double v = quantile_at(PiecewiseQuantileFunction(d), grid[i]) - s.mean[i];
      ss += v * v;
    }
    const double se = std::sqrt(ss / 1999.0 / 2000.0);
    CHECK(std::abs(s.mean[i] - grid[i]) <= 3.0 * se);
  }
}

TEST_CASE("parallel summary kernel equals the serial one") {
  const auto draws = prior_draws("md:c=1", 5, 300, 8);
  const auto grid = default_grid(257);
  const auto a = posterior_summary(draws, grid, 0.05);
  const auto b = posterior_summary_serial(draws, grid, 0.05);
  CHECK(a.mean == b.mean);
  CHECK(a.median == b.median);
  CHECK(a.lower == b.lower);
  CHECK(a.upper == b.upper);
}

TEST_CASE("Lorenz curve examples") {
  const PiecewiseQuantileFunction id(DyadicQuantileVector::identity(3));
  CHECK(lorenz(id, 0.5) == doctest::Approx(0.25));
  CHECK(lorenz(id, 1.0) == doctest::Approx(1.0));
  CHECK(lorenz(id, 0.0) == 0.0);
  const PiecewiseQuantileFunction sq(squared_knots(10));
  CHECK(lorenz(sq, 0.5) == doctest::Approx(0.125).epsilon(1e-5));
  CHECK_THROWS_AS(lorenz(id, 1.1), DomainError);
}

TEST_CASE("Lorenz curves are convex and below the diagonal") {
  const auto draws = prior_draws("beta-const:a=2", 5, 100, 4);
  const auto grid = default_grid(512);
  for (const auto& d : draws) {
    const PiecewiseQuantileFunction f(d);
    std::vector<double> l(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      l[i] = lorenz(f, grid[i]);
      CHECK(l[i] <= grid[i] + 1e-12);
    }
    for (std::size_t i = 2; i < grid.size(); ++i) CHECK(l[i] - l[i - 1] >= l[i - 1] - l[i - 2] - 1e-12);
  }
}

TEST_CASE("Lorenz area matches a fine Riemann sum") {
  const auto draws = prior_draws("uniform", 3, 20, 5);
  for (const auto& d : draws) {
    const PiecewiseQuantileFunction f(d);
    const int n = 20000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += lorenz(f, (i + 0.5) / n) / n;
    CHECK(lorenz_area(f) == doctest::Approx(sum).epsilon(1e-7));
  }
}

TEST_CASE("Gini pair") {
  const PiecewiseQuantileFunction id(DyadicQuantileVector::identity(6));
  const auto g = gini(id);
  CHECK(std::abs(g.standard - 1.0 / 3.0) <= 1e-12);
  CHECK(std::abs(g.literal - 4.0 / 3.0) <= 1e-12);
  // Almost all mass near the top: extreme inequality.
  std::vector<double> v(7);
  for (std::size_t j = 0; j < 7; ++j) v[j] = 1e-9 * static_cast<double>(j + 1);
  CHECK(gini(PiecewiseQuantileFunction(DyadicQuantileVector(3, v))).standard > 0.85);
  // Near-flat Q: almost perfect equality.
  std::vector<double> flat(7);
  for (std::size_t j = 0; j < 7; ++j) flat[j] = 0.999 + 1e-5 * static_cast<double>(j);
  CHECK(gini(PiecewiseQuantileFunction(DyadicQuantileVector(3, flat))).standard < 0.07);
  for (const auto& d : prior_draws("uniform", 4, 200, 6)) {
    const auto p = gini(PiecewiseQuantileFunction(d));
    CHECK(std::abs((p.literal - p.standard) - 1.0) <= 1e-14);
    CHECK(p.standard >= 0.0);
    CHECK(p.standard < 1.0);
  }
}

TEST_CASE("Doksum shift") {
  const auto grid = default_grid(19);
  const auto draws = prior_draws("beta:c=1", 3, 40, 9);
  const auto same = doksum_shift(draws, draws, grid, 0.05);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(std::abs(same.mean[i]) <= 1e-12);
    CHECK(std::abs(same.upper[i]) <= 1e-12);
  }
  const std::vector<DyadicQuantileVector> id{DyadicQuantileVector::identity(4)};
  const std::vector<DyadicQuantileVector> sq{squared_knots(4)};
  const std::vector<double> half{0.5};
  CHECK(doksum_shift(id, sq, half, 0.05).mean[0] == doctest::Approx(-0.25));
  // Location shift by c inside the interior.
  const double c = 0.05;
  std::vector<double> shifted(15);
  for (std::size_t j = 0; j < 15; ++j) shifted[j] = (static_cast<double>(j) + 1.0) / 16.0 * 0.8 + c;
  std::vector<double> base(15);
  for (std::size_t j = 0; j < 15; ++j) base[j] = (static_cast<double>(j) + 1.0) / 16.0 * 0.8;
  const std::vector<DyadicQuantileVector> q1{DyadicQuantileVector(4, base)};
  const std::vector<DyadicQuantileVector> q2{DyadicQuantileVector(4, shifted)};
  for (double x : {0.1, 0.3, 0.6}) {
    CHECK(doksum_shift(q1, q2, std::vector<double>{x}, 0.05).mean[0] == doctest::Approx(c).epsilon(1e-12));
  }
  CHECK_THROWS_AS(doksum_shift(std::vector<DyadicQuantileVector>{}, id, half, 0.05), DomainError);
}

TEST_CASE("Parzen comparison") {
  const auto grid = default_grid(99);
  const auto draws = prior_draws("uniform", 3, 30, 10);
  const auto same = parzen_comparison(draws, draws, grid, 0.05);
  for (std::size_t i = 0; i < grid.size(); ++i) CHECK(same.mean[i] == doctest::Approx(grid[i]).epsilon(1e-12));
  const std::vector<DyadicQuantileVector> id{DyadicQuantileVector::identity(3)};
  CHECK(parzen_comparison(id, id, std::vector<double>{0.3}, 0.05).mean[0] == doctest::Approx(0.3));
  const std::vector<DyadicQuantileVector> sq{squared_knots(8)};
  CHECK(parzen_comparison(id, sq, std::vector<double>{0.25}, 0.05).mean[0] == doctest::Approx(0.5).epsilon(1e-3));
  // Monotone in y for every pair.
  const auto other = prior_draws("uniform", 3, 30, 11);
  for (std::size_t d = 0; d < draws.size(); ++d) {
    const std::vector<DyadicQuantileVector> a{draws[d]};
    const std::vector<DyadicQuantileVector> b{other[d]};
    const auto p = parzen_comparison(a, b, grid, 0.05);
    for (std::size_t i = 1; i < grid.size(); ++i) CHECK(p.mean[i] >= p.mean[i - 1] - 1e-15);
  }
  // Unequal draw counts truncate to the shorter list.
  CHECK_NOTHROW(parzen_comparison(draws, id, grid, 0.05));
}
