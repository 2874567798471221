#include <doctest.h>

#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <numeric>
#include <vector>

#include "qpyramid/errors.hpp"
#include "qpyramid/priors.hpp"
#include "qpyramid/special.hpp"

using namespace qpyramid;

TEST_CASE("VLaw moments") {
  const auto u = VLaw::uniform();
  CHECK(u.mean() == 0.5);
  CHECK(u.second_moment() == doctest::Approx(1.0 / 3.0));
  CHECK(u.complement_second_moment() == doctest::Approx(1.0 / 3.0));
  const auto b = VLaw::symmetric_beta(4.0);  // Beta(2, 2)
  CHECK(b.second_moment() == doctest::Approx(0.3));
  CHECK(b.log_density(0.5) == doctest::Approx(std::log(1.5)));
  const auto asym = VLaw::beta(2.0, 6.0);
  CHECK(asym.mean() == doctest::Approx(0.25));
  CHECK(VLaw::point_mass(0.5).log_density(0.5) == 0.0);
  CHECK(std::isinf(VLaw::point_mass(0.5).log_density(0.4)));
  CHECK_THROWS(VLaw::symmetric_beta(0.0));
}

TEST_CASE("VLaw samples respect the weight clamp") {
  Rng rng(4);
  const auto tiny = VLaw::symmetric_beta(1e-3);
  for (int i = 0; i < 2000; ++i) {
    const double v = tiny.sample(rng);
    CHECK(v >= kWeightClamp);
    CHECK(v <= 1.0 - kWeightClamp);
  }
}

TEST_CASE("level schedules") {
  CHECK(LevelSchedule::cubic(2.5).at(6) == doctest::Approx(540.0));
  CHECK(LevelSchedule::constant(2.0).at(9) == 2.0);
  CHECK(LevelSchedule::table({1.0, 3.0}).at(2) == 3.0);
  CHECK_THROWS(LevelSchedule::table({1.0}).at(2));
}

TEST_CASE("sample_prior with V fixed at 1/2 gives the identity") {
  Rng rng(1);
  CHECK(sample_prior(PriorSpec::point_mass(3, 0.5), rng) == DyadicQuantileVector::identity(3));
}

TEST_CASE("log_prior_density examples") {
  const auto spec = PriorSpec::uniform(2);
  CHECK(log_prior_density(spec, DyadicQuantileVector(2, {0.2, 0.5, 0.9})) == doctest::Approx(std::log(4.0)));
  CHECK(log_prior_density(PriorSpec::uniform(1), DyadicQuantileVector(1, {0.37})) == doctest::Approx(0.0));
}

TEST_CASE("level-2 prior density integrates to one") {
  // Three-dimensional midpoint rule over 0 < q1 < q2 < q3 < 1 with q2 outermost.
  for (const auto& spec : {PriorSpec::uniform(2), PriorSpec::beta(2, LevelSchedule::constant(4.0))}) {
    const int n = 160;
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      const double q2 = (i + 0.5) / n;
      const double w2 = 1.0 / n;
      for (int a = 0; a < n; ++a) {
        const double q1 = q2 * (a + 0.5) / n;
        for (int b = 0; b < n; ++b) {
          const double q3 = q2 + (1.0 - q2) * (b + 0.5) / n;
          const double w = w2 * (q2 / n) * ((1.0 - q2) / n);
          total += w * std::exp(log_prior_density(spec, DyadicQuantileVector(2, {q1, q2, q3})));
        }
      }
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-4));
  }
}

TEST_CASE("centering means") {
  for (double m : centering_means(NullQuantile::identity(), 4)) CHECK(m == doctest::Approx(0.5));
  const auto sq = NullQuantile::y_squared();
  CHECK(centering_mean(sq, 1, 1) == doctest::Approx(0.25));
  CHECK(centering_mean(sq, 2, 3) == doctest::Approx(5.0 / 12.0));
  const NullQuantile bad("bad", [](double y) { return y < 0.5 ? y : 1.0 - y; });
  CHECK_THROWS_AS(centering_means(bad, 2), DomainError);
}

TEST_CASE("transform centering composes Q_null with Q_unif") {
  const auto sq = NullQuantile::y_squared();
  const PiecewiseQuantileFunction id(DyadicQuantileVector::identity(3));
  CHECK(transform_center(id, sq)(0.7) == doctest::Approx(0.49));
  const PiecewiseQuantileFunction q(DyadicQuantileVector(1, {0.3}));
  CHECK(transform_center(q, sq)(0.5) == doctest::Approx(0.09));
}

TEST_CASE("prior grammar") {
  CHECK(PriorSpec::parse("beta:c=2.5", 3).kind() == LawKind::Beta);
  CHECK(PriorSpec::parse("beta-const:a=2", 3).kind() == LawKind::Beta);
  CHECK(PriorSpec::parse("uniform", 3).kind() == LawKind::Uniform);
  CHECK(PriorSpec::parse("md:c=1", 3).kind() == LawKind::MedianDirichlet);
  CHECK(PriorSpec::parse("md-adaptive:b=1", 3).kind() == LawKind::MedianDirichletAdaptive);
  const auto centred = PriorSpec::parse("beta:c=2.5,center=ysquared", 3);
  CHECK(centred.center().has_value());
  CHECK_FALSE(centred.transforms_knots());
  CHECK(PriorSpec::parse("uniform:center=normal,mode=transform", 3).transforms_knots());
  CHECK_THROWS_AS(PriorSpec::parse("gamma:c=1", 3), ConfigError);
  CHECK_THROWS_AS(PriorSpec::parse("beta", 3), ConfigError);
  CHECK_THROWS_AS(PriorSpec::parse("beta:c=abc", 3), ConfigError);
  CHECK_THROWS_AS(PriorSpec::parse("uniform:center=ysquared", 3), ConfigError);
  CHECK_THROWS_AS(PriorSpec::parse("beta:c=1,center=/no/such/file", 3), ConfigError);
}

TEST_CASE("md-adaptive concentration scales with the parent gap") {
  const auto spec = PriorSpec::median_dirichlet_adaptive(3, 1.0);
  const auto wide = spec.law_for(4, 1.0);
  const auto narrow = spec.law_for(4, 0.25);
  CHECK(narrow.first() == doctest::Approx(4.0 * wide.first()));
}

TEST_CASE("median-Dirichlet cdf") {
  for (double a : {0.01, 0.5, 4.0, 100.0}) CHECK(md_cdf(a, 0.5) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(md_cdf(3.0, 0.0) == 0.0);
  CHECK(md_cdf(3.0, 1.0) == 1.0);
  // H_a(x) = I_{1/2}(a(1 - x), a x) via boost.
  for (double a : {0.5, 4.0, 30.0}) {
    for (double x : {0.1, 0.25, 0.6, 0.93}) {
      CHECK(md_cdf(a, x) == doctest::Approx(boost::math::ibeta(a * (1.0 - x), a * x, 0.5)).epsilon(1e-11));
    }
  }
  for (double a : {0.5, 2.0, 20.0}) {
    double last = 0.0;
    for (int i = 0; i <= 1000; ++i) {
      const double h = md_cdf(a, i / 1000.0);
      CHECK(h >= last - 1e-15);
      last = h;
    }
  }
  // Nearly the identity for tiny a.
  CHECK(md_cdf(1e-6, 0.3) == doctest::Approx(0.3).epsilon(1e-4));
}

TEST_CASE("median-Dirichlet density integrates to one and inverts") {
  for (double a : {0.7, 4.0, 25.0}) {
    const int n = 4000;
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += std::exp(md_log_density(a, (i + 0.5) / n)) / n;
    CHECK(total == doctest::Approx(1.0).epsilon(2e-3));
    for (double u : {0.01, 0.3, 0.5, 0.8}) CHECK(md_cdf(a, md_quantile(a, u)) == doctest::Approx(u).epsilon(1e-8));
  }
  CHECK(md_quantile(4.0, 0.5) == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("md samples: symmetric mean and variance tau2") {
  Rng rng(17);
  const int n = 50000;
  std::vector<double> x(n);
  for (auto& v : x) v = md_sample(10.0, rng);
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double ss = 0.0;
  double s4 = 0.0;
  for (double v : x) {
    ss += (v - mean) * (v - mean);
    s4 += std::pow(v - 0.5, 4);
  }
  const double var = ss / (n - 1);
  CHECK(std::abs(mean - 0.5) <= 3.0 * std::sqrt(var / n));
  const double var_se = std::sqrt((s4 / n - var * var) / n);
  CHECK(std::abs(var - tau2(10.0)) <= 3.0 * var_se);
}

TEST_CASE("xi closed form") {
  CHECK(xi(1.0) == doctest::Approx(0.75).epsilon(1e-13));
  CHECK(std::abs(xi(1.0) - 0.75) <= 1e-12);
  const double b = 50.0;
  CHECK(std::abs(xi(b) - (0.5 + 0.5 * std::sqrt(2.0 / M_PI) / std::sqrt(2.0 * b + 1.0))) <= 1e-3);
  for (double bb : {0.01, 0.3, 2.0, 1e4}) {
    CHECK(xi(bb) > 0.5);
    CHECK(xi(bb) < 1.0);
  }
  CHECK_THROWS_AS(xi(0.0), DomainError);
}

TEST_CASE("expected max quantile density") {
  CHECK(expected_max_qdensity(LevelSchedule::constant(2.0), 3) == doctest::Approx(3.375));
  CHECK(expected_max_qdensity(LevelSchedule::constant(2.0), 0) == 1.0);
  const auto cubic = LevelSchedule::cubic(2.5);
  double last_ratio = HUGE_VAL;
  for (int m = 2; m <= 20; ++m) {
    const double ratio = expected_max_qdensity(cubic, m) / expected_max_qdensity(cubic, m - 1);
    CHECK(ratio > 1.0);
    CHECK(ratio < last_ratio);
    last_ratio = ratio;
  }
  CHECK(last_ratio < 1.01);
  CHECK(std::isfinite(expected_max_qdensity(cubic, 20)));
}

TEST_CASE("tau2 and rho") {
  CHECK(std::abs(tau2(1e-4) - 1.0 / 12.0) <= 1e-3);
  double last = 0.0;
  for (double a : {0.01, 0.1, 1.0, 10.0, 100.0}) {
    const double r = md_rho(a);
    CHECK(r >= 1.0 / 3.0 - 1e-9);
    CHECK(r <= 1.0 + 1e-9);
    CHECK(r >= last);
    last = r;
  }
}

TEST_CASE("median-Dirichlet log density stays finite in the tails") {
  for (double a : {1.0, 27.0, 500.0}) {
    for (double x : {1e-6, 1e-3, 0.05, 0.2, 0.45}) {
      const double lo = md_log_density(a, x);
      CHECK(std::isfinite(lo));
      CHECK(lo == doctest::Approx(md_log_density(a, 1.0 - x)).epsilon(1e-9));
    }
  }
  // Agrees with a plain difference of the cdf where the cdf is representable.
  for (double a : {2.0, 27.0}) {
    for (double x : {0.1, 0.3, 0.5, 0.8}) {
      const double eps = 1e-6;
      const double fd = (md_cdf(a, x + eps) - md_cdf(a, x - eps)) / (2.0 * eps);
      CHECK(std::exp(md_log_density(a, x)) == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}
