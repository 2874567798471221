#include <doctest.h>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <cmath>

#include "qpyramid/special.hpp"

using namespace qpyramid::special;

TEST_CASE("log_gamma matches std::lgamma") {
  for (double x : {0.01, 0.5, 1.0, 2.5, 10.0, 171.3, 1e5}) {
    CHECK(log_gamma(x) == doctest::Approx(std::lgamma(x)).epsilon(1e-14));
  }
  CHECK(log_factorial(0) == 0.0);
  CHECK(log_factorial(4) == doctest::Approx(std::log(24.0)).epsilon(1e-14));
  CHECK(log_beta(2.0, 3.0) == doctest::Approx(std::log(1.0 / 12.0)).epsilon(1e-14));
}

TEST_CASE("incomplete beta agrees with boost ibeta across the parameter range") {
  const double as[] = {1e-4, 0.05, 0.5, 1.0, 2.5, 17.0, 250.0, 5000.0};
  const double xs[] = {1e-9, 0.01, 0.2, 0.5, 0.77, 0.999};
  for (double a : as) {
    for (double b : as) {
      for (double x : xs) {
        const double want = boost::math::ibeta(a, b, x);
        const double got = incomplete_beta(x, a, b);
        CHECK(std::abs(got - want) <= 1e-12 + 1e-10 * want);
      }
    }
  }
  CHECK(incomplete_beta(0.0, 2.0, 3.0) == 0.0);
  CHECK(incomplete_beta(1.0, 2.0, 3.0) == 1.0);
  CHECK(incomplete_beta(0.5, 7.0, 7.0) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("beta log density integrates the uniform case") {
  CHECK(beta_log_density(0.3, 1.0, 1.0) == doctest::Approx(0.0));
  CHECK(beta_log_density(0.5, 2.0, 2.0) == doctest::Approx(std::log(1.5)));
}

TEST_CASE("normal cdf and quantile are inverse and agree with boost") {
  const boost::math::normal n01;
  for (double p : {1e-12, 1e-8, 0.001, 0.02425, 0.1, 0.5, 0.7, 0.97575, 0.999, 1.0 - 1e-8}) {
    const double z = normal_quantile(p);
    CHECK(z == doctest::Approx(boost::math::quantile(n01, p)).epsilon(1e-12));
    CHECK(normal_cdf(z) == doctest::Approx(p).epsilon(1e-12));
  }
  CHECK(std::isinf(normal_quantile(0.0)));
  CHECK(std::isinf(normal_quantile(1.0)));
  CHECK(normal_cdf(0.0) == 0.5);
}
