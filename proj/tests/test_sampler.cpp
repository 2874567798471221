#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "qpyramid/errors.hpp"
#include "qpyramid/parallel.hpp"
#include "qpyramid/sampler.hpp"

using namespace qpyramid;

namespace {

const Dataset kFour({0.1, 0.2, 0.35, 0.9});

Dataset squared_data(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> x(n);
  for (auto& v : x) {
    const double u = rng.uniform();
    v = u * u;
  }
  return Dataset(x);
}

double normal_log_density(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * M_PI);
}

}  // namespace

TEST_CASE("acceptance ratio examples") {
  const auto spec = PriorSpec::uniform(1);
  const DyadicQuantileVector q(1, {0.3});
  const ChainState interp(kFour, spec, LikelihoodKind::Interp, q);
  CHECK(std::exp(interp.log_ratio(1, 0.5)) == doctest::Approx(0.3 * 0.3 * 0.7 * 0.7 / std::pow(0.5, 4)));
  CHECK(std::exp(interp.log_ratio(1, 0.5)) == doctest::Approx(0.7056));
  const ChainState sub(kFour, spec, LikelihoodKind::Substitute, q);
  CHECK(std::exp(sub.log_ratio(1, 0.5)) == doctest::Approx(2.0 / 3.0));
  CHECK(interp.log_ratio(1, 0.3) == 0.0);
  CHECK(sub.log_ratio(1, 0.3) == 0.0);
}

TEST_CASE("acceptance ratio is antisymmetric in log space") {
  Rng rng(31);
  const auto data = squared_data(40, 5);
  for (const char* prior : {"uniform", "beta:c=2.5", "md:c=1", "md-adaptive:b=0.5", "beta:c=1,center=ysquared"}) {
    const auto spec = PriorSpec::parse(prior, 3);
    for (auto kind : {LikelihoodKind::Interp, LikelihoodKind::Substitute}) {
      for (int rep = 0; rep < 30; ++rep) {
        const auto q = sample_prior(spec, rng);
        const ChainState a(data, spec, kind, q);
        const std::size_t j = 1 + rng.next_u64() % 7;
        const double prop = rng.uniform(q.knot(j - 1), q.knot(j + 1));
        std::vector<double> moved(q.values().begin(), q.values().end());
        moved[j - 1] = prop;
        const ChainState b(data, spec, kind, DyadicQuantileVector(3, moved));
        const double forward = a.log_ratio(j, prop);
        CHECK_FALSE(std::isnan(forward));
        // Very concentrated median-Dirichlet nodes underflow to a certain rejection.
        if (!std::isfinite(forward)) {
          CHECK(forward < 0.0);
          continue;
        }
        CHECK(std::abs(forward + b.log_ratio(j, q.knot(j))) <= 1e-10);
        const double direct = (log_prior_density(spec, DyadicQuantileVector(3, moved)) + log_lik(data, DyadicQuantileVector(3, moved), kind)) -
                              (log_prior_density(spec, q) + log_lik(data, q, kind));
        if (!spec.transforms_knots()) CHECK(a.log_ratio(j, prop) == doctest::Approx(direct).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("mh_sweep keeps monotone states") {
  Rng rng(3);
  const auto data = squared_data(60, 2);
  const auto spec = PriorSpec::parse("beta:c=1", 4);
  auto q = empirical_start(data, 4);
  std::size_t accepted = 0;
  for (int i = 0; i < 200; ++i) {
    auto r = mh_sweep(q, data, spec, LikelihoodKind::Interp, rng);
    q = r.q;
    accepted += r.accepted;
  }
  CHECK(accepted > 0);
  CHECK_NOTHROW(validate_knots(q.values()));
}

TEST_CASE("empirical start nudges ties apart") {
  const Dataset tied({0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.9});
  const auto q = empirical_start(tied, 2);
  CHECK_NOTHROW(validate_knots(q.values()));
  CHECK(q.values()[0] == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("chain configuration contracts") {
  ChainConfig cfg;
  cfg.iterations = 100;
  cfg.burn_in = 100;
  const auto spec = PriorSpec::uniform(2);
  CHECK(run_chain(cfg, squared_data(20, 1), spec).empty());
  cfg.burn_in = 200;
  CHECK_THROWS_AS(run_chain(cfg, squared_data(20, 1), spec), ConfigError);
  cfg.burn_in = 10;
  cfg.thin = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.thin = 1;
  CHECK_THROWS_AS(run_chain(cfg, Dataset(), spec), ConfigError);
  cfg.init = InitMode::PriorDraw;
  CHECK_NOTHROW(run_chain(cfg, Dataset(), spec));
}

TEST_CASE("chains are deterministic and traces stay in sync") {
  const auto data = squared_data(100, 7);
  const auto spec = PriorSpec::parse("beta:c=2.5", 5);
  ChainConfig cfg;
  cfg.iterations = 600;
  cfg.thin = 3;
  cfg.recheck_every = 50;
  for (auto kind : {LikelihoodKind::Interp, LikelihoodKind::Substitute}) {
    cfg.kind = kind;
    const auto a = run_chain(cfg, data, spec);
    const auto b = run_chain(cfg, data, spec);
    REQUIRE(a.size() == b.size());
    CHECK(a.size() == 180);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a.rows[i].q == b.rows[i].q);
      CHECK(a.rows[i].log_lik == b.rows[i].log_lik);
      CHECK_NOTHROW(validate_knots(a.rows[i].q.values()));
      CHECK(a.rows[i].log_prior == doctest::Approx(log_prior_density(spec, a.rows[i].q)).epsilon(1e-9));
      CHECK(a.rows[i].log_lik == doctest::Approx(log_lik(data, a.rows[i].q, kind)).epsilon(1e-9));
    }
    CHECK(a.max_trace_drift <= 1e-8);
  }
}

TEST_CASE("parallel chains equal the serial reference") {
  const auto data = squared_data(80, 4);
  const auto spec = PriorSpec::parse("md:c=1", 3);
  ChainConfig cfg;
  cfg.iterations = 300;
  cfg.seed = 42;
  const auto par = run_chains(cfg, data, spec, 4);
  const auto ser = run_chains_serial(cfg, data, spec, 4);
  REQUIRE(par.size() == 4);
  for (std::size_t c = 0; c < 4; ++c) {
    CHECK(par[c].chain == c);
    REQUIRE(par[c].size() == ser[c].size());
    for (std::size_t i = 0; i < par[c].size(); ++i) CHECK(par[c].rows[i].q == ser[c].rows[i].q);
  }
  CHECK_FALSE(par[0].rows.back().q == par[1].rows.back().q);
  parallel::set_worker_cap(1);
  const auto capped = run_chains(cfg, data, spec, 4);
  parallel::set_worker_cap(0);
  for (std::size_t c = 0; c < 4; ++c) CHECK(capped[c].rows.back().q == ser[c].rows.back().q);
}

TEST_CASE("transform-centred chains report Q on the centred scale") {
  const auto data = squared_data(50, 8);
  const auto spec = PriorSpec::parse("uniform:center=ysquared,mode=transform", 3);
  ChainConfig cfg;
  cfg.iterations = 200;
  cfg.kind = LikelihoodKind::Interp;
  const auto run = run_chain(cfg, data, spec);
  for (const auto& d : run.rows) CHECK_NOTHROW(validate_knots(d.q.values()));
  CHECK(run.max_trace_drift <= 1e-8);
}

TEST_CASE("semiparametric chain: zero steps freeze the location and scale") {
  Rng rng(5);
  std::vector<double> x(100);
  for (auto& v : x) v = 3.0 + 2.0 * rng.normal();
  SemiparamConfig semi;
  semi.mu_step = 0.0;
  semi.log_sigma_step = 0.0;
  ChainConfig cfg;
  cfg.iterations = 100;
  const auto run = run_chain_semiparam(cfg, x, PriorSpec::uniform(2), semi);
  for (const auto& d : run.rows) {
    CHECK(d.mu == run.rows.front().mu);
    CHECK(d.sigma == run.rows.front().sigma);
  }
}

TEST_CASE("semiparametric chain with frozen quantiles matches a direct parametric sampler") {
  Rng data_rng(6);
  std::vector<double> x(80);
  for (auto& v : x) v = -1.0 + 0.5 * data_rng.normal();
  std::vector<double> sorted(x);
  std::sort(sorted.begin(), sorted.end());
  SemiparamConfig semi;
  semi.freeze_quantiles = true;
  semi.mu_start = 0.0;
  semi.sigma_start = 1.0;
  semi.mu_step = 0.2;
  semi.log_sigma_step = 0.2;
  ChainConfig cfg;
  cfg.iterations = 400;
  cfg.burn_in = 0;
  cfg.seed = 77;
  const auto spec = PriorSpec::uniform(3);
  const auto run = run_chain_semiparam(cfg, x, spec, semi);

  const auto id = DyadicQuantileVector::identity(3);
  auto target = [&](double mu, double log_s) {
    return log_lik_semiparam(mu, std::exp(log_s), id, sorted) +
           normal_log_density(mu, semi.mu_prior_mean, semi.mu_prior_sd) +
           normal_log_density(log_s, semi.log_sigma_prior_mean, semi.log_sigma_prior_sd);
  };
  Rng rng = Rng::stream(cfg.seed, cfg.chain);
  double mu = 0.0;
  double log_s = 0.0;
  REQUIRE(run.size() == 400);
  for (std::size_t s = 0; s < 400; ++s) {
    const double pm = mu + semi.mu_step * rng.normal();
    if (std::log(rng.uniform()) < target(pm, log_s) - target(mu, log_s)) mu = pm;
    const double ps = log_s + semi.log_sigma_step * rng.normal();
    if (std::log(rng.uniform()) < target(mu, ps) - target(mu, log_s)) log_s = ps;
    CHECK(run.rows[s].mu == doctest::Approx(mu).epsilon(1e-12));
    CHECK(run.rows[s].sigma == doctest::Approx(std::exp(log_s)).epsilon(1e-12));
  }
}

TEST_CASE("semiparametric posterior locates a normal sample") {
  Rng rng(10);
  const double mu0 = 2.0;
  std::vector<double> x(500);
  for (auto& v : x) v = mu0 + 1.5 * rng.normal();
  ChainConfig cfg;
  cfg.iterations = 4000;
  SemiparamConfig semi;
  semi.mu_step = 0.1;
  // Location is identified only through a tight pyramid around the normal shape.
  const auto run = run_chain_semiparam(cfg, x, PriorSpec::parse("beta:c=50", 3), semi);
  double m = 0.0;
  double m2 = 0.0;
  for (const auto& d : run.rows) {
    m += d.mu;
    m2 += d.mu * d.mu;
  }
  m /= static_cast<double>(run.size());
  const double sd = std::sqrt(std::max(m2 / static_cast<double>(run.size()) - m * m, 1e-12));
  CHECK(std::abs(m - mu0) <= 3.0 * sd);
}
