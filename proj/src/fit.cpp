#include "qpyramid/fit.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <numeric>

#include "qpyramid/errors.hpp"
#include "qpyramid/io.hpp"
#include "qpyramid/parallel.hpp"
#include "qpyramid/priors.hpp"
#include "qpyramid/sampler.hpp"
#include "qpyramid/special.hpp"
#include "qpyramid/summaries.hpp"

namespace qpyramid {

namespace fs = std::filesystem;

FitLikelihood parse_fit_likelihood(const std::string& text) {
  if (text == "interp") return FitLikelihood::Interp;
  if (text == "substitute") return FitLikelihood::Substitute;
  if (text == "semiparam") return FitLikelihood::Semiparam;
  throw ConfigError("unknown likelihood '" + text + "' (expected interp, substitute or semiparam)");
}

std::string to_string(FitLikelihood kind) {
  switch (kind) {
    case FitLikelihood::Interp: return "interp";
    case FitLikelihood::Substitute: return "substitute";
    case FitLikelihood::Semiparam: return "semiparam";
  }
  return "unknown";
}

void FitConfig::validate() const {
  if (data.empty()) throw ConfigError("--data is required");
  if (level < 1 || level > 16) throw ConfigError("--level must be in 1..16");
  if (chains < 1) throw ConfigError("--chains must be at least 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("--alpha must be in (0, 1)");
  if (grid_points < 1) throw ConfigError("--grid-points must be at least 1");
  if (bounds && !(bounds->second > bounds->first)) throw ConfigError("--bounds must satisfy lo < hi");
  ChainConfig chain;
  chain.iterations = iterations;
  chain.burn_in = burn_in;
  chain.thin = thin;
  chain.validate();
  PriorSpec::parse(prior, level);
}

nlohmann::json FitConfig::to_json() const {
  nlohmann::json j;
  j["data"] = data.string();
  j["bounds"] = bounds ? nlohmann::json::array({bounds->first, bounds->second}) : nlohmann::json(nullptr);
  j["level"] = level;
  j["prior"] = prior;
  j["likelihood"] = to_string(likelihood);
  j["iterations"] = iterations;
  j["burn_in"] = burn_in.value_or(iterations / 10);
  j["thin"] = thin;
  j["chains"] = chains;
  j["seed"] = seed;
  j["alpha"] = alpha;
  j["grid_points"] = grid_points;
  return j;
}

FitConfig FitConfig::from_json(const nlohmann::json& j) {
  try {
    FitConfig c;
    c.data = j.at("data").get<std::string>();
    if (j.contains("bounds") && !j.at("bounds").is_null()) {
      c.bounds = std::pair{j.at("bounds").at(0).get<double>(), j.at("bounds").at(1).get<double>()};
    }
    c.level = j.at("level").get<int>();
    c.prior = j.at("prior").get<std::string>();
    c.likelihood = parse_fit_likelihood(j.at("likelihood").get<std::string>());
    c.iterations = j.at("iterations").get<std::size_t>();
    c.burn_in = j.at("burn_in").get<std::size_t>();
    c.thin = j.at("thin").get<std::size_t>();
    c.chains = j.at("chains").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.alpha = j.at("alpha").get<double>();
    c.grid_points = j.at("grid_points").get<std::size_t>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("manifest config is incomplete: ") + e.what());
  }
}

void prepare_output_dir(const fs::path& out, bool force) {
  if (out.empty()) throw ConfigError("--out is required");
  if (fs::exists(out)) {
    if (!fs::is_directory(out)) throw ConfigError("'" + out.string() + "' exists and is not a directory");
    if (!fs::is_empty(out) && !force) {
      throw ConfigError("output directory '" + out.string() + "' is not empty; pass --force to overwrite");
    }
  } else {
    fs::create_directories(out);
  }
}

namespace {

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

nlohmann::json interval(std::vector<double> values, double alpha) {
  if (values.empty()) return nullptr;
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  std::sort(values.begin(), values.end());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = values.size() > 1 ? std::sqrt(ss / static_cast<double>(values.size() - 1)) : 0.0;
  return {{"mean", mean},
          {"sd", sd},
          {"median", sorted_quantile(values, 0.5)},
          {"lower", sorted_quantile(values, alpha / 2.0)},
          {"upper", sorted_quantile(values, 1.0 - alpha / 2.0)}};
}

std::vector<DrawMatrix> run_semiparam_chains(const ChainConfig& base, const io::Ingested& in, const PriorSpec& spec,
                                             std::size_t chains) {
  SemiparamConfig semi;
  const double n = static_cast<double>(in.raw.size());
  const double mean = std::accumulate(in.raw.begin(), in.raw.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : in.raw) ss += (x - mean) * (x - mean);
  const double sd = in.raw.size() > 1 && ss > 0.0 ? std::sqrt(ss / (n - 1.0)) : 1.0;
  semi.mu_prior_mean = mean;
  semi.mu_prior_sd = 100.0 * sd;
  semi.log_sigma_prior_mean = std::log(sd);
  semi.mu_step = 0.05 * sd;

  std::vector<DrawMatrix> out(chains);
  std::vector<std::exception_ptr> errors(chains);
#pragma omp parallel for schedule(dynamic, 1) num_threads(parallel::worker_count())
  for (std::size_t c = 0; c < chains; ++c) {
    try {
      ChainConfig cfg = base;
      cfg.chain = c;
      out[c] = run_chain_semiparam(cfg, in.raw, spec, semi);
    } catch (...) {
      errors[c] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace

FitOutcome run_fit(const FitConfig& config, const fs::path& out, bool force) {
  config.validate();
  const PriorSpec spec = PriorSpec::parse(config.prior, config.level);
  const auto in = io::ingest(config.data, config.bounds);
  prepare_output_dir(out, force);

  ChainConfig chain;
  chain.iterations = config.iterations;
  chain.burn_in = config.burn_in;
  chain.thin = config.thin;
  chain.seed = config.seed;

  const auto started = std::chrono::steady_clock::now();
  std::vector<DrawMatrix> runs;
  const bool semi = config.likelihood == FitLikelihood::Semiparam;
  if (semi) {
    runs = run_semiparam_chains(chain, in, spec, config.chains);
  } else {
    chain.kind = config.likelihood == FitLikelihood::Interp ? LikelihoodKind::Interp : LikelihoodKind::Substitute;
    runs = run_chains(chain, in.data, spec, config.chains);
  }
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  io::write_draws_csv(out / "draws.csv", runs);

  std::vector<DyadicQuantileVector> draws;
  std::vector<double> mus;
  std::vector<double> sigmas;
  std::size_t accepted = 0;
  std::size_t proposed = 0;
  for (const auto& r : runs) {
    accepted += r.total_accepted;
    proposed += r.total_proposed;
    for (const auto& d : r.rows) {
      draws.push_back(d.q);
      mus.push_back(d.mu);
      sigmas.push_back(d.sigma);
    }
  }
  const double acceptance = proposed > 0 ? static_cast<double>(accepted) / static_cast<double>(proposed) : 0.0;

  const auto grid = default_grid(config.grid_points);
  SummaryGrid summary;
  if (semi) {
    // Raw-scale quantile curves mu + sigma * Phi^{-1}(Q_unif(y)).
    std::vector<PiecewiseQuantileFunction> curves;
    curves.reserve(draws.size());
    for (const auto& d : draws) curves.emplace_back(d);
    summary = summarize_curves(
        draws.size(), grid,
        [&](std::size_t d, double y) {
          const double u = std::clamp(quantile_at(curves[d], y), kSemiparamClip, 1.0 - kSemiparamClip);
          return mus[d] + sigmas[d] * special::normal_quantile(u);
        },
        config.alpha);
  } else {
    summary = posterior_summary(draws, grid, config.alpha);
  }
  io::write_grid_csv(out / "grid.csv", summary);

  nlohmann::json functionals;
  functionals["scale"] = semi ? "raw" : "unit";
  functionals["draws"] = draws.size();
  functionals["acceptance_rate"] = acceptance;
  functionals["alpha"] = config.alpha;
  if (semi) {
    functionals["mu"] = interval(mus, config.alpha);
    functionals["sigma"] = interval(sigmas, config.alpha);
  } else {
    std::vector<double> means;
    std::vector<double> g_std;
    std::vector<double> g_literal;
    std::vector<double> medians;
    for (const auto& d : draws) {
      const PiecewiseQuantileFunction q(d);
      means.push_back(quantile_mean(q));
      medians.push_back(quantile_at(q, 0.5));
      const auto g = gini(q);
      g_std.push_back(g.standard);
      g_literal.push_back(g.literal);
    }
    functionals["mean"] = interval(means, config.alpha);
    functionals["median"] = interval(medians, config.alpha);
    functionals["gini_standard"] = interval(g_std, config.alpha);
    functionals["gini_literal"] = interval(g_literal, config.alpha);
    const auto& map = in.data.affine();
    functionals["affine"] = {{"lo", map.lo()}, {"hi", map.hi()}};
  }
  io::write_json(out / "functionals.json", functionals);

  nlohmann::json manifest;
  manifest["tool"] = {{"name", "qpyramid"}, {"version", kToolVersion}};
  manifest["config"] = config.to_json();
  manifest["data_fingerprint"] = in.fingerprint.to_json();
  manifest["seed"] = config.seed;
  manifest["wall_clock"] = {{"finished_utc", utc_timestamp()}, {"chain_seconds", elapsed}};
  io::write_json(out / "manifest.json", manifest);

  return {draws.size(), acceptance};
}

}  // namespace qpyramid
