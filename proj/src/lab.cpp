#include "qpyramid/lab.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <sstream>

#include "qpyramid/errors.hpp"
#include "qpyramid/parallel.hpp"
#include "qpyramid/summaries.hpp"

namespace qpyramid::lab {

namespace {

constexpr double kNormTolerance = 1e-9;
// Stream index reserved for simulated data so it never coincides with a chain stream.
constexpr std::uint64_t kDataStream = 0x5eed'da7aULL;

void rethrow_first(const std::vector<std::exception_ptr>& errors) {
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::vector<double> merged_breaks(const PiecewiseConstant& f, const PiecewiseConstant& g) {
  std::vector<double> out;
  out.reserve(f.breaks.size() + g.breaks.size());
  std::merge(f.breaks.begin(), f.breaks.end(), g.breaks.begin(), g.breaks.end(), std::back_inserter(out));
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// Value of a piecewise-constant function on the merged cell (a, b), located via its midpoint.
double value_on(const PiecewiseConstant& f, double a, double b) {
  const double mid = 0.5 * (a + b);
  auto it = std::lower_bound(f.breaks.begin(), f.breaks.end(), mid);
  std::size_t i = static_cast<std::size_t>(it - f.breaks.begin());
  i = std::clamp<std::size_t>(i, 1, f.values.size());
  return f.values[i - 1];
}

void check_shape(const PiecewiseConstant& f, const char* what) {
  if (f.breaks.size() < 2 || f.values.size() + 1 != f.breaks.size()) {
    throw DomainError(std::string(what) + ": breaks and values do not match");
  }
  if (!std::is_sorted(f.breaks.begin(), f.breaks.end())) {
    throw DomainError(std::string(what) + ": breaks must be sorted");
  }
}

void check_normalized(const PiecewiseConstant& f, const char* what) {
  check_shape(f, what);
  for (double v : f.values) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError(std::string(what) + ": negative or non-finite density");
  }
  if (std::abs(f.integral() - 1.0) > kNormTolerance) {
    throw DomainError(std::string(what) + ": density does not integrate to 1");
  }
}

std::size_t level_of_cells(std::size_t k) {
  if (k < 2 || (k & (k - 1)) != 0) throw ConfigError("cell count must be a power of two >= 2");
  std::size_t m = 0;
  while ((std::size_t{1} << m) < k) ++m;
  return m;
}

// Pearson correlation matrix of the columns of x.
Eigen::MatrixXd correlation_of(const Eigen::MatrixXd& x) {
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Eigen::MatrixXd centred = x.rowwise() - mean;
  const Eigen::MatrixXd cov = centred.transpose() * centred / static_cast<double>(x.rows() - 1);
  const Eigen::VectorXd sd = cov.diagonal().cwiseSqrt();
  return cov.array() / (sd * sd.transpose()).array();
}

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

double median_of(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  return sorted_quantile(values, 0.5);
}

}  // namespace

// ---------------------------------------------------------------------------
// TrueLaw

TrueLaw TrueLaw::parse(const std::string& name) {
  if (name == "uniform") return uniform();
  if (name == "ysquared" || name == "y2") return y_squared();
  if (name == "linear") return linear();
  throw ConfigError("unknown f0 '" + name + "' (expected uniform, ysquared or linear)");
}

std::string TrueLaw::name() const {
  switch (kind_) {
    case Kind::Uniform: return "uniform";
    case Kind::YSquared: return "ysquared";
    case Kind::Linear: return "linear";
  }
  return "unknown";
}

double TrueLaw::cdf(double x) const {
  x = std::clamp(x, 0.0, 1.0);
  switch (kind_) {
    case Kind::Uniform: return x;
    case Kind::YSquared: return std::sqrt(x);
    case Kind::Linear: return 0.5 * x + 0.5 * x * x;
  }
  return x;
}

double TrueLaw::quantile(double y) const {
  y = std::clamp(y, 0.0, 1.0);
  switch (kind_) {
    case Kind::Uniform: return y;
    case Kind::YSquared: return y * y;
    case Kind::Linear: return 4.0 * y / (1.0 + std::sqrt(1.0 + 8.0 * y));  // root of x^2 + x - 2y
  }
  return y;
}

double TrueLaw::density(double x) const {
  if (x < 0.0 || x > 1.0) return 0.0;
  switch (kind_) {
    case Kind::Uniform: return 1.0;
    case Kind::YSquared: return 0.5 / std::sqrt(x);
    case Kind::Linear: return 0.5 + x;
  }
  return 1.0;
}

double TrueLaw::sqrt_density_integral(double a, double b, double c) const {
  a = std::clamp(a, 0.0, 1.0);
  b = std::clamp(b, 0.0, 1.0);
  if (b <= a || c <= 0.0) return 0.0;
  switch (kind_) {
    case Kind::Uniform: return std::sqrt(c) * (b - a);
    case Kind::YSquared:
      return std::sqrt(0.5 * c) * (4.0 / 3.0) * (std::pow(b, 0.75) - std::pow(a, 0.75));
    case Kind::Linear:
      return std::sqrt(c) * (2.0 / 3.0) * (std::pow(0.5 + b, 1.5) - std::pow(0.5 + a, 1.5));
  }
  return 0.0;
}

std::vector<double> TrueLaw::sample(std::size_t n, Rng& rng) const {
  std::vector<double> out(n);
  for (auto& x : out) x = quantile(rng.uniform());
  return out;
}

// ---------------------------------------------------------------------------
// Piecewise-constant functions and distances

double PiecewiseConstant::integral() const {
  double total = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) total += values[i] * (breaks[i + 1] - breaks[i]);
  return total;
}

PiecewiseConstant histogram_density(const DyadicQuantileVector& q) {
  PiecewiseConstant f;
  f.breaks = q.knots();
  const double mass = 1.0 / static_cast<double>(q.cells());
  f.values.resize(q.cells());
  for (std::size_t j = 1; j <= q.cells(); ++j) f.values[j - 1] = mass / q.gap(j);
  return f;
}

PiecewiseConstant quantile_density_function(const DyadicQuantileVector& q) {
  PiecewiseConstant f;
  const std::size_t k = q.cells();
  const double kd = static_cast<double>(k);
  f.breaks.resize(k + 1);
  f.values.resize(k);
  for (std::size_t j = 0; j <= k; ++j) f.breaks[j] = static_cast<double>(j) / kd;
  for (std::size_t j = 1; j <= k; ++j) f.values[j - 1] = kd * q.gap(j);
  return f;
}

double kl_quantile_divergence(const PiecewiseConstant& q, const PiecewiseConstant& q0) {
  check_shape(q, "kl_quantile_divergence");
  check_shape(q0, "kl_quantile_divergence");
  const auto breaks = merged_breaks(q, q0);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double a = breaks[i];
    const double b = breaks[i + 1];
    if (b <= a) continue;
    const double v = value_on(q, a, b);
    const double v0 = value_on(q0, a, b);
    if (!(v > 0.0) || !(v0 > 0.0)) throw DomainError("kl_quantile_divergence: zero quantile density on a cell");
    total += (b - a) * v * std::log(v / v0);
  }
  if (!std::isfinite(total)) throw DomainError("kl_quantile_divergence: non-finite divergence");
  return total;
}

double hellinger(const PiecewiseConstant& f, const PiecewiseConstant& g) {
  check_normalized(f, "hellinger");
  check_normalized(g, "hellinger");
  const auto breaks = merged_breaks(f, g);
  double affinity = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double a = breaks[i];
    const double b = breaks[i + 1];
    if (b <= a) continue;
    const double lo = std::max({a, f.breaks.front(), g.breaks.front()});
    const double hi = std::min({b, f.breaks.back(), g.breaks.back()});
    if (hi <= lo) continue;
    affinity += (b - a) * std::sqrt(value_on(f, a, b) * value_on(g, a, b));
  }
  return std::sqrt(std::max(0.0, 1.0 - affinity));
}

double hellinger(const PiecewiseConstant& f, const TrueLaw& f0) {
  check_normalized(f, "hellinger");
  double affinity = 0.0;
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    affinity += f0.sqrt_density_integral(f.breaks[i], f.breaks[i + 1], f.values[i]);
  }
  return std::sqrt(std::max(0.0, 1.0 - affinity));
}

// ---------------------------------------------------------------------------
// BridgeCovariance

BridgeCovariance::BridgeCovariance(std::size_t cells) : k(cells) {
  if (k < 2) throw ConfigError("BridgeCovariance needs k >= 2");
  const auto d = static_cast<Eigen::Index>(k - 1);
  const double kd = static_cast<double>(k);
  bridge.resize(d, d);
  multinomial.resize(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      const double s = static_cast<double>(std::min(i, j) + 1) / kd;
      const double t = static_cast<double>(std::max(i, j) + 1) / kd;
      bridge(i, j) = s * (1.0 - t);
      multinomial(i, j) = i == j ? (1.0 / kd) * (1.0 - 1.0 / kd) : -1.0 / (kd * kd);
    }
  }
}

Eigen::MatrixXd BridgeCovariance::multinomial_inverse() const {
  const auto d = static_cast<Eigen::Index>(k - 1);
  const double kd = static_cast<double>(k);
  Eigen::MatrixXd inv = Eigen::MatrixXd::Constant(d, d, kd);
  inv.diagonal().array() = 2.0 * kd;
  return inv;
}

Eigen::MatrixXd BridgeCovariance::bridge_inverse() const {
  const auto d = static_cast<Eigen::Index>(k - 1);
  const double kd = static_cast<double>(k);
  Eigen::MatrixXd inv = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    inv(i, i) = 2.0 * kd;
    if (i + 1 < d) inv(i, i + 1) = inv(i + 1, i) = -kd;
  }
  return inv;
}

bool BridgeCovariance::positive_definite() const {
  Eigen::LLT<Eigen::MatrixXd> a(bridge);
  Eigen::LLT<Eigen::MatrixXd> b(multinomial);
  return a.info() == Eigen::Success && b.info() == Eigen::Success;
}

double BridgeCovariance::correlation(std::size_t i, std::size_t j) const {
  if (i < 1 || j < 1 || i >= k || j >= k) throw DomainError("correlation index outside 1..k-1");
  const auto a = static_cast<Eigen::Index>(i - 1);
  const auto b = static_cast<Eigen::Index>(j - 1);
  return bridge(a, b) / std::sqrt(bridge(a, a) * bridge(b, b));
}

nlohmann::json ExperimentReport::to_json() const {
  nlohmann::json out = body;
  out["experiment"] = name;
  out["passed"] = passed;
  return out;
}

// ---------------------------------------------------------------------------
// Bernshtein-von Mises

BvmResult bvm_experiment(const BvmOptions& options) {
  if (options.n < 2) throw ConfigError("bvm: n must be at least 2");
  if (options.chains < 1) throw ConfigError("bvm: need at least one chain");
  const auto level = static_cast<int>(level_of_cells(options.k));
  const std::size_t k = options.k;

  Rng data_rng = Rng::stream(options.data_seed, kDataStream);
  const Dataset data(options.f0.sample(options.n, data_rng));
  const PriorSpec spec = PriorSpec::parse(options.prior, level);
  ChainConfig chain = options.chain;
  chain.kind = LikelihoodKind::Substitute;
  chain.validate();

  const auto runs = run_chains(chain, data, spec, options.chains);
  std::size_t total = 0;
  for (const auto& r : runs) total += r.size();
  if (total < 3) throw ConfigError("bvm: too few stored draws");

  const double root_n = std::sqrt(static_cast<double>(options.n));
  std::vector<double> fn_inv(k - 1);
  for (std::size_t j = 1; j < k; ++j) fn_inv[j - 1] = data.empirical_quantile(static_cast<double>(j) / k);

  Eigen::MatrixXd c(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(k - 1));
  Eigen::Index row = 0;
  for (const auto& r : runs) {
    for (const auto& d : r.rows) {
      const auto v = d.q.values();
      for (std::size_t j = 0; j + 1 < k; ++j) c(row, static_cast<Eigen::Index>(j)) = root_n * (v[j] - fn_inv[j]);
      ++row;
    }
  }

  BvmResult result;
  result.draws = total;
  const BridgeCovariance cov(k);
  result.target_correlation = Eigen::MatrixXd(k - 1, k - 1);
  for (std::size_t i = 1; i < k; ++i) {
    for (std::size_t j = 1; j < k; ++j) {
      result.target_correlation(static_cast<Eigen::Index>(i - 1), static_cast<Eigen::Index>(j - 1)) =
          cov.correlation(i, j);
    }
  }
  result.correlation = correlation_of(c);

  result.sd_pass = result.mean_pass = result.corr_pass = true;
  for (std::size_t j = 1; j < k; ++j) {
    const auto col = c.col(static_cast<Eigen::Index>(j - 1));
    const double mean = col.mean();
    const double var = (col.array() - mean).square().sum() / static_cast<double>(total - 1);
    const double y = static_cast<double>(j) / k;
    const double target = options.f0.quantile_density(y) * std::sqrt(y * (1.0 - y));
    result.mean.push_back(mean);
    result.sd.push_back(std::sqrt(var));
    result.target_sd.push_back(target);
    if (std::abs(std::sqrt(var) / target - 1.0) > options.sd_tolerance) result.sd_pass = false;
    if (std::abs(mean) > options.mean_tolerance) result.mean_pass = false;
  }
  for (Eigen::Index i = 0; i < result.correlation.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < result.correlation.cols(); ++j) {
      if (std::abs(result.correlation(i, j) - result.target_correlation(i, j)) > options.corr_tolerance) {
        result.corr_pass = false;
      }
    }
  }
  return result;
}

ExperimentReport BvmResult::report(const BvmOptions& options) const {
  ExperimentReport r;
  r.name = "bvm";
  r.passed = passed();
  r.body["grid"] = {{"f0", options.f0.name()},
                    {"n", options.n},
                    {"k", options.k},
                    {"prior", options.prior},
                    {"chains", options.chains},
                    {"iterations", options.chain.iterations},
                    {"burn_in", options.chain.resolved_burn_in()},
                    {"thin", options.chain.thin}};
  r.body["seeds"] = {{"chain", options.chain.seed}, {"data", options.data_seed}};
  r.body["thresholds"] = {{"sd_relative", options.sd_tolerance},
                          {"mean_absolute", options.mean_tolerance},
                          {"correlation_absolute", options.corr_tolerance}};
  r.body["statistics"] = {{"draws", draws},
                          {"mean", mean},
                          {"sd", sd},
                          {"target_sd", target_sd},
                          {"correlation", matrix_json(correlation)},
                          {"target_correlation", matrix_json(target_correlation)}};
  r.body["pass"] = {{"sd", sd_pass}, {"mean", mean_pass}, {"correlation", corr_pass}};
  return r;
}

// ---------------------------------------------------------------------------
// Consistency

KRule KRule::sqrt_rule() {
  return {"sqrt", [](std::size_t n) {
            const double target = std::ceil(std::log2(std::sqrt(static_cast<double>(n))) - 1e-12);
            return std::size_t{1} << static_cast<int>(std::max(1.0, target));
          }};
}

KRule KRule::linear_rule() {
  return {"linear", [](std::size_t n) {
            const double target = std::ceil(std::log2(static_cast<double>(n)) - 1e-12);
            return std::size_t{1} << static_cast<int>(std::max(1.0, target));
          }};
}

KRule KRule::constant(std::size_t k) {
  level_of_cells(k);
  return {"const:" + std::to_string(k), [k](std::size_t) { return k; }};
}

KRule KRule::parse(const std::string& text) {
  if (text == "sqrt") return sqrt_rule();
  if (text == "linear" || text == "n") return linear_rule();
  const std::string prefix = "const:";
  if (text.rfind(prefix, 0) == 0) {
    try {
      return constant(std::stoul(text.substr(prefix.size())));
    } catch (const std::logic_error&) {
      throw ConfigError("bad k-rule '" + text + "'");
    }
  }
  throw ConfigError("unknown k-rule '" + text + "' (expected sqrt, linear or const:<k>)");
}

void validate_k_rule(const KRule& rule, const std::vector<std::size_t>& n_grid) {
  if (n_grid.empty()) throw ConfigError("n grid is empty");
  if (!std::is_sorted(n_grid.begin(), n_grid.end()) ||
      std::adjacent_find(n_grid.begin(), n_grid.end()) != n_grid.end()) {
    throw ConfigError("n grid must be strictly increasing");
  }
  double last_ratio = 1.0;
  std::size_t last_k = 0;
  for (std::size_t n : n_grid) {
    const std::size_t k = rule.cells(n);
    level_of_cells(k);
    const double ratio = static_cast<double>(k) / static_cast<double>(n);
    if (ratio >= 0.5) {
      throw ConfigError("k-rule '" + rule.name + "' gives k_n = " + std::to_string(k) + " at n = " +
                        std::to_string(n) + "; k_n / n must shrink towards 0");
    }
    if (ratio >= last_ratio) throw ConfigError("k-rule '" + rule.name + "': k_n / n is not decreasing on the grid");
    if (k < last_k) throw ConfigError("k-rule '" + rule.name + "': k_n decreases on the grid");
    last_ratio = ratio;
    last_k = k;
  }
  if (n_grid.size() > 1 && rule.cells(n_grid.back()) <= rule.cells(n_grid.front())) {
    throw ConfigError("k-rule '" + rule.name + "': k_n does not grow across the grid");
  }
}

bool ConsistencyResult::passed() const {
  return !decreasing.empty() && std::all_of(decreasing.begin(), decreasing.end(), [](bool b) { return b; });
}

ConsistencyResult consistency_experiment(const ConsistencyOptions& options) {
  validate_k_rule(options.rule, options.n_grid);
  if (options.seeds.empty()) throw ConfigError("consistency: no seeds");
  options.chain.validate();

  const std::size_t grid = options.n_grid.size();
  const std::size_t jobs = grid * options.seeds.size();
  ConsistencyResult result;
  result.distance.assign(options.seeds.size(), std::vector<double>(grid, 0.0));
  for (std::size_t n : options.n_grid) result.cells.push_back(options.rule.cells(n));

  std::vector<std::exception_ptr> errors(jobs);
#pragma omp parallel for schedule(dynamic, 1) num_threads(parallel::worker_count())
  for (std::size_t job = 0; job < jobs; ++job) {
    try {
      const std::size_t s = job / grid;
      const std::size_t i = job % grid;
      const std::size_t n = options.n_grid[i];
      const auto level = static_cast<int>(level_of_cells(result.cells[i]));
      Rng data_rng = Rng::stream(options.seeds[s], kDataStream + n);
      const Dataset data(options.f0.sample(n, data_rng));
      const PriorSpec spec = PriorSpec::parse(options.prior, level);
      ChainConfig chain = options.chain;
      chain.kind = LikelihoodKind::Interp;
      chain.seed = options.seeds[s];
      chain.chain = i;
      const DrawMatrix draws = run_chain(chain, data, spec);
      std::vector<double> h;
      h.reserve(draws.size());
      for (const auto& d : draws.rows) h.push_back(hellinger(histogram_density(d.q), options.f0));
      result.distance[s][i] = median_of(std::move(h));
    } catch (...) {
      errors[job] = std::current_exception();
    }
  }
  rethrow_first(errors);

  for (const auto& row : result.distance) {
    bool dec = true;
    for (std::size_t i = 1; i < row.size(); ++i) dec = dec && row[i] < row[i - 1];
    result.decreasing.push_back(dec);
  }
  return result;
}

ExperimentReport ConsistencyResult::report(const ConsistencyOptions& options) const {
  ExperimentReport r;
  r.name = "consistency";
  r.passed = passed();
  r.body["grid"] = {{"f0", options.f0.name()},
                    {"n", options.n_grid},
                    {"k", cells},
                    {"k_rule", options.rule.name},
                    {"prior", options.prior},
                    {"iterations", options.chain.iterations},
                    {"burn_in", options.chain.resolved_burn_in()},
                    {"thin", options.chain.thin}};
  r.body["seeds"] = options.seeds;
  r.body["statistics"] = {{"median_hellinger", distance}};
  r.body["thresholds"] = {{"rule", "strictly decreasing in n for every seed"}};
  r.body["pass"] = {{"decreasing", decreasing}};
  return r;
}

// ---------------------------------------------------------------------------
// Prior replicates

std::vector<DyadicQuantileVector> sample_prior_many(const PriorSpec& spec, std::size_t count,
                                                    std::uint64_t seed) {
  std::vector<std::vector<double>> knots(count);
  std::vector<std::exception_ptr> errors(count);
#pragma omp parallel for schedule(static) num_threads(parallel::worker_count())
  for (std::size_t r = 0; r < count; ++r) {
    try {
      Rng rng = Rng::stream(seed, r);
      const auto state = sample_prior(spec, rng);
      knots[r] = spec.materialize_knots(state.knots());
    } catch (...) {
      errors[r] = std::current_exception();
    }
  }
  rethrow_first(errors);
  std::vector<DyadicQuantileVector> out;
  out.reserve(count);
  for (auto& full : knots) {
    out.emplace_back(spec.level(), std::vector<double>(full.begin() + 1, full.end() - 1));
  }
  return out;
}

std::vector<DyadicQuantileVector> sample_prior_many_serial(const PriorSpec& spec, std::size_t count,
                                                           std::uint64_t seed) {
  std::vector<DyadicQuantileVector> out;
  out.reserve(count);
  for (std::size_t r = 0; r < count; ++r) {
    Rng rng = Rng::stream(seed, r);
    const auto state = sample_prior(spec, rng);
    const auto full = spec.materialize_knots(state.knots());
    out.emplace_back(spec.level(), std::vector<double>(full.begin() + 1, full.end() - 1));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Delta_m decay

namespace {

// Largest c_l = max{E V^2, E (1 - V)^2} over the nodes created at level l.
std::vector<double> level_moment_bounds(const PriorSpec& spec) {
  const int top = spec.level();
  std::vector<double> c(static_cast<std::size_t>(top) + 1, 0.0);
  const std::size_t k = std::size_t{1} << top;
  for (std::size_t j = 1; j < k; ++j) {
    const int l = pyramid::node_level(j, top);
    const double parent_gap = 2.0 / static_cast<double>(std::size_t{1} << l);
    const VLaw law = spec.law_for(j, parent_gap);
    c[static_cast<std::size_t>(l)] =
        std::max({c[static_cast<std::size_t>(l)], law.second_moment(), law.complement_second_moment()});
  }
  return c;
}

// Per-replicate statistics at every requested level, taken from one deep pyramid draw.
struct DecayCell {
  double delta;
  double max_qdensity;
};

std::vector<DecayCell> decay_replicate(const PriorSpec& spec, const std::vector<int>& levels, std::uint64_t seed,
                                       std::size_t r) {
  Rng rng = Rng::stream(seed, r);
  const auto full = spec.materialize_knots(sample_prior_knots(spec, rng));
  const int top = spec.level();
  std::vector<DecayCell> out;
  out.reserve(levels.size());
  for (int m : levels) {
    const std::size_t stride = std::size_t{1} << (top - m);
    const std::size_t k = std::size_t{1} << m;
    double widest = 0.0;
    for (std::size_t j = 1; j <= k; ++j) widest = std::max(widest, full[j * stride] - full[(j - 1) * stride]);
    out.push_back({widest, widest * static_cast<double>(k)});
  }
  return out;
}

DeltaDecayResult summarize_decay(const DeltaDecayOptions& options, const PriorSpec& spec,
                                 const std::vector<std::vector<DecayCell>>& cells) {
  const auto c = level_moment_bounds(spec);
  const double reps = static_cast<double>(options.replicates);
  DeltaDecayResult result;
  for (std::size_t i = 0; i < options.levels.size(); ++i) {
    const int m = options.levels[i];
    std::vector<double> delta(options.replicates);
    std::vector<double> qd(options.replicates);
    std::size_t hits = 0;
    for (std::size_t r = 0; r < options.replicates; ++r) {
      delta[r] = cells[r][i].delta;
      qd[r] = cells[r][i].max_qdensity;
      if (delta[r] >= options.epsilon) ++hits;
    }
    DeltaDecayRow row{};
    row.level = m;
    row.tail = static_cast<double>(hits) / reps;
    row.tail_se = std::sqrt(row.tail * (1.0 - row.tail) / reps);
    double product = 1.0;
    for (int l = 1; l <= m; ++l) product *= 2.0 * c[static_cast<std::size_t>(l)];
    row.bound = product / (options.epsilon * options.epsilon);
    std::sort(delta.begin(), delta.end());
    row.p95 = sorted_quantile(delta, 0.95);
    const double mean = std::accumulate(qd.begin(), qd.end(), 0.0) / reps;
    double ss = 0.0;
    for (double v : qd) ss += (v - mean) * (v - mean);
    row.mean_max_qdensity = mean;
    row.mean_max_qdensity_se = options.replicates > 1 ? std::sqrt(ss / (reps - 1.0) / reps) : 0.0;
    std::sort(qd.begin(), qd.end());
    row.median_max_qdensity = sorted_quantile(qd, 0.5);
    row.within_bound = row.tail <= row.bound + 3.0 * row.tail_se;
    result.rows.push_back(row);
  }
  return result;
}

PriorSpec decay_spec(const DeltaDecayOptions& options) {
  if (options.replicates < 100) throw ConfigError("delta-decay: at least 100 replicates are required");
  if (options.levels.empty()) throw ConfigError("delta-decay: empty level grid");
  if (!(options.epsilon > 0.0 && options.epsilon <= 1.0)) throw ConfigError("delta-decay: epsilon must be in (0, 1]");
  for (int m : options.levels) {
    if (m < 1 || m > kMaxLevel) throw ConfigError("delta-decay: level outside 1.." + std::to_string(kMaxLevel));
  }
  const int top = *std::max_element(options.levels.begin(), options.levels.end());
  return PriorSpec::parse(options.prior, top);
}

}  // namespace

bool DeltaDecayResult::passed() const {
  return !rows.empty() && std::all_of(rows.begin(), rows.end(), [](const DeltaDecayRow& r) { return r.within_bound; });
}

DeltaDecayResult delta_decay_experiment(const DeltaDecayOptions& options) {
  const PriorSpec spec = decay_spec(options);
  std::vector<std::vector<DecayCell>> cells(options.replicates);
  std::vector<std::exception_ptr> errors(options.replicates);
#pragma omp parallel for schedule(static) num_threads(parallel::worker_count())
  for (std::size_t r = 0; r < options.replicates; ++r) {
    try {
      cells[r] = decay_replicate(spec, options.levels, options.seed, r);
    } catch (...) {
      errors[r] = std::current_exception();
    }
  }
  rethrow_first(errors);
  return summarize_decay(options, spec, cells);
}

DeltaDecayResult delta_decay_experiment_serial(const DeltaDecayOptions& options) {
  const PriorSpec spec = decay_spec(options);
  std::vector<std::vector<DecayCell>> cells(options.replicates);
  for (std::size_t r = 0; r < options.replicates; ++r) cells[r] = decay_replicate(spec, options.levels, options.seed, r);
  return summarize_decay(options, spec, cells);
}

ExperimentReport DeltaDecayResult::report(const DeltaDecayOptions& options) const {
  ExperimentReport r;
  r.name = "delta-decay";
  r.passed = passed();
  r.body["grid"] = {{"prior", options.prior},
                    {"levels", options.levels},
                    {"replicates", options.replicates},
                    {"epsilon", options.epsilon}};
  r.body["seeds"] = {options.seed};
  nlohmann::json table = nlohmann::json::array();
  for (const auto& row : rows) {
    table.push_back({{"m", row.level},
                     {"tail", row.tail},
                     {"tail_se", row.tail_se},
                     {"bound", row.bound},
                     {"p95_delta", row.p95},
                     {"median_max_qdensity", row.median_max_qdensity},
                     {"mean_max_qdensity", row.mean_max_qdensity},
                     {"mean_max_qdensity_se", row.mean_max_qdensity_se},
                     {"within_bound", row.within_bound}});
  }
  r.body["statistics"] = table;
  r.body["thresholds"] = {{"rule", "tail <= bound + 3 * tail_se"}};
  return r;
}

// ---------------------------------------------------------------------------
// Prior mean

PriorMeanResult prior_mean_experiment(const PriorMeanOptions& options) {
  if (options.draws < 2) throw ConfigError("prior-mean: at least two draws are required");
  const PriorSpec spec = PriorSpec::parse(options.prior, options.level);
  const auto draws = sample_prior_many(spec, options.draws, options.seed);
  const std::size_t k = std::size_t{1} << options.level;
  const double count = static_cast<double>(options.draws);

  PriorMeanResult result;
  for (std::size_t j = 1; j < k; ++j) {
    const double y = static_cast<double>(j) / static_cast<double>(k);
    double sum = 0.0;
    for (const auto& d : draws) sum += d.values()[j - 1];
    const double mean = sum / count;
    double ss = 0.0;
    for (const auto& d : draws) ss += (d.values()[j - 1] - mean) * (d.values()[j - 1] - mean);
    const double se = std::sqrt(ss / (count - 1.0) / count);
    const double target = spec.center() ? (*spec.center())(y) : y;
    result.y.push_back(y);
    result.mean.push_back(mean);
    result.se.push_back(se);
    result.target.push_back(target);
    const double diff = std::abs(mean - target);
    const double z = se > 0.0 ? diff / se : (diff > 1e-12 ? HUGE_VAL : 0.0);
    result.max_abs_z = std::max(result.max_abs_z, z);
  }
  return result;
}

ExperimentReport PriorMeanResult::report(const PriorMeanOptions& options) const {
  ExperimentReport r;
  r.name = "prior-mean";
  r.passed = passed();
  r.body["grid"] = {{"prior", options.prior}, {"level", options.level}, {"draws", options.draws}};
  r.body["seeds"] = {options.seed};
  r.body["statistics"] = {{"y", y}, {"mean", mean}, {"se", se}, {"target", target}, {"max_abs_z", max_abs_z}};
  r.body["thresholds"] = {{"max_abs_z", 3.0}};
  return r;
}

}  // namespace qpyramid::lab
