#include "qpyramid/sampler.hpp"

#include <algorithm>
#include <bit>
#include <exception>
#include <numbers>
#include <cmath>
#include <limits>
#include <numeric>

#include "qpyramid/errors.hpp"
#include "qpyramid/parallel.hpp"
#include "qpyramid/special.hpp"

namespace qpyramid {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kStartNudge = 1e-9;
constexpr double kDriftLimit = 1e-6;

double log_fact(std::size_t n) { return special::log_factorial(static_cast<double>(n)); }

// -N log(gap); the -N log k part cancels within a site move.
double gap_term(std::size_t count, double gap) {
  if (count == 0) return 0.0;
  if (!(gap > 0.0)) return kNegInf;
  return -static_cast<double>(count) * std::log(gap);
}

double normal_log_density(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * std::numbers::pi);
}

// Inverse of a strictly increasing centering function by bisection.
double invert_center(const NullQuantile& center, double x) {
  double lo = 0.0;
  double hi = 1.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (center(mid) < x) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

DyadicQuantileVector nudge_strict(std::vector<double> q) {
  double prev = 0.0;
  for (double& v : q) {
    v = std::max(v, prev + kStartNudge);
    prev = v;
  }
  double next = 1.0;
  for (auto it = q.rbegin(); it != q.rend(); ++it) {
    *it = std::min(*it, next - kStartNudge);
    next = *it;
  }
  const int level = std::countr_zero(q.size() + 1);
  return DyadicQuantileVector(level, std::move(q));
}

}  // namespace

void ChainConfig::validate() const {
  if (thin < 1) throw ConfigError("thin must be >= 1");
  if (iterations < resolved_burn_in()) throw ConfigError("burn-in exceeds the number of iterations");
}

std::vector<DyadicQuantileVector> DrawMatrix::quantiles() const {
  std::vector<DyadicQuantileVector> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.q);
  return out;
}

// ---------------------------------------------------------------------------
// ChainState

ChainState::ChainState(std::span<const double> sorted, EdgeKind edge_kind, const PriorSpec& spec,
                       LikelihoodKind kind, const DyadicQuantileVector& start, double mu, double sigma)
    : sorted_(sorted), edge_kind_(edge_kind), spec_(&spec), kind_(kind), mu_(mu), sigma_(sigma) {
  if (start.level() != spec.level()) throw DomainError("chain start level differs from prior level");
  if (!(sigma > 0.0)) throw DomainError("sigma must be positive");
  knots_ = start.knots();
  log_k_ = std::log(static_cast<double>(start.cells()));
  dependents_.resize(start.cells());
  for (std::size_t j = 1; j < start.cells(); ++j) dependents_[j] = pyramid::dependent_nodes(j, spec.level());
  rebuild();
}

ChainState::ChainState(const Dataset& data, const PriorSpec& spec, LikelihoodKind kind,
                       const DyadicQuantileVector& start)
    : ChainState(data.values(), spec.transforms_knots() ? EdgeKind::Transform : EdgeKind::Unit, spec, kind,
                 start, 0.0, 1.0) {}

ChainState::ChainState(std::span<const double> sorted_raw, const PriorSpec& spec,
                       const DyadicQuantileVector& start, double mu, double sigma)
    : ChainState(sorted_raw, EdgeKind::Normal, spec, LikelihoodKind::Interp, start, mu, sigma) {
  if (spec.transforms_knots()) throw ConfigError("transform centering does not apply to the semiparametric model");
}

double ChainState::edge(double u) const {
  switch (edge_kind_) {
    case EdgeKind::Unit:
      return u;
    case EdgeKind::Transform:
      return (*spec_->center())(u);
    case EdgeKind::Normal:
      return mu_ + sigma_ * special::normal_quantile(u);
  }
  return u;
}

std::size_t ChainState::count_le(std::size_t j, double x) const {
  if (j == 0) return 0;
  if (j + 1 == knots_.size()) return sorted_.size();
  return static_cast<std::size_t>(std::upper_bound(sorted_.begin(), sorted_.end(), x) - sorted_.begin());
}

void ChainState::rebuild() {
  const std::size_t k = knots_.size() - 1;
  edges_.assign(k + 1, 0.0);
  for (std::size_t j = 1; j < k; ++j) edges_[j] = edge(knots_[j]);
  if (edge_kind_ == EdgeKind::Normal) {
    edges_[0] = mu_ + sigma_ * special::normal_quantile(kSemiparamClip);
    edges_[k] = mu_ + sigma_ * special::normal_quantile(1.0 - kSemiparamClip);
  } else {
    edges_[0] = 0.0;
    edges_[k] = 1.0;
  }
  counts_.assign(k, 0);
  std::size_t below = 0;
  for (std::size_t j = 1; j <= k; ++j) {
    const std::size_t upto = count_le(j, edges_[j]);
    counts_[j - 1] = upto - below;
    below = upto;
  }
  log_prior_ = full_log_prior();
  log_lik_ = full_log_lik();
}

double ChainState::full_log_prior() const {
  double total = 0.0;
  for (std::size_t j : pyramid::creation_order(level())) total += node_log_prior(*spec_, knots_, j);
  return total;
}

double ChainState::full_log_lik() const {
  if (kind_ == LikelihoodKind::Substitute) return log_lik_substitute(counts_);
  // On the raw scale sigma sits inside every gap, which is the -n log sigma term.
  double total = 0.0;
  for (std::size_t j = 1; j < edges_.size(); ++j) {
    const std::size_t c = counts_[j - 1];
    if (c == 0) continue;
    total += gap_term(c, edges_[j] - edges_[j - 1]) - static_cast<double>(c) * log_k_;
  }
  return total;
}

DyadicQuantileVector ChainState::state() const {
  return DyadicQuantileVector(level(), std::vector<double>(knots_.begin() + 1, knots_.end() - 1));
}

DyadicQuantileVector ChainState::quantiles() const {
  if (edge_kind_ != EdgeKind::Transform) return state();
  return DyadicQuantileVector(level(), std::vector<double>(edges_.begin() + 1, edges_.end() - 1));
}

ChainState::Move ChainState::evaluate(std::size_t j, double proposal) const {
  Move move{kNegInf, 0.0, 0.0, 0, 0, 0.0};
  if (!(proposal - knots_[j - 1] >= kMinGap && knots_[j + 1] - proposal >= kMinGap)) return move;

  const double x = edge(proposal);
  const std::size_t below = count_le(j - 1, edges_[j - 1]);
  const std::size_t pair = counts_[j - 1] + counts_[j];
  const std::size_t upto = std::clamp(count_le(j, x), below, below + pair);
  move.edge = x;
  move.left = upto - below;
  move.right = pair - move.left;

  if (kind_ == LikelihoodKind::Interp) {
    const double current = gap_term(counts_[j - 1], edges_[j] - edges_[j - 1]) +
                           gap_term(counts_[j], edges_[j + 1] - edges_[j]);
    const double proposed = gap_term(move.left, x - edges_[j - 1]) + gap_term(move.right, edges_[j + 1] - x);
    move.d_lik = proposed - current;
  } else {
    move.d_lik = log_fact(counts_[j - 1]) + log_fact(counts_[j]) - log_fact(move.left) - log_fact(move.right);
  }

  // Prior factors touching q_j: its own node and descendants bordering it.
  const double* base = knots_.data();
  auto at = [&](std::size_t i) { return i == j ? proposal : base[i]; };
  for (std::size_t node : dependents_[j]) {
    const std::size_t h = pyramid::parent_offset(node);
    const double old_left = base[node - h];
    const double old_right = base[node + h];
    const double old_gap = old_right - old_left;
    const double old_term = spec_->law_for(node, old_gap).log_density((base[node] - old_left) / old_gap) -
                            std::log(old_gap);
    const double new_left = at(node - h);
    const double new_right = at(node + h);
    const double new_gap = new_right - new_left;
    const double new_term = spec_->law_for(node, new_gap).log_density((at(node) - new_left) / new_gap) -
                            std::log(new_gap);
    move.d_prior += new_term - old_term;
  }

  move.log_ratio = move.d_lik + move.d_prior;
  if (std::isnan(move.log_ratio)) move.log_ratio = kNegInf;
  return move;
}

double ChainState::log_ratio(std::size_t j, double proposal) const {
  if (j < 1 || j + 1 >= knots_.size()) throw DomainError("site index outside 1..k-1");
  return evaluate(j, proposal).log_ratio;
}

std::size_t ChainState::sweep(Rng& rng) {
  std::size_t accepted = 0;
  for (std::size_t j = 1; j + 1 < knots_.size(); ++j) {
    const double proposal = rng.uniform(knots_[j - 1], knots_[j + 1]);
    const Move move = evaluate(j, proposal);
    const double u = rng.uniform();
    if (move.log_ratio == kNegInf || !(std::log(u) < move.log_ratio)) continue;
    knots_[j] = proposal;
    edges_[j] = move.edge;
    counts_[j - 1] = move.left;
    counts_[j] = move.right;
    log_prior_ += move.d_prior;
    log_lik_ += move.d_lik;
    ++accepted;
  }
  return accepted;
}

void ChainState::set_location_scale(double mu, double sigma) {
  if (edge_kind_ != EdgeKind::Normal) throw ConfigError("location/scale only exist for the semiparametric state");
  if (!(sigma > 0.0)) throw DomainError("sigma must be positive");
  mu_ = mu;
  sigma_ = sigma;
  rebuild();
}

double ChainState::recheck() {
  const double lp = log_prior_;
  const double ll = log_lik_;
  rebuild();
  auto diff = [](double a, double b) {
    if (a == b) return 0.0;
    return std::fabs(a - b);
  };
  return std::max(diff(lp, log_prior_), diff(ll, log_lik_));
}

// ---------------------------------------------------------------------------
// Drivers

SweepResult mh_sweep(const DyadicQuantileVector& q, const Dataset& data, const PriorSpec& spec,
                     LikelihoodKind kind, Rng& rng) {
  ChainState state(data, spec, kind, q);
  const std::size_t accepted = state.sweep(rng);
  return {state.state(), accepted};
}

DyadicQuantileVector empirical_start(const Dataset& data, int level) {
  if (data.size() == 0) throw ConfigError("empirical-quantile initialisation needs at least one observation");
  const std::size_t k = std::size_t{1} << level;
  std::vector<double> q(k - 1);
  for (std::size_t j = 1; j < k; ++j) {
    q[j - 1] = data.empirical_quantile(static_cast<double>(j) / static_cast<double>(k));
  }
  return nudge_strict(std::move(q));
}

namespace {

DyadicQuantileVector initial_state(const ChainConfig& config, const Dataset& data, const PriorSpec& spec,
                                   Rng& rng) {
  if (config.init == InitMode::PriorDraw) return sample_prior(spec, rng);
  DyadicQuantileVector start = empirical_start(data, spec.level());
  if (!spec.transforms_knots()) return start;
  std::vector<double> u(start.values().begin(), start.values().end());
  for (double& v : u) v = invert_center(*spec.center(), v);
  return nudge_strict(std::move(u));
}

void track(DrawMatrix& out, double drift) {
  out.max_trace_drift = std::max(out.max_trace_drift, drift);
  if (drift > kDriftLimit) throw NumericError("incremental log-density traces drifted from recomputed values");
}

}  // namespace

DrawMatrix run_chain(const ChainConfig& config, const Dataset& data, const PriorSpec& spec) {
  config.validate();
  Rng rng = Rng::stream(config.seed, config.chain);
  ChainState state(data, spec, config.kind, initial_state(config, data, spec, rng));

  DrawMatrix out;
  out.chain = config.chain;
  const std::size_t burn_in = config.resolved_burn_in();
  const std::size_t sites = state.state_knots().size() - 2;
  out.rows.reserve((config.iterations - burn_in) / config.thin + 1);
  for (std::size_t sweep = 1; sweep <= config.iterations; ++sweep) {
    const std::size_t accepted = state.sweep(rng);
    out.total_accepted += accepted;
    out.total_proposed += sites;
    if (config.recheck_every > 0 && sweep % config.recheck_every == 0) track(out, state.recheck());
    if (sweep > burn_in && (sweep - burn_in) % config.thin == 0) {
      out.rows.push_back({sweep, state.quantiles(), state.log_prior(), state.log_lik(), accepted, 0.0, 0.0});
    }
  }
  return out;
}

std::vector<DrawMatrix> run_chains(const ChainConfig& config, const Dataset& data, const PriorSpec& spec,
                                   std::size_t chains) {
  config.validate();
  std::vector<DrawMatrix> out(chains);
  std::vector<std::exception_ptr> errors(chains);
  const auto n = static_cast<long long>(chains);
#pragma omp parallel for schedule(dynamic, 1) num_threads(parallel::worker_count())
  for (long long c = 0; c < n; ++c) {
    try {
      ChainConfig local = config;
      local.chain = static_cast<std::uint64_t>(c);
      out[static_cast<std::size_t>(c)] = run_chain(local, data, spec);
    } catch (...) {
      errors[static_cast<std::size_t>(c)] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

std::vector<DrawMatrix> run_chains_serial(const ChainConfig& config, const Dataset& data,
                                          const PriorSpec& spec, std::size_t chains) {
  std::vector<DrawMatrix> out;
  out.reserve(chains);
  for (std::size_t c = 0; c < chains; ++c) {
    ChainConfig local = config;
    local.chain = c;
    out.push_back(run_chain(local, data, spec));
  }
  return out;
}

DrawMatrix run_chain_semiparam(const ChainConfig& config, std::span<const double> raw_data,
                               const PriorSpec& spec, const SemiparamConfig& semi) {
  config.validate();
  if (!(semi.mu_prior_sd > 0.0 && semi.log_sigma_prior_sd > 0.0)) {
    throw ConfigError("semiparametric prior scales must be positive");
  }
  if (semi.mu_step < 0.0 || semi.log_sigma_step < 0.0) throw ConfigError("random-walk steps must be >= 0");

  std::vector<double> sorted(raw_data.begin(), raw_data.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());

  double mu = semi.mu_prior_mean;
  double sigma = std::exp(semi.log_sigma_prior_mean);
  if (!sorted.empty()) {
    mu = sorted[sorted.size() / 2];
    const double mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : sorted) ss += (x - mean) * (x - mean);
    if (sorted.size() > 1 && ss > 0.0) sigma = std::sqrt(ss / (n - 1.0));
  }
  if (semi.mu_start) mu = *semi.mu_start;
  if (semi.sigma_start) sigma = *semi.sigma_start;

  Rng rng = Rng::stream(config.seed, config.chain);
  const DyadicQuantileVector start =
      config.init == InitMode::PriorDraw && !semi.freeze_quantiles ? sample_prior(spec, rng)
                                                                    : DyadicQuantileVector::identity(spec.level());
  ChainState state(sorted, spec, start, mu, sigma);

  auto param_log_prior = [&](double m, double log_s) {
    return normal_log_density(m, semi.mu_prior_mean, semi.mu_prior_sd) +
           normal_log_density(log_s, semi.log_sigma_prior_mean, semi.log_sigma_prior_sd);
  };

  DrawMatrix out;
  out.chain = config.chain;
  out.semiparametric = true;
  const std::size_t burn_in = config.resolved_burn_in();
  const std::size_t sites = semi.freeze_quantiles ? 0 : state.state_knots().size() - 2;
  for (std::size_t sweep = 1; sweep <= config.iterations; ++sweep) {
    std::size_t accepted = 0;
    if (!semi.freeze_quantiles) accepted += state.sweep(rng);

    // Location: Gaussian random walk.
    {
      const double cur_mu = state.mu();
      const double log_s = std::log(state.sigma());
      const double prop = cur_mu + semi.mu_step * rng.normal();
      const double ll = log_lik_semiparam_knots(prop, state.sigma(), state.state_knots(), sorted);
      const double ratio = ll - state.log_lik() + param_log_prior(prop, log_s) - param_log_prior(cur_mu, log_s);
      if (std::log(rng.uniform()) < ratio) {
        state.set_location_scale(prop, state.sigma());
        ++accepted;
      }
    }
    // Scale: Gaussian random walk on log sigma.
    {
      const double cur_log_s = std::log(state.sigma());
      const double prop_log_s = cur_log_s + semi.log_sigma_step * rng.normal();
      const double prop_sigma = std::exp(prop_log_s);
      const double ll = log_lik_semiparam_knots(state.mu(), prop_sigma, state.state_knots(), sorted);
      const double ratio = ll - state.log_lik() + param_log_prior(state.mu(), prop_log_s) -
                           param_log_prior(state.mu(), cur_log_s);
      if (std::log(rng.uniform()) < ratio) {
        state.set_location_scale(state.mu(), prop_sigma);
        ++accepted;
      }
    }

    out.total_accepted += accepted;
    out.total_proposed += sites + 2;
    if (config.recheck_every > 0 && sweep % config.recheck_every == 0) track(out, state.recheck());
    if (sweep > burn_in && (sweep - burn_in) % config.thin == 0) {
      out.rows.push_back({sweep, state.state(),
                          state.log_prior() + param_log_prior(state.mu(), std::log(state.sigma())),
                          state.log_lik(), accepted, state.mu(), state.sigma()});
    }
  }
  return out;
}

}  // namespace qpyramid
