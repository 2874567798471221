#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "qpyramid/likelihoods.hpp"
#include "qpyramid/priors.hpp"
#include "qpyramid/quantile.hpp"
#include "qpyramid/rng.hpp"

namespace qpyramid {

enum class InitMode { PriorDraw, EmpiricalQuantiles };

struct ChainConfig {
  std::size_t iterations = 5000;
  // Defaults to iterations / 10 when unset.
  std::optional<std::size_t> burn_in;
  std::size_t thin = 1;
  std::uint64_t seed = 1;
  // Stream index within the seed; chain c of a multi-chain run uses c.
  std::uint64_t chain = 0;
  InitMode init = InitMode::EmpiricalQuantiles;
  LikelihoodKind kind = LikelihoodKind::Substitute;
  // Traces are recomputed from scratch this often and compared with the
  // incrementally maintained values.
  std::size_t recheck_every = 1000;

  std::size_t resolved_burn_in() const { return burn_in.value_or(iterations / 10); }
  void validate() const;
};

struct Draw {
  std::size_t sweep = 0;
  DyadicQuantileVector q;
  double log_prior = 0.0;
  double log_lik = 0.0;
  std::size_t accepted = 0;
  // Semiparametric chains only.
  double mu = 0.0;
  double sigma = 0.0;
};

struct DrawMatrix {
  std::size_t chain = 0;
  bool semiparametric = false;
  std::vector<Draw> rows;
  std::size_t total_accepted = 0;
  std::size_t total_proposed = 0;
  // Largest gap seen between incremental and recomputed log-prior/log-lik traces.
  double max_trace_drift = 0.0;

  std::size_t size() const { return rows.size(); }
  bool empty() const { return rows.empty(); }
  std::vector<DyadicQuantileVector> quantiles() const;
};

// Incremental Metropolis-Hastings state over the pyramid knots. Observations
// are counted against "edges": the state knots themselves, their image under a
// transform centering, or mu + sigma * Phi^{-1}(u) for the semiparametric model.
class ChainState {
 public:
  ChainState(const Dataset& data, const PriorSpec& spec, LikelihoodKind kind,
             const DyadicQuantileVector& start);
  // Semiparametric state over raw sorted data; the likelihood is the
  // interpolation likelihood on the raw scale.
  ChainState(std::span<const double> sorted_raw, const PriorSpec& spec, const DyadicQuantileVector& start,
             double mu, double sigma);

  const PriorSpec& spec() const { return *spec_; }
  LikelihoodKind kind() const { return kind_; }
  int level() const { return spec_->level(); }
  std::span<const double> state_knots() const { return knots_; }
  std::span<const double> edges() const { return edges_; }
  std::span<const std::size_t> counts() const { return counts_; }
  double log_prior() const { return log_prior_; }
  double log_lik() const { return log_lik_; }
  double mu() const { return mu_; }
  double sigma() const { return sigma_; }

  DyadicQuantileVector state() const;
  // Knots of Q itself (transform centering applied).
  DyadicQuantileVector quantiles() const;

  // Log acceptance ratio for moving site j (1..k-1) to `proposal`; the
  // uniform proposal density cancels at fixed neighbours.
  double log_ratio(std::size_t j, double proposal) const;
  // One sequential scan over j = 1..k-1; returns the number of accepted moves.
  std::size_t sweep(Rng& rng);

  // Semiparametric location/scale; rebuilds edges, counts and the likelihood.
  void set_location_scale(double mu, double sigma);

  // Recomputes both traces from scratch, returns the drift and resynchronises.
  double recheck();

 private:
  enum class EdgeKind { Unit, Transform, Normal };
  struct Move {
    double log_ratio;
    double d_prior;
    double d_lik;
    std::size_t left;
    std::size_t right;
    double edge;
  };

  ChainState(std::span<const double> sorted, EdgeKind edge_kind, const PriorSpec& spec, LikelihoodKind kind,
             const DyadicQuantileVector& start, double mu, double sigma);

  Move evaluate(std::size_t j, double proposal) const;
  double edge(double u) const;
  std::size_t count_le(std::size_t j, double x) const;
  void rebuild();
  double full_log_prior() const;
  double full_log_lik() const;

  std::span<const double> sorted_;
  EdgeKind edge_kind_;
  const PriorSpec* spec_;
  LikelihoodKind kind_;
  double mu_ = 0.0;
  double sigma_ = 1.0;
  double log_k_ = 0.0;
  std::vector<double> knots_;  // state knots, k + 1 entries
  std::vector<double> edges_;  // counting scale, k + 1 entries
  std::vector<std::size_t> counts_;
  std::vector<std::vector<std::size_t>> dependents_;
  double log_prior_ = 0.0;
  double log_lik_ = 0.0;
};

struct SweepResult {
  DyadicQuantileVector q;
  std::size_t accepted;
};

SweepResult mh_sweep(const DyadicQuantileVector& q, const Dataset& data, const PriorSpec& spec,
                     LikelihoodKind kind, Rng& rng);

// q_j = F_n^{-1}(j/k), nudged apart by 1e-9 where ties would break strictness.
DyadicQuantileVector empirical_start(const Dataset& data, int level);

DrawMatrix run_chain(const ChainConfig& config, const Dataset& data, const PriorSpec& spec);

// Chains c = 0..chains-1 use streams (seed, c); OpenMP across chains.
std::vector<DrawMatrix> run_chains(const ChainConfig& config, const Dataset& data, const PriorSpec& spec,
                                   std::size_t chains);
// Serial reference for run_chains.
std::vector<DrawMatrix> run_chains_serial(const ChainConfig& config, const Dataset& data,
                                          const PriorSpec& spec, std::size_t chains);

// Priors and random-walk steps for the normal-centred semiparametric model.
struct SemiparamConfig {
  double mu_prior_mean = 0.0;
  double mu_prior_sd = 100.0;
  double log_sigma_prior_mean = 0.0;
  double log_sigma_prior_sd = 10.0;
  double mu_step = 0.05;
  double log_sigma_step = 0.05;
  // Keep q_unif at the identity knots (parametric random-histogram inference).
  bool freeze_quantiles = false;
  std::optional<double> mu_start;
  std::optional<double> sigma_start;
};

DrawMatrix run_chain_semiparam(const ChainConfig& config, std::span<const double> raw_data,
                               const PriorSpec& spec, const SemiparamConfig& semi);

}  // namespace qpyramid
