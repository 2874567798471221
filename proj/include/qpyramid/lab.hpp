#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "qpyramid/likelihoods.hpp"
#include "qpyramid/priors.hpp"
#include "qpyramid/quantile.hpp"
#include "qpyramid/rng.hpp"
#include "qpyramid/sampler.hpp"

namespace qpyramid::lab {

// Data-generating law f0 on [0, 1].
class TrueLaw {
 public:
  enum class Kind { Uniform, YSquared, Linear };

  static TrueLaw uniform() { return TrueLaw(Kind::Uniform); }
  // Q0(y) = y^2, f0(x) = 1 / (2 sqrt(x)).
  static TrueLaw y_squared() { return TrueLaw(Kind::YSquared); }
  // f0(x) = 1/2 + x.
  static TrueLaw linear() { return TrueLaw(Kind::Linear); }
  static TrueLaw parse(const std::string& name);

  Kind kind() const { return kind_; }
  std::string name() const;
  double cdf(double x) const;
  double quantile(double y) const;
  double density(double x) const;
  double quantile_density(double y) const { return 1.0 / density(quantile(y)); }
  // int_a^b sqrt(c f0(x)) dx in closed form.
  double sqrt_density_integral(double a, double b, double c) const;
  std::vector<double> sample(std::size_t n, Rng& rng) const;

 private:
  explicit TrueLaw(Kind kind) : kind_(kind) {}
  Kind kind_;
};

// Piecewise-constant function on [0, 1]: values[i] on (breaks[i], breaks[i+1]].
struct PiecewiseConstant {
  std::vector<double> breaks;
  std::vector<double> values;

  double integral() const;
};

// Random-histogram density of a quantile vector (x axis).
PiecewiseConstant histogram_density(const DyadicQuantileVector& q);
// Quantile density k (q_j - q_{j-1}) on the y axis.
PiecewiseConstant quantile_density_function(const DyadicQuantileVector& q);

// int_0^1 q log(q / q0) dy over the merged breakpoints.
double kl_quantile_divergence(const PiecewiseConstant& q, const PiecewiseConstant& q0);

// {1 - int sqrt(f g)}^{1/2}; both inputs must integrate to 1 (to 1e-9).
double hellinger(const PiecewiseConstant& f, const PiecewiseConstant& g);
// Histogram density against a true law, exact per cell.
double hellinger(const PiecewiseConstant& f, const TrueLaw& f0);

// Covariances behind the Bernshtein-von Mises limit at k cells.
struct BridgeCovariance {
  explicit BridgeCovariance(std::size_t k);

  std::size_t k;
  // Cov{W0(i/k), W0(j/k)} = (i/k)(1 - j/k), i <= j.
  Eigen::MatrixXd bridge;
  // Multinomial cell covariance: diagonal k^{-1}(1 - k^{-1}), off-diagonal -k^{-2}.
  Eigen::MatrixXd multinomial;

  // Inverse of `multinomial` in closed form: 2k on the diagonal, k elsewhere.
  Eigen::MatrixXd multinomial_inverse() const;
  // Inverse of `bridge` in closed form: tridiagonal, 2k diagonal and -k neighbours.
  Eigen::MatrixXd bridge_inverse() const;
  bool positive_definite() const;
  double correlation(std::size_t i, std::size_t j) const;
};

struct ExperimentReport {
  std::string name;
  bool passed = false;
  nlohmann::json body;

  nlohmann::json to_json() const;
};

// ---------------------------------------------------------------------------
// Bernshtein-von Mises

struct BvmOptions {
  TrueLaw f0 = TrueLaw::uniform();
  std::size_t n = 2000;
  std::size_t k = 4;
  std::string prior = "uniform";
  ChainConfig chain;
  std::size_t chains = 4;
  std::uint64_t data_seed = 1;
  double sd_tolerance = 0.25;     // relative
  double mean_tolerance = 0.1;    // absolute, C units
  double corr_tolerance = 0.15;   // absolute
};

struct BvmResult {
  std::vector<double> mean;
  std::vector<double> sd;
  std::vector<double> target_sd;
  Eigen::MatrixXd correlation;
  Eigen::MatrixXd target_correlation;
  bool sd_pass = false;
  bool mean_pass = false;
  bool corr_pass = false;
  std::size_t draws = 0;

  bool passed() const { return sd_pass && mean_pass && corr_pass; }
  ExperimentReport report(const BvmOptions& options) const;
};

BvmResult bvm_experiment(const BvmOptions& options);

// ---------------------------------------------------------------------------
// Hellinger consistency

// k_n as a function of n.
struct KRule {
  std::string name;
  std::function<std::size_t(std::size_t)> cells;

  // 2^{ceil(log2 sqrt n)}
  static KRule sqrt_rule();
  // 2^{ceil(log2 n)}; violates k_n / n -> 0.
  static KRule linear_rule();
  static KRule constant(std::size_t k);
  static KRule parse(const std::string& text);
};

// Rejects grids on which k_n does not grow or k_n / n does not shrink (k_n < n required).
void validate_k_rule(const KRule& rule, const std::vector<std::size_t>& n_grid);

struct ConsistencyOptions {
  TrueLaw f0 = TrueLaw::y_squared();
  std::vector<std::size_t> n_grid{100, 400, 1600};
  KRule rule = KRule::sqrt_rule();
  std::string prior = "beta:c=2.5";
  ChainConfig chain;
  std::vector<std::uint64_t> seeds{1, 2, 3};
};

struct ConsistencyResult {
  // distance[s][i]: median posterior Hellinger distance for seed s at n_grid[i].
  std::vector<std::vector<double>> distance;
  std::vector<std::size_t> cells;
  std::vector<bool> decreasing;

  bool passed() const;
  ExperimentReport report(const ConsistencyOptions& options) const;
};

ConsistencyResult consistency_experiment(const ConsistencyOptions& options);

// ---------------------------------------------------------------------------
// Delta_m tail decay

struct DeltaDecayOptions {
  std::string prior = "uniform";
  std::vector<int> levels{3, 4, 5, 6, 7, 8, 9};
  std::size_t replicates = 5000;
  double epsilon = 0.5;
  std::uint64_t seed = 1;
};

struct DeltaDecayRow {
  int level;
  double tail;       // Pr{Delta_m >= eps}
  double tail_se;
  double bound;      // (1/eps^2) prod_l 2 c_l, c_l = max{E V^2, E (1-V)^2}
  double p95;        // 95th percentile of Delta_m
  double median_max_qdensity;
  double mean_max_qdensity;
  double mean_max_qdensity_se;
  bool within_bound;
};

struct DeltaDecayResult {
  std::vector<DeltaDecayRow> rows;
  bool passed() const;
  ExperimentReport report(const DeltaDecayOptions& options) const;
};

DeltaDecayResult delta_decay_experiment(const DeltaDecayOptions& options);
// Serial reference for the replicate kernel.
DeltaDecayResult delta_decay_experiment_serial(const DeltaDecayOptions& options);

// ---------------------------------------------------------------------------
// Prior mean centring

struct PriorMeanOptions {
  std::string prior = "beta:c=2.5";
  int level = 6;
  std::size_t draws = 20000;
  std::uint64_t seed = 1;
};

struct PriorMeanResult {
  std::vector<double> y;
  std::vector<double> mean;
  std::vector<double> se;
  std::vector<double> target;
  double max_abs_z = 0.0;
  bool passed() const { return max_abs_z <= 3.0; }
  ExperimentReport report(const PriorMeanOptions& options) const;
};

PriorMeanResult prior_mean_experiment(const PriorMeanOptions& options);

// Prior draws materialised as Q knots, replicate r from stream (seed, r); OpenMP over replicates.
std::vector<DyadicQuantileVector> sample_prior_many(const PriorSpec& spec, std::size_t count, std::uint64_t seed);
std::vector<DyadicQuantileVector> sample_prior_many_serial(const PriorSpec& spec, std::size_t count,
                                                           std::uint64_t seed);

}  // namespace qpyramid::lab
