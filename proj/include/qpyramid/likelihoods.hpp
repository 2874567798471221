#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "qpyramid/quantile.hpp"

namespace qpyramid {

// Sorted observations on [0, 1] with the map back to the raw scale.
class Dataset {
 public:
  Dataset() : Dataset(std::vector<double>{}) {}
  explicit Dataset(std::vector<double> unit_values, UnitAffineMap affine = {});

  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  const UnitAffineMap& affine() const { return affine_; }
  bool has_ties() const { return has_ties_; }

  // #{x_i <= x}; the boundary point 0 counts as closed, so count_le(0) = 0
  // and observations at 0 fall into the first cell.
  std::size_t count_le(double x) const;
  // M_n(a, b) = #{a < x_i <= b} with the same boundary convention at 0.
  std::size_t count_between(double a, double b) const { return count_le(b) - count_le(a); }

  // F_n^{-1}(y) = inf{t : F_n(t) >= y}.
  double empirical_quantile(double y) const;

 private:
  std::vector<double> values_;
  UnitAffineMap affine_;
  bool has_ties_ = false;
};

enum class LikelihoodKind { Interp, Substitute };

using CellCounts = std::vector<std::size_t>;

// N_j = #{q_{j-1} < x_i <= q_j}, j = 1..k.
CellCounts cell_counts(const Dataset& data, const DyadicQuantileVector& q);
CellCounts cell_counts(const Dataset& data, std::span<const double> knots);

// Linear-interpolation likelihood: sum_j N_j [-log k - log(q_j - q_{j-1})].
double log_lik_interp(const Dataset& data, const DyadicQuantileVector& q);
// Multinomial substitute likelihood: log n! - sum log N_j! - n log k.
double log_lik_substitute(const Dataset& data, const DyadicQuantileVector& q);
double log_lik_substitute(std::span<const std::size_t> counts);
double log_lik(const Dataset& data, const DyadicQuantileVector& q, LikelihoodKind kind);

// Single pyramid factor for knot q inside its parent interval (a, b), log scale.
double kappa_bar(const Dataset& data, double q, double a, double b);
double kappa_sub(const Dataset& data, double q, double a, double b);
// kappa_sub from the two counts directly.
double kappa_sub(std::size_t left, std::size_t right);

// Product of kappa factors over the pyramid (root on (0, 1), then each node on its parents).
double factorized_log_lik(const Dataset& data, const DyadicQuantileVector& q, LikelihoodKind kind);

// lambda-bar(q) = sum_j F0(q_{j-1}, q_j] log{(q_j - q_{j-1}) / (1/k)}.
double lambda_bar(const DyadicQuantileVector& q, const std::function<double(double)>& cdf);
// lambda(q) = sum_j F0(q_{j-1}, q_j] log{F0(q_{j-1}, q_j] / (1/k)}.
double lambda_kl(const DyadicQuantileVector& q, const std::function<double(double)>& cdf);

// Gaussian-type expansion of the substitute likelihood; rejects empty cells.
double approx_log_lik_substitute(std::span<const std::size_t> counts);
double approx_log_lik_substitute(const Dataset& data, const DyadicQuantileVector& q);

// Extreme cells of the semiparametric likelihood use these in place of 0 and 1.
inline constexpr double kSemiparamClip = 1e-8;

// Normal-centred semiparametric likelihood on the raw scale:
// -n log sigma + sum_j N_j [-log k - log(z_j - z_{j-1})], z_j = Phi^{-1}(q_unif_j),
// counting raw data in (mu + sigma z_{j-1}, mu + sigma z_j].
double log_lik_semiparam(double mu, double sigma, const DyadicQuantileVector& q_unif,
                         std::span<const double> sorted_raw);
// Same, from full knots (0, u_1, ..., u_{k-1}, 1); returns -inf instead of throwing
// when an extreme gap is not positive.
double log_lik_semiparam_knots(double mu, double sigma, std::span<const double> unif_knots,
                               std::span<const double> sorted_raw);

}  // namespace qpyramid
