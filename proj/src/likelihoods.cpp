#include "qpyramid/likelihoods.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qpyramid/errors.hpp"
#include "qpyramid/special.hpp"

namespace qpyramid {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_fact(std::size_t n) { return special::log_factorial(static_cast<double>(n)); }

}  // namespace

Dataset::Dataset(std::vector<double> unit_values, UnitAffineMap affine)
    : values_(std::move(unit_values)), affine_(affine) {
  for (double v : values_) {
    if (!(v >= 0.0 && v <= 1.0)) throw DataError("dataset values must lie in [0, 1]");
  }
  std::sort(values_.begin(), values_.end());
  has_ties_ = std::adjacent_find(values_.begin(), values_.end()) != values_.end();
}

std::size_t Dataset::count_le(double x) const {
  if (x <= 0.0) return 0;
  return static_cast<std::size_t>(std::upper_bound(values_.begin(), values_.end(), x) - values_.begin());
}

double Dataset::empirical_quantile(double y) const {
  if (values_.empty()) throw DataError("empirical quantile of an empty dataset");
  if (!(y >= 0.0 && y <= 1.0)) throw DomainError("empirical quantile level outside [0, 1]");
  const double n = static_cast<double>(values_.size());
  auto idx = static_cast<std::size_t>(std::ceil(y * n));
  idx = std::clamp<std::size_t>(idx, 1, values_.size());
  return values_[idx - 1];
}

CellCounts cell_counts(const Dataset& data, std::span<const double> knots) {
  CellCounts counts(knots.size() - 1);
  std::size_t below = 0;
  for (std::size_t j = 1; j < knots.size(); ++j) {
    const std::size_t upto = j + 1 == knots.size() ? data.size() : data.count_le(knots[j]);
    counts[j - 1] = upto - below;
    below = upto;
  }
  return counts;
}

CellCounts cell_counts(const Dataset& data, const DyadicQuantileVector& q) {
  return cell_counts(data, q.knots());
}

double log_lik_interp(const Dataset& data, const DyadicQuantileVector& q) {
  const auto knots = q.knots();
  const auto counts = cell_counts(data, knots);
  const double log_k = std::log(static_cast<double>(q.cells()));
  double total = 0.0;
  for (std::size_t j = 1; j < knots.size(); ++j) {
    const double gap = knots[j] - knots[j - 1];
    if (!(gap > 0.0)) throw DomainError("interpolation likelihood needs positive gaps");
    if (counts[j - 1] > 0) total += static_cast<double>(counts[j - 1]) * (-log_k - std::log(gap));
  }
  return total;
}

double log_lik_substitute(std::span<const std::size_t> counts) {
  std::size_t n = 0;
  double total = 0.0;
  for (std::size_t c : counts) {
    n += c;
    total -= log_fact(c);
  }
  return total + log_fact(n) - static_cast<double>(n) * std::log(static_cast<double>(counts.size()));
}

double log_lik_substitute(const Dataset& data, const DyadicQuantileVector& q) {
  return log_lik_substitute(cell_counts(data, q));
}

double log_lik(const Dataset& data, const DyadicQuantileVector& q, LikelihoodKind kind) {
  return kind == LikelihoodKind::Interp ? log_lik_interp(data, q) : log_lik_substitute(data, q);
}

double kappa_bar(const Dataset& data, double q, double a, double b) {
  if (!(a < q && q < b)) throw DomainError("kappa: q must lie strictly inside (a, b)");
  const auto left = static_cast<double>(data.count_between(a, q));
  const auto right = static_cast<double>(data.count_between(q, b));
  double total = 0.0;
  if (left > 0) total += left * std::log(0.5 * (b - a) / (q - a));
  if (right > 0) total += right * std::log(0.5 * (b - a) / (b - q));
  return total;
}

double kappa_sub(std::size_t left, std::size_t right) {
  const std::size_t n = left + right;
  return log_fact(n) - log_fact(left) - log_fact(right) - static_cast<double>(n) * std::log(2.0);
}

double kappa_sub(const Dataset& data, double q, double a, double b) {
  if (!(a < q && q < b)) throw DomainError("kappa: q must lie strictly inside (a, b)");
  return kappa_sub(data.count_between(a, q), data.count_between(q, b));
}

double factorized_log_lik(const Dataset& data, const DyadicQuantileVector& q, LikelihoodKind kind) {
  const auto knots = q.knots();
  double total = 0.0;
  for (std::size_t j : pyramid::creation_order(q.level())) {
    const std::size_t h = pyramid::parent_offset(j);
    const double a = knots[j - h];
    const double b = knots[j + h];
    total += kind == LikelihoodKind::Interp ? kappa_bar(data, knots[j], a, b)
                                            : kappa_sub(data, knots[j], a, b);
  }
  return total;
}

double lambda_bar(const DyadicQuantileVector& q, const std::function<double(double)>& cdf) {
  const double k = static_cast<double>(q.cells());
  double total = 0.0;
  for (std::size_t j = 1; j <= q.cells(); ++j) {
    const double mass = cdf(q.knot(j)) - cdf(q.knot(j - 1));
    if (mass > 0.0) total += mass * std::log(q.gap(j) * k);
  }
  return total;
}

double lambda_kl(const DyadicQuantileVector& q, const std::function<double(double)>& cdf) {
  const double k = static_cast<double>(q.cells());
  double total = 0.0;
  for (std::size_t j = 1; j <= q.cells(); ++j) {
    const double mass = cdf(q.knot(j)) - cdf(q.knot(j - 1));
    if (mass > 0.0) total += mass * std::log(mass * k);
  }
  return total;
}

double approx_log_lik_substitute(std::span<const std::size_t> counts) {
  std::size_t n = 0;
  for (std::size_t c : counts) {
    if (c == 0) throw DomainError("substitute-likelihood expansion needs every cell non-empty");
    n += c;
  }
  const double k = static_cast<double>(counts.size());
  const double nn = static_cast<double>(n);
  double quad = 0.0;
  double logs = 0.0;
  for (std::size_t c : counts) {
    const double p = static_cast<double>(c) / nn;
    quad += (p - 1.0 / k) * (p - 1.0 / k);
    logs += std::log(p);
  }
  return -0.5 * nn * k * quad + 0.5 * logs;
}

double approx_log_lik_substitute(const Dataset& data, const DyadicQuantileVector& q) {
  return approx_log_lik_substitute(cell_counts(data, q));
}

double log_lik_semiparam_knots(double mu, double sigma, std::span<const double> unif_knots,
                               std::span<const double> sorted_raw) {
  if (!(sigma > 0.0)) throw DomainError("semiparametric likelihood needs sigma > 0");
  const std::size_t k = unif_knots.size() - 1;
  const double log_k = std::log(static_cast<double>(k));
  const double n = static_cast<double>(sorted_raw.size());
  double total = sorted_raw.empty() ? 0.0 : -n * std::log(sigma);

  std::size_t below = 0;
  double z_prev = special::normal_quantile(kSemiparamClip);
  for (std::size_t j = 1; j <= k; ++j) {
    std::size_t upto = sorted_raw.size();
    double z = special::normal_quantile(1.0 - kSemiparamClip);
    if (j < k) {
      const double zj = special::normal_quantile(unif_knots[j]);
      const double edge = mu + sigma * zj;
      upto = static_cast<std::size_t>(std::upper_bound(sorted_raw.begin(), sorted_raw.end(), edge) -
                                      sorted_raw.begin());
      z = zj;
    }
    const std::size_t count = upto - below;
    below = upto;
    if (count == 0) {
      z_prev = z;
      continue;
    }
    const double gap = z - z_prev;
    if (!(gap > 0.0)) return kNegInf;
    total += static_cast<double>(count) * (-log_k - std::log(gap));
    z_prev = z;
  }
  return total;
}

double log_lik_semiparam(double mu, double sigma, const DyadicQuantileVector& q_unif,
                         std::span<const double> sorted_raw) {
  if (!(sigma > 0.0)) throw DomainError("semiparametric likelihood needs sigma > 0");
  if (!std::is_sorted(sorted_raw.begin(), sorted_raw.end())) {
    throw DataError("semiparametric likelihood needs sorted raw data");
  }
  return log_lik_semiparam_knots(mu, sigma, q_unif.knots(), sorted_raw);
}

}  // namespace qpyramid
