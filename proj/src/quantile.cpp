#include "qpyramid/quantile.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "qpyramid/errors.hpp"

namespace qpyramid {

void validate_knots(std::span<const double> interior) {
  double prev = 0.0;
  for (std::size_t i = 0; i < interior.size(); ++i) {
    const double v = interior[i];
    if (!std::isfinite(v) || !(v - prev >= kMinGap)) {
      throw DomainError("quantile knots must be strictly increasing in (0, 1); violation at q_" +
                        std::to_string(i + 1));
    }
    prev = v;
  }
  if (!(1.0 - prev >= kMinGap)) throw DomainError("last quantile knot must be below 1");
}

DyadicQuantileVector::DyadicQuantileVector(int level, std::vector<double> values)
    : level_(level), values_(std::move(values)) {
  if (level < 1 || level > kMaxLevel) throw DomainError("pyramid level must be in 1..24");
  if (values_.size() != (std::size_t{1} << level) - 1) {
    throw DomainError("expected 2^level - 1 interior quantiles, got " +
                      std::to_string(values_.size()));
  }
  validate_knots(values_);
}

DyadicQuantileVector DyadicQuantileVector::identity(int level) {
  if (level < 1 || level > kMaxLevel) throw DomainError("pyramid level must be in 1..24");
  const std::size_t k = std::size_t{1} << level;
  std::vector<double> v(k - 1);
  for (std::size_t j = 1; j < k; ++j) v[j - 1] = static_cast<double>(j) / static_cast<double>(k);
  return DyadicQuantileVector(level, std::move(v));
}

double DyadicQuantileVector::knot(std::size_t j) const {
  if (j == 0) return 0.0;
  if (j >= cells()) return 1.0;
  return values_[j - 1];
}

std::vector<double> DyadicQuantileVector::knots() const {
  std::vector<double> out;
  out.reserve(values_.size() + 2);
  out.push_back(0.0);
  out.insert(out.end(), values_.begin(), values_.end());
  out.push_back(1.0);
  return out;
}

PiecewiseQuantileFunction::PiecewiseQuantileFunction(const DyadicQuantileVector& q)
    : knots_(q.knots()) {}

std::size_t PiecewiseQuantileFunction::cell_of_value(double x) const {
  const auto it = std::lower_bound(knots_.begin(), knots_.end(), x);
  const auto j = static_cast<std::size_t>(it - knots_.begin());
  return std::clamp<std::size_t>(j, 1, cells());
}

namespace {

void require_unit(double v, const char* what) {
  if (std::isnan(v) || v < 0.0 || v > 1.0) throw DomainError(std::string(what) + " outside [0, 1]");
}

// Cell j in 1..k with y in ((j-1)/k, j/k]; y = 0 maps to cell 1.
std::size_t cell_of_level(double y, std::size_t k) {
  const double scaled = y * static_cast<double>(k);
  const auto j = static_cast<std::size_t>(std::ceil(scaled));
  return std::clamp<std::size_t>(j, 1, k);
}

}  // namespace

double quantile_at(const PiecewiseQuantileFunction& q, double y) {
  require_unit(y, "quantile level");
  const auto knots = q.knots();
  const std::size_t k = q.cells();
  const double scaled = y * static_cast<double>(k);
  const auto j = static_cast<std::size_t>(std::floor(scaled));
  if (j >= k) return 1.0;
  const double t = scaled - static_cast<double>(j);
  if (t == 0.0) return knots[j];
  return knots[j] + t * (knots[j + 1] - knots[j]);
}

double cdf_at(const PiecewiseQuantileFunction& q, double x) {
  require_unit(x, "cdf argument");
  const auto knots = q.knots();
  const std::size_t j = q.cell_of_value(x);
  const double lo = knots[j - 1];
  const double hi = knots[j];
  if (x == hi) return static_cast<double>(j) / static_cast<double>(q.cells());
  return (static_cast<double>(j - 1) + (x - lo) / (hi - lo)) / static_cast<double>(q.cells());
}

double density_at(const PiecewiseQuantileFunction& q, double x) {
  require_unit(x, "density argument");
  const auto knots = q.knots();
  const std::size_t j = q.cell_of_value(x);
  return 1.0 / (static_cast<double>(q.cells()) * (knots[j] - knots[j - 1]));
}

double quantile_density(const PiecewiseQuantileFunction& q, double y) {
  require_unit(y, "quantile level");
  const auto knots = q.knots();
  const std::size_t j = cell_of_level(y, q.cells());
  return static_cast<double>(q.cells()) * (knots[j] - knots[j - 1]);
}

DyadicQuantileVector refine(const DyadicQuantileVector& q, std::span<const double> weights) {
  const std::size_t k = q.cells();
  if (weights.size() != k) throw DomainError("refine needs one weight per cell");
  std::vector<double> out(2 * k - 1);
  for (std::size_t i = 0; i < k; ++i) {
    const double v = weights[i];
    if (!(v > 0.0 && v < 1.0)) throw DomainError("refine weight outside (0, 1)");
    const double left = q.knot(i);
    const double right = q.knot(i + 1);
    out[2 * i] = left * (1.0 - v) + right * v;
    if (i + 1 < k) out[2 * i + 1] = right;
  }
  return DyadicQuantileVector(q.level() + 1, std::move(out));
}

double max_increment(const DyadicQuantileVector& q) {
  double widest = 0.0;
  for (std::size_t j = 1; j <= q.cells(); ++j) widest = std::max(widest, q.gap(j));
  return widest;
}

UnitAffineMap::UnitAffineMap(double lo, double hi) : lo_(lo), hi_(hi) {
  if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi)) {
    throw DomainError("affine map needs finite lo < hi");
  }
}

UnitAffineMap UnitAffineMap::padded(double min, double max, double fraction) {
  if (!(max > min)) throw DataError("data range has zero width");
  const double pad = fraction * (max - min);
  return UnitAffineMap(min - pad, max + pad);
}

namespace pyramid {

int node_level(std::size_t j, int m) { return m - std::countr_zero(j); }

std::size_t parent_offset(std::size_t j) { return std::size_t{1} << std::countr_zero(j); }

std::vector<std::size_t> creation_order(int m) {
  std::vector<std::size_t> order;
  order.reserve((std::size_t{1} << m) - 1);
  for (int l = 1; l <= m; ++l) {
    const std::size_t step = std::size_t{1} << (m - l);
    for (std::size_t j = step; j < (std::size_t{1} << m); j += 2 * step) order.push_back(j);
  }
  return order;
}

std::vector<std::size_t> dependent_nodes(std::size_t j, int m) {
  std::vector<std::size_t> nodes{j};
  const int l = node_level(j, m);
  const std::size_t k = std::size_t{1} << m;
  for (int deeper = l + 1; deeper <= m; ++deeper) {
    const std::size_t h = std::size_t{1} << (m - deeper);
    if (j > h) nodes.push_back(j - h);
    if (j + h < k) nodes.push_back(j + h);
  }
  return nodes;
}

}  // namespace pyramid

}  // namespace qpyramid
