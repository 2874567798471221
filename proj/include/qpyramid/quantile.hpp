#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace qpyramid {

// Adjacent knots closer than this are rejected so every likelihood term stays finite.
inline constexpr double kMinGap = 1e-12;
inline constexpr int kMaxLevel = 24;

// Interior quantiles q_1 < ... < q_{k-1} of a level-m pyramid, k = 2^m.
// q_0 = 0 and q_k = 1 are implicit.
class DyadicQuantileVector {
 public:
  DyadicQuantileVector(int level, std::vector<double> values);

  // q_j = j / 2^level.
  static DyadicQuantileVector identity(int level);

  int level() const { return level_; }
  std::size_t cells() const { return std::size_t{1} << level_; }
  std::span<const double> values() const { return values_; }

  // Knot value with the boundary convention: knot(0) = 0, knot(k) = 1.
  double knot(std::size_t j) const;
  // q_j - q_{j-1} for j in 1..k.
  double gap(std::size_t j) const { return knot(j) - knot(j - 1); }

  // All k + 1 knots including both endpoints.
  std::vector<double> knots() const;

  friend bool operator==(const DyadicQuantileVector&, const DyadicQuantileVector&) = default;

 private:
  int level_;
  std::vector<double> values_;
};

// Throws DomainError unless 0 < v_1 < ... < v_{k-1} < 1 with gaps >= kMinGap.
void validate_knots(std::span<const double> interior);

// Continuous piecewise-linear quantile function through the dyadic knots.
class PiecewiseQuantileFunction {
 public:
  explicit PiecewiseQuantileFunction(const DyadicQuantileVector& q);

  std::size_t cells() const { return knots_.size() - 1; }
  std::span<const double> knots() const { return knots_; }

  // Cell index j in 1..k holding x under the (q_{j-1}, q_j] convention; x = 0 is in cell 1.
  std::size_t cell_of_value(double x) const;

 private:
  std::vector<double> knots_;
};

double quantile_at(const PiecewiseQuantileFunction& q, double y);
double cdf_at(const PiecewiseQuantileFunction& q, double x);
// Random-histogram density (1/k) / (q_j - q_{j-1}) on (q_{j-1}, q_j].
double density_at(const PiecewiseQuantileFunction& q, double x);
// Quantile density k (q_j - q_{j-1}) on ((j-1)/k, j/k].
double quantile_density(const PiecewiseQuantileFunction& q, double y);

// Inserts the next level: child 2i+1 = left (1 - V_i) + right V_i, parents copied.
DyadicQuantileVector refine(const DyadicQuantileVector& q, std::span<const double> weights);

// Delta_m: widest cell including the two boundary cells.
double max_increment(const DyadicQuantileVector& q);

// Affine map from the raw data scale onto [0, 1].
class UnitAffineMap {
 public:
  UnitAffineMap() = default;
  UnitAffineMap(double lo, double hi);

  // Range [min - pad, max + pad] with pad = fraction * (max - min).
  static UnitAffineMap padded(double min, double max, double fraction = 1e-3);

  double lo() const { return lo_; }
  double hi() const { return hi_; }
  double to_unit(double x) const { return (x - lo_) / (hi_ - lo_); }
  double to_raw(double u) const { return lo_ + u * (hi_ - lo_); }

 private:
  double lo_ = 0.0;
  double hi_ = 1.0;
};

namespace pyramid {

// Level (1..m) at which interior index j of a level-m pyramid is created.
int node_level(std::size_t j, int m);
// Half-distance to the parents: parents of j are j - h and j + h.
std::size_t parent_offset(std::size_t j);
// Interior indices in top-down creation order (median first).
std::vector<std::size_t> creation_order(int m);
// Nodes whose prior factor involves q_j: j itself and every descendant that
// has j as one of its parents.
std::vector<std::size_t> dependent_nodes(std::size_t j, int m);

}  // namespace pyramid

}  // namespace qpyramid
