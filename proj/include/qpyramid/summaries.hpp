#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "qpyramid/quantile.hpp"

namespace qpyramid {

// Pointwise posterior summary of a curve over a grid.
struct SummaryGrid {
  std::vector<double> grid;
  std::vector<double> mean;
  std::vector<double> median;
  std::vector<double> lower;
  std::vector<double> upper;
  double alpha = 0.05;
};

// n equispaced points i / (n + 1), i = 1..n.
std::vector<double> default_grid(std::size_t points = 512);

// Empirical quantile (linear interpolation between order statistics) of sorted values.
double sorted_quantile(std::span<const double> sorted, double p);

// eval(d, x) is curve d at grid point x. The OpenMP kernel parallelises over
// grid points; the serial kernel is the reference it is tested against.
using CurveEval = std::function<double(std::size_t draw, double x)>;
SummaryGrid summarize_curves(std::size_t draws, std::span<const double> grid, const CurveEval& eval,
                             double alpha);
SummaryGrid summarize_curves_serial(std::size_t draws, std::span<const double> grid, const CurveEval& eval,
                                    double alpha);

SummaryGrid posterior_summary(std::span<const DyadicQuantileVector> draws, std::span<const double> grid,
                              double alpha);
SummaryGrid posterior_summary_serial(std::span<const DyadicQuantileVector> draws,
                                     std::span<const double> grid, double alpha);

// int_0^1 Q(u) du, exact for piecewise-linear Q.
double quantile_mean(const PiecewiseQuantileFunction& q);
// L(y) = int_0^y Q / int_0^1 Q.
double lorenz(const PiecewiseQuantileFunction& q, double y);
// int_0^1 L(y) dy in closed form.
double lorenz_area(const PiecewiseQuantileFunction& q);

struct GiniPair {
  double literal;   // 2 int_0^1 {1 - L(y)} dy
  double standard;  // 2 int_0^1 {y - L(y)} dy
};
GiniPair gini(const PiecewiseQuantileFunction& q);

// D(x) = Q2(F1(x)) - x per paired draw; pairs truncate to the shorter list.
SummaryGrid doksum_shift(std::span<const DyadicQuantileVector> q1_draws,
                         std::span<const DyadicQuantileVector> q2_draws, std::span<const double> x_grid,
                         double alpha);
// pi(y) = F2(Q1(y)) per paired draw.
SummaryGrid parzen_comparison(std::span<const DyadicQuantileVector> q1_draws,
                              std::span<const DyadicQuantileVector> q2_draws, std::span<const double> y_grid,
                              double alpha);

}  // namespace qpyramid
