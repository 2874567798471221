#include "qpyramid/summaries.hpp"

#include <algorithm>
#include <cmath>

#include "qpyramid/errors.hpp"
#include "qpyramid/parallel.hpp"

namespace qpyramid {

std::vector<double> default_grid(std::size_t points) {
  std::vector<double> grid(points);
  for (std::size_t i = 0; i < points; ++i) {
    grid[i] = static_cast<double>(i + 1) / static_cast<double>(points + 1);
  }
  return grid;
}

double sorted_quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw DomainError("quantile of an empty sample");
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double t = pos - static_cast<double>(lo);
  return sorted[lo] + t * (sorted[hi] - sorted[lo]);
}

namespace {

SummaryGrid make_grid(std::span<const double> grid, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
  SummaryGrid out;
  out.grid.assign(grid.begin(), grid.end());
  out.mean.resize(grid.size());
  out.median.resize(grid.size());
  out.lower.resize(grid.size());
  out.upper.resize(grid.size());
  out.alpha = alpha;
  return out;
}

void summarize_point(SummaryGrid& out, std::size_t i, std::vector<double>& buffer, std::size_t draws,
                     const CurveEval& eval) {
  const double x = out.grid[i];
  double sum = 0.0;
  for (std::size_t d = 0; d < draws; ++d) {
    buffer[d] = eval(d, x);
    sum += buffer[d];
  }
  std::sort(buffer.begin(), buffer.end());
  out.mean[i] = sum / static_cast<double>(draws);
  out.median[i] = sorted_quantile(buffer, 0.5);
  out.lower[i] = sorted_quantile(buffer, 0.5 * out.alpha);
  out.upper[i] = sorted_quantile(buffer, 1.0 - 0.5 * out.alpha);
}

std::vector<PiecewiseQuantileFunction> as_functions(std::span<const DyadicQuantileVector> draws) {
  std::vector<PiecewiseQuantileFunction> fns;
  fns.reserve(draws.size());
  for (const auto& d : draws) fns.emplace_back(d);
  return fns;
}

}  // namespace

SummaryGrid summarize_curves(std::size_t draws, std::span<const double> grid, const CurveEval& eval,
                             double alpha) {
  if (draws == 0) throw DomainError("posterior summary needs at least one draw");
  SummaryGrid out = make_grid(grid, alpha);
  const auto points = static_cast<long long>(grid.size());
#pragma omp parallel num_threads(parallel::worker_count())
  {
    std::vector<double> buffer(draws);
#pragma omp for schedule(static)
    for (long long i = 0; i < points; ++i) summarize_point(out, static_cast<std::size_t>(i), buffer, draws, eval);
  }
  return out;
}

SummaryGrid summarize_curves_serial(std::size_t draws, std::span<const double> grid, const CurveEval& eval,
                                    double alpha) {
  if (draws == 0) throw DomainError("posterior summary needs at least one draw");
  SummaryGrid out = make_grid(grid, alpha);
  std::vector<double> buffer(draws);
  for (std::size_t i = 0; i < grid.size(); ++i) summarize_point(out, i, buffer, draws, eval);
  return out;
}

SummaryGrid posterior_summary(std::span<const DyadicQuantileVector> draws, std::span<const double> grid,
                              double alpha) {
  const auto fns = as_functions(draws);
  return summarize_curves(fns.size(), grid, [&](std::size_t d, double y) { return quantile_at(fns[d], y); },
                          alpha);
}

SummaryGrid posterior_summary_serial(std::span<const DyadicQuantileVector> draws,
                                     std::span<const double> grid, double alpha) {
  const auto fns = as_functions(draws);
  return summarize_curves_serial(fns.size(), grid,
                                 [&](std::size_t d, double y) { return quantile_at(fns[d], y); }, alpha);
}

double quantile_mean(const PiecewiseQuantileFunction& q) {
  const auto knots = q.knots();
  double sum = 0.0;
  for (std::size_t j = 1; j < knots.size(); ++j) sum += 0.5 * (knots[j - 1] + knots[j]);
  return sum / static_cast<double>(q.cells());
}

double lorenz(const PiecewiseQuantileFunction& q, double y) {
  if (!(y >= 0.0 && y <= 1.0)) throw DomainError("Lorenz argument outside [0, 1]");
  const double total = quantile_mean(q);
  if (!(total > 0.0)) throw DomainError("Lorenz curve undefined when the mean is zero");
  const auto knots = q.knots();
  const double k = static_cast<double>(q.cells());
  const double width = 1.0 / k;
  double partial = 0.0;
  const auto full = std::min(static_cast<std::size_t>(std::floor(y * k)), q.cells());
  for (std::size_t j = 1; j <= full; ++j) partial += 0.5 * width * (knots[j - 1] + knots[j]);
  if (full < q.cells()) {
    const double t = y - static_cast<double>(full) * width;
    if (t > 0.0) partial += 0.5 * t * (knots[full] + quantile_at(q, y));
  }
  return partial / total;
}

double lorenz_area(const PiecewiseQuantileFunction& q) {
  // int_0^1 L = int_0^1 (1 - u) Q(u) du / int_0^1 Q; the integrand is quadratic
  // per cell, so Simpson's rule is exact.
  const double total = quantile_mean(q);
  if (!(total > 0.0)) throw DomainError("Lorenz curve undefined when the mean is zero");
  const auto knots = q.knots();
  const double k = static_cast<double>(q.cells());
  double acc = 0.0;
  for (std::size_t j = 1; j < knots.size(); ++j) {
    const double a = static_cast<double>(j - 1) / k;
    const double b = static_cast<double>(j) / k;
    const double m = 0.5 * (a + b);
    const double qm = 0.5 * (knots[j - 1] + knots[j]);
    acc += (b - a) / 6.0 * ((1.0 - a) * knots[j - 1] + 4.0 * (1.0 - m) * qm + (1.0 - b) * knots[j]);
  }
  return acc / total;
}

GiniPair gini(const PiecewiseQuantileFunction& q) {
  const double area = lorenz_area(q);
  return {2.0 * (1.0 - area), 2.0 * (0.5 - area)};
}

namespace {

std::size_t paired_count(std::size_t a, std::size_t b) {
  const std::size_t n = std::min(a, b);
  if (n == 0) throw DomainError("two-sample summary needs draws for both samples");
  return n;
}

}  // namespace

SummaryGrid doksum_shift(std::span<const DyadicQuantileVector> q1_draws,
                         std::span<const DyadicQuantileVector> q2_draws, std::span<const double> x_grid,
                         double alpha) {
  const std::size_t n = paired_count(q1_draws.size(), q2_draws.size());
  const auto f1 = as_functions(q1_draws.first(n));
  const auto f2 = as_functions(q2_draws.first(n));
  return summarize_curves(
      n, x_grid, [&](std::size_t d, double x) { return quantile_at(f2[d], cdf_at(f1[d], x)) - x; }, alpha);
}

SummaryGrid parzen_comparison(std::span<const DyadicQuantileVector> q1_draws,
                              std::span<const DyadicQuantileVector> q2_draws, std::span<const double> y_grid,
                              double alpha) {
  const std::size_t n = paired_count(q1_draws.size(), q2_draws.size());
  const auto f1 = as_functions(q1_draws.first(n));
  const auto f2 = as_functions(q2_draws.first(n));
  return summarize_curves(
      n, y_grid, [&](std::size_t d, double y) { return cdf_at(f2[d], quantile_at(f1[d], y)); }, alpha);
}

}  // namespace qpyramid
