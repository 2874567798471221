#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qpyramid/quantile.hpp"
#include "qpyramid/rng.hpp"

namespace qpyramid {

// Samplers clamp interpolation weights into [kWeightClamp, 1 - kWeightClamp].
inline constexpr double kWeightClamp = 1e-12;

enum class VFamily { SymmetricBeta, AsymmetricBeta, MedianDirichlet, Uniform, PointMass };

// Law of one interpolation weight V_{m,j} on (0, 1).
class VLaw {
 public:
  // Beta(a/2, a/2).
  static VLaw symmetric_beta(double a);
  static VLaw beta(double alpha, double beta);
  // Law of the median of a Dirichlet process with concentration a and uniform base.
  static VLaw median_dirichlet(double a);
  static VLaw uniform();
  // Degenerate law; log_density is 0 at the atom and -inf elsewhere.
  static VLaw point_mass(double v);

  VFamily family() const { return family_; }
  double first() const { return p1_; }
  double second() const { return p2_; }

  double sample(Rng& rng) const;
  double log_density(double v) const;
  double mean() const;
  // E V^2 and E (1 - V)^2.
  double second_moment() const;
  double complement_second_moment() const;

 private:
  VLaw(VFamily family, double p1, double p2) : family_(family), p1_(p1), p2_(p2) {}

  VFamily family_;
  double p1_;
  double p2_;
};

// Level -> concentration a_m.
class LevelSchedule {
 public:
  static LevelSchedule constant(double a);
  // a_m = c m^3
  static LevelSchedule cubic(double c);
  // a_m = table[m - 1]
  static LevelSchedule table(std::vector<double> values);

  double at(int level) const;
  std::string describe() const;

 private:
  enum class Kind { Constant, Cubic, Table };
  LevelSchedule(Kind kind, double scale, std::vector<double> table);

  Kind kind_;
  double scale_;
  std::vector<double> table_;
};

// Prior guess Q_null for centering; strictly increasing from 0 to 1.
class NullQuantile {
 public:
  NullQuantile(std::string name, std::function<double(double)> fn);

  static NullQuantile identity();
  static NullQuantile y_squared();
  static NullQuantile square_root();
  // Normal quantile function rescaled onto [0, 1] (tails cut at 1e-3).
  static NullQuantile normal();
  // Linear interpolation through equispaced interior knots (one per line in a file).
  static NullQuantile from_knots(std::string name, std::vector<double> interior_knots);
  static NullQuantile builtin(const std::string& name);

  const std::string& name() const { return name_; }
  double operator()(double y) const { return fn_(y); }

 private:
  std::string name_;
  std::function<double(double)> fn_;
};

enum class LawKind { Beta, Uniform, MedianDirichlet, MedianDirichletAdaptive, PointMass };
enum class CenterMode { MeanMatching, Transform };

// Full pyramid prior to a fixed level: one VLaw per node.
class PriorSpec {
 public:
  static PriorSpec beta(int level, LevelSchedule schedule);
  static PriorSpec uniform(int level);
  static PriorSpec median_dirichlet(int level, LevelSchedule schedule);
  // a_{m,j} = b_m / (parent gap), b_m = b m^3.
  static PriorSpec median_dirichlet_adaptive(int level, double b);
  static PriorSpec point_mass(int level, double v);

  // Parses `beta:c=2.5`, `beta-const:a=2`, `uniform`, `md:c=1`, `md-adaptive:b=1`,
  // with optional `,center=<builtin|file>` and `,mode=mean|transform`.
  static PriorSpec parse(const std::string& text, int level);

  // Centers the prior at Q_null. MeanMatching sets each Beta node mean so that
  // E Q_m(j/2^m) = Q_null(j/2^m); Transform keeps the symmetric pyramid and
  // maps its knots through Q_null.
  PriorSpec centered(NullQuantile center, CenterMode mode) const;

  int level() const { return level_; }
  LawKind kind() const { return kind_; }
  const std::optional<NullQuantile>& center() const { return center_; }
  CenterMode center_mode() const { return mode_; }
  bool transforms_knots() const { return center_.has_value() && mode_ == CenterMode::Transform; }
  std::string describe() const;

  // Law of node j (interior index at this spec's level) given its parent gap.
  VLaw law_for(std::size_t node, double parent_gap) const;

  // Applies the transform centering (if any) to a pyramid state.
  std::vector<double> materialize_knots(std::span<const double> state_knots) const;

 private:
  PriorSpec(int level, LawKind kind, LevelSchedule schedule, double param);

  int level_;
  LawKind kind_;
  LevelSchedule schedule_;
  double param_;  // b for md-adaptive, atom for point mass
  std::optional<NullQuantile> center_;
  CenterMode mode_ = CenterMode::MeanMatching;
  std::vector<double> node_means_;  // per interior node when mean-matched
  std::string text_;
};

// Draws the pyramid top-down. The result is the pyramid state (before any
// transform centering; see PriorSpec::materialize_knots).
DyadicQuantileVector sample_prior(const PriorSpec& spec, Rng& rng);
// The same draw as all k + 1 knots but without the minimum-gap floor, so adjacent
// knots may coincide in floating point. For diagnostics of deep or rough pyramids.
std::vector<double> sample_prior_knots(const PriorSpec& spec, Rng& rng);

// Log prior factor of a single node; knots are the k + 1 full knots.
double node_log_prior(const PriorSpec& spec, std::span<const double> knots, std::size_t node);
double log_prior_density(const PriorSpec& spec, const DyadicQuantileVector& q);

// Mean of node (level, j) needed to centre at Q_null; j odd, level-local.
double centering_mean(const NullQuantile& center, int level, std::size_t j);
// Means for every interior node of a level-m pyramid, indexed by q_j (j = 1..k-1).
std::vector<double> centering_means(const NullQuantile& center, int m);

// Q(y) = Q_null(Q_unif(y)).
class TransformedQuantile {
 public:
  TransformedQuantile(PiecewiseQuantileFunction unif, NullQuantile center)
      : unif_(std::move(unif)), center_(std::move(center)) {}
  double operator()(double y) const { return center_(quantile_at(unif_, y)); }

 private:
  PiecewiseQuantileFunction unif_;
  NullQuantile center_;
};

TransformedQuantile transform_center(const PiecewiseQuantileFunction& unif, const NullQuantile& center);

// H_a(x) = Pr{Beta(a x, a (1 - x)) >= 1/2}, the MD(a) cdf.
double md_cdf(double a, double x);
double md_log_density(double a, double x);
// Inverse of md_cdf by bisection, |dx| <= 1e-10.
double md_quantile(double a, double u);
double md_sample(double a, Rng& rng);

// Mean of V given V >= 1/2 for V ~ Beta(b, b).
double xi(double b);
// E max_y q_m(y) = prod_{l <= m} 2 xi(a_l / 2) for level-homogeneous symmetric Beta laws.
double expected_max_qdensity(const LevelSchedule& schedule, int m);
// Variance of MD(a) by adaptive Simpson quadrature.
double tau2(double a, double abs_tol = 1e-8);
// rho(a) = 4 (a + 1) tau2(a).
double md_rho(double a, double abs_tol = 1e-8);

}  // namespace qpyramid
