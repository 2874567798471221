#include "qpyramid/priors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "qpyramid/errors.hpp"
#include "qpyramid/special.hpp"

namespace qpyramid {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double clamp_weight(double v) { return std::clamp(v, kWeightClamp, 1.0 - kWeightClamp); }

void require_positive(double a, const char* what) {
  if (!(a > 0.0) || !std::isfinite(a)) throw DomainError(std::string(what) + " must be positive");
}

}  // namespace

// ---------------------------------------------------------------------------
// VLaw

VLaw VLaw::symmetric_beta(double a) {
  require_positive(a, "Beta concentration");
  return VLaw(VFamily::SymmetricBeta, 0.5 * a, 0.5 * a);
}

VLaw VLaw::beta(double alpha, double beta) {
  require_positive(alpha, "Beta alpha");
  require_positive(beta, "Beta beta");
  return VLaw(VFamily::AsymmetricBeta, alpha, beta);
}

VLaw VLaw::median_dirichlet(double a) {
  require_positive(a, "median-Dirichlet concentration");
  return VLaw(VFamily::MedianDirichlet, a, 0.0);
}

VLaw VLaw::uniform() { return VLaw(VFamily::Uniform, 1.0, 1.0); }

VLaw VLaw::point_mass(double v) {
  if (!(v > 0.0 && v < 1.0)) throw DomainError("point-mass weight must lie in (0, 1)");
  return VLaw(VFamily::PointMass, v, 0.0);
}

double VLaw::sample(Rng& rng) const {
  switch (family_) {
    case VFamily::SymmetricBeta:
    case VFamily::AsymmetricBeta:
      return clamp_weight(rng.beta(p1_, p2_));
    case VFamily::MedianDirichlet:
      return clamp_weight(md_sample(p1_, rng));
    case VFamily::Uniform:
      return clamp_weight(rng.uniform());
    case VFamily::PointMass:
      return p1_;
  }
  return 0.5;
}

double VLaw::log_density(double v) const {
  switch (family_) {
    case VFamily::SymmetricBeta:
    case VFamily::AsymmetricBeta:
      return special::beta_log_density(v, p1_, p2_);
    case VFamily::MedianDirichlet:
      return md_log_density(p1_, v);
    case VFamily::Uniform:
      return (v > 0.0 && v < 1.0) ? 0.0 : kNegInf;
    case VFamily::PointMass:
      return v == p1_ ? 0.0 : kNegInf;
  }
  return kNegInf;
}

double VLaw::mean() const {
  switch (family_) {
    case VFamily::SymmetricBeta:
    case VFamily::AsymmetricBeta:
      return p1_ / (p1_ + p2_);
    case VFamily::MedianDirichlet:
    case VFamily::Uniform:
      return 0.5;
    case VFamily::PointMass:
      return p1_;
  }
  return 0.5;
}

double VLaw::second_moment() const {
  switch (family_) {
    case VFamily::SymmetricBeta:
    case VFamily::AsymmetricBeta: {
      const double s = p1_ + p2_;
      return p1_ * (p1_ + 1.0) / (s * (s + 1.0));
    }
    case VFamily::MedianDirichlet:
      return tau2(p1_) + 0.25;
    case VFamily::Uniform:
      return 1.0 / 3.0;
    case VFamily::PointMass:
      return p1_ * p1_;
  }
  return 0.0;
}

double VLaw::complement_second_moment() const {
  switch (family_) {
    case VFamily::SymmetricBeta:
    case VFamily::AsymmetricBeta: {
      const double s = p1_ + p2_;
      return p2_ * (p2_ + 1.0) / (s * (s + 1.0));
    }
    case VFamily::PointMass:
      return (1.0 - p1_) * (1.0 - p1_);
    default:
      return second_moment();
  }
}

// ---------------------------------------------------------------------------
// LevelSchedule

LevelSchedule::LevelSchedule(Kind kind, double scale, std::vector<double> table)
    : kind_(kind), scale_(scale), table_(std::move(table)) {}

LevelSchedule LevelSchedule::constant(double a) {
  require_positive(a, "schedule constant");
  return LevelSchedule(Kind::Constant, a, {});
}

LevelSchedule LevelSchedule::cubic(double c) {
  require_positive(c, "schedule scale c");
  return LevelSchedule(Kind::Cubic, c, {});
}

LevelSchedule LevelSchedule::table(std::vector<double> values) {
  if (values.empty()) throw ConfigError("schedule table is empty");
  for (double v : values) require_positive(v, "schedule table entry");
  return LevelSchedule(Kind::Table, 0.0, std::move(values));
}

double LevelSchedule::at(int level) const {
  if (level < 1) throw DomainError("schedule level must be >= 1");
  switch (kind_) {
    case Kind::Constant:
      return scale_;
    case Kind::Cubic:
      return scale_ * level * level * level;
    case Kind::Table:
      if (static_cast<std::size_t>(level) > table_.size()) {
        throw ConfigError("schedule table has no entry for level " + std::to_string(level));
      }
      return table_[level - 1];
  }
  return scale_;
}

std::string LevelSchedule::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::Constant:
      os << "a_m=" << scale_;
      break;
    case Kind::Cubic:
      os << "a_m=" << scale_ << "*m^3";
      break;
    case Kind::Table:
      os << "a_m=table[" << table_.size() << "]";
      break;
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// NullQuantile

NullQuantile::NullQuantile(std::string name, std::function<double(double)> fn)
    : name_(std::move(name)), fn_(std::move(fn)) {}

NullQuantile NullQuantile::identity() {
  return NullQuantile("identity", [](double y) { return y; });
}

NullQuantile NullQuantile::y_squared() {
  return NullQuantile("ysquared", [](double y) { return y * y; });
}

NullQuantile NullQuantile::square_root() {
  return NullQuantile("sqrt", [](double y) { return std::sqrt(y); });
}

NullQuantile NullQuantile::normal() {
  constexpr double eps = 1e-3;
  const double lo = special::normal_quantile(eps);
  const double hi = special::normal_quantile(1.0 - eps);
  return NullQuantile("normal", [lo, hi](double y) {
    if (y <= 0.0) return 0.0;
    if (y >= 1.0) return 1.0;
    return (special::normal_quantile(eps + (1.0 - 2.0 * eps) * y) - lo) / (hi - lo);
  });
}

NullQuantile NullQuantile::from_knots(std::string name, std::vector<double> interior) {
  validate_knots(interior);
  std::vector<double> knots;
  knots.reserve(interior.size() + 2);
  knots.push_back(0.0);
  knots.insert(knots.end(), interior.begin(), interior.end());
  knots.push_back(1.0);
  return NullQuantile(std::move(name), [knots = std::move(knots)](double y) {
    const double cells = static_cast<double>(knots.size() - 1);
    const double scaled = std::clamp(y, 0.0, 1.0) * cells;
    const auto j = static_cast<std::size_t>(std::floor(scaled));
    if (j + 1 >= knots.size()) return 1.0;
    const double t = scaled - static_cast<double>(j);
    return knots[j] + t * (knots[j + 1] - knots[j]);
  });
}

NullQuantile NullQuantile::builtin(const std::string& name) {
  if (name == "identity" || name == "uniform") return identity();
  if (name == "ysquared") return y_squared();
  if (name == "sqrt") return square_root();
  if (name == "normal") return normal();

  std::ifstream in(name);
  if (!in) throw ConfigError("unknown centering '" + name + "' (not a builtin and not a readable file)");
  std::vector<double> knots;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    try {
      std::size_t used = 0;
      knots.push_back(std::stod(line, &used));
    } catch (const std::exception&) {
      throw DataError(name + ":" + std::to_string(line_no) + ": not a number");
    }
  }
  return from_knots(name, std::move(knots));
}

// ---------------------------------------------------------------------------
// PriorSpec

PriorSpec::PriorSpec(int level, LawKind kind, LevelSchedule schedule, double param)
    : level_(level), kind_(kind), schedule_(std::move(schedule)), param_(param) {
  if (level < 1 || level > kMaxLevel) throw ConfigError("pyramid level must be in 1..24");
}

PriorSpec PriorSpec::beta(int level, LevelSchedule schedule) {
  PriorSpec spec(level, LawKind::Beta, std::move(schedule), 0.0);
  spec.text_ = "beta(" + spec.schedule_.describe() + ")";
  return spec;
}

PriorSpec PriorSpec::uniform(int level) {
  PriorSpec spec(level, LawKind::Uniform, LevelSchedule::constant(2.0), 0.0);
  spec.text_ = "uniform";
  return spec;
}

PriorSpec PriorSpec::median_dirichlet(int level, LevelSchedule schedule) {
  PriorSpec spec(level, LawKind::MedianDirichlet, std::move(schedule), 0.0);
  spec.text_ = "md(" + spec.schedule_.describe() + ")";
  return spec;
}

PriorSpec PriorSpec::median_dirichlet_adaptive(int level, double b) {
  require_positive(b, "md-adaptive b");
  PriorSpec spec(level, LawKind::MedianDirichletAdaptive, LevelSchedule::constant(b), b);
  spec.text_ = "md-adaptive(b=" + std::to_string(b) + ")";
  return spec;
}

PriorSpec PriorSpec::point_mass(int level, double v) {
  VLaw::point_mass(v);
  PriorSpec spec(level, LawKind::PointMass, LevelSchedule::constant(1.0), v);
  spec.text_ = "point(v=" + std::to_string(v) + ")";
  return spec;
}

namespace {

double parse_number(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("prior option '" + key + "' expects a number, got '" + value + "'");
  }
}

}  // namespace

PriorSpec PriorSpec::parse(const std::string& text, int level) {
  const auto colon = text.find(':');
  const std::string family = text.substr(0, colon);
  std::vector<std::pair<std::string, std::string>> options;
  if (colon != std::string::npos) {
    std::stringstream rest(text.substr(colon + 1));
    std::string item;
    while (std::getline(rest, item, ',')) {
      if (item.empty()) continue;
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw ConfigError("prior option '" + item + "' is not key=value");
      options.emplace_back(item.substr(0, eq), item.substr(eq + 1));
    }
  }

  std::optional<double> c, a, b, v;
  std::optional<std::string> center;
  CenterMode mode = CenterMode::MeanMatching;
  for (const auto& [key, value] : options) {
    if (key == "c") c = parse_number(key, value);
    else if (key == "a") a = parse_number(key, value);
    else if (key == "b") b = parse_number(key, value);
    else if (key == "v") v = parse_number(key, value);
    else if (key == "center") center = value;
    else if (key == "mode") {
      if (value == "mean") mode = CenterMode::MeanMatching;
      else if (value == "transform") mode = CenterMode::Transform;
      else throw ConfigError("prior mode must be 'mean' or 'transform'");
    } else {
      throw ConfigError("unknown prior option '" + key + "'");
    }
  }

  auto need = [&](const std::optional<double>& x, const char* key) {
    if (!x) throw ConfigError("prior '" + family + "' requires " + key + "=<float>");
    return *x;
  };

  std::optional<PriorSpec> spec;
  if (family == "beta") spec = beta(level, LevelSchedule::cubic(need(c, "c")));
  else if (family == "beta-const") spec = beta(level, LevelSchedule::constant(need(a, "a")));
  else if (family == "uniform") spec = uniform(level);
  else if (family == "md") spec = median_dirichlet(level, LevelSchedule::cubic(need(c, "c")));
  else if (family == "md-const") spec = median_dirichlet(level, LevelSchedule::constant(need(a, "a")));
  else if (family == "md-adaptive") spec = median_dirichlet_adaptive(level, need(b, "b"));
  else if (family == "point") spec = point_mass(level, need(v, "v"));
  else throw ConfigError("unknown prior family '" + family + "'");

  if (center) *spec = spec->centered(NullQuantile::builtin(*center), mode);
  spec->text_ = text;
  return *spec;
}

PriorSpec PriorSpec::centered(NullQuantile center, CenterMode mode) const {
  PriorSpec out = *this;
  if (mode == CenterMode::MeanMatching) {
    if (kind_ != LawKind::Beta) {
      throw ConfigError("mean-matching centering needs a Beta pyramid; use mode=transform");
    }
    out.node_means_ = centering_means(center, level_);
  } else {
    // Validates monotonicity on the dyadic grid.
    centering_means(center, level_);
    out.node_means_.clear();
  }
  out.text_ = text_ + ",center=" + center.name() +
              (mode == CenterMode::Transform ? ",mode=transform" : "");
  out.center_ = std::move(center);
  out.mode_ = mode;
  return out;
}

std::string PriorSpec::describe() const { return text_; }

VLaw PriorSpec::law_for(std::size_t node, double parent_gap) const {
  const int l = pyramid::node_level(node, level_);
  switch (kind_) {
    case LawKind::Beta: {
      const double a = schedule_.at(l);
      if (!node_means_.empty()) {
        const double mu = node_means_[node - 1];
        return VLaw::beta(a * mu, a * (1.0 - mu));
      }
      return VLaw::symmetric_beta(a);
    }
    case LawKind::Uniform:
      return VLaw::uniform();
    case LawKind::MedianDirichlet:
      return VLaw::median_dirichlet(schedule_.at(l));
    case LawKind::MedianDirichletAdaptive:
      return VLaw::median_dirichlet(param_ * l * l * l / parent_gap);
    case LawKind::PointMass:
      return VLaw::point_mass(param_);
  }
  return VLaw::uniform();
}

std::vector<double> PriorSpec::materialize_knots(std::span<const double> state_knots) const {
  std::vector<double> out(state_knots.begin(), state_knots.end());
  if (transforms_knots()) {
    for (std::size_t j = 1; j + 1 < out.size(); ++j) out[j] = (*center_)(out[j]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sampling and density

namespace {

std::vector<double> draw_knots(const PriorSpec& spec, Rng& rng, bool enforce_gap) {
  const int m = spec.level();
  const std::size_t k = std::size_t{1} << m;
  std::vector<double> knots(k + 1, 0.0);
  knots[k] = 1.0;
  for (std::size_t j : pyramid::creation_order(m)) {
    const std::size_t h = pyramid::parent_offset(j);
    const double left = knots[j - h];
    const double right = knots[j + h];
    const double gap = right - left;
    const double v = spec.law_for(j, std::max(gap, std::numeric_limits<double>::min())).sample(rng);
    double x = left * (1.0 - v) + right * v;
    if (enforce_gap) {
      if (gap < 2.0 * kMinGap) throw NumericError("prior draw collapsed a cell below the minimum gap");
      x = std::clamp(x, left + kMinGap, right - kMinGap);
      // Rounding in the clamp bounds can leave a gap a hair under the floor.
      while (x - left < kMinGap) x = std::nextafter(x, right);
      while (right - x < kMinGap) x = std::nextafter(x, left);
      if (x - left < kMinGap) throw NumericError("prior draw collapsed a cell below the minimum gap");
    }
    knots[j] = x;
  }
  return knots;
}

}  // namespace

DyadicQuantileVector sample_prior(const PriorSpec& spec, Rng& rng) {
  auto knots = draw_knots(spec, rng, true);
  return DyadicQuantileVector(spec.level(), std::vector<double>(knots.begin() + 1, knots.end() - 1));
}

std::vector<double> sample_prior_knots(const PriorSpec& spec, Rng& rng) { return draw_knots(spec, rng, false); }

double node_log_prior(const PriorSpec& spec, std::span<const double> knots, std::size_t node) {
  const std::size_t h = pyramid::parent_offset(node);
  const double left = knots[node - h];
  const double right = knots[node + h];
  const double gap = right - left;
  if (!(gap > 0.0)) throw DomainError("parent gap must be positive");
  const double v = (knots[node] - left) / gap;
  return spec.law_for(node, gap).log_density(v) - std::log(gap);
}

double log_prior_density(const PriorSpec& spec, const DyadicQuantileVector& q) {
  if (q.level() != spec.level()) throw DomainError("quantile vector level differs from prior level");
  const auto knots = q.knots();
  double total = 0.0;
  for (std::size_t j : pyramid::creation_order(spec.level())) total += node_log_prior(spec, knots, j);
  return total;
}

double centering_mean(const NullQuantile& center, int level, std::size_t j) {
  const double k = std::ldexp(1.0, level);
  const double lo = center((static_cast<double>(j) - 1.0) / k);
  const double mid = center(static_cast<double>(j) / k);
  const double hi = center((static_cast<double>(j) + 1.0) / k);
  if (!(lo < mid && mid < hi)) throw DomainError("centering quantile function is not strictly increasing");
  return (mid - lo) / (hi - lo);
}

std::vector<double> centering_means(const NullQuantile& center, int m) {
  const std::size_t k = std::size_t{1} << m;
  double prev = center(0.0);
  for (std::size_t j = 1; j <= k; ++j) {
    const double cur = center(static_cast<double>(j) / static_cast<double>(k));
    if (!(cur > prev)) throw DomainError("centering quantile function is not strictly increasing");
    prev = cur;
  }
  std::vector<double> means(k - 1);
  for (std::size_t j = 1; j < k; ++j) {
    const int l = pyramid::node_level(j, m);
    const std::size_t local = j >> (m - l);
    means[j - 1] = centering_mean(center, l, local);
  }
  return means;
}

TransformedQuantile transform_center(const PiecewiseQuantileFunction& unif, const NullQuantile& center) {
  return TransformedQuantile(unif, center);
}

// ---------------------------------------------------------------------------
// Median-Dirichlet

double md_cdf(double a, double x) {
  require_positive(a, "median-Dirichlet concentration");
  if (std::isnan(x)) throw DomainError("md_cdf: x is NaN");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return special::incomplete_beta(0.5, a * (1.0 - x), a * x);
}

double md_log_density(double a, double x) {
  require_positive(a, "median-Dirichlet concentration");
  if (!(x > 0.0 && x < 1.0)) return kNegInf;
  // The density is symmetric about 1/2. On the lower half H_a underflows long
  // before its density does, so differentiate log H_a instead:
  // h = H * (log H)', with (log H)' by a Richardson-extrapolated central difference.
  x = std::min(x, 1.0 - x);
  auto log_h = [a](double t) { return special::log_incomplete_beta(0.5, a * (1.0 - t), a * t); };
  const double spread = 0.5 / std::sqrt(a + 1.0);
  const double h = 0.01 * std::min(spread, x);
  auto diff = [&](double step) { return (log_h(x + step) - log_h(x - step)) / (2.0 * step); };
  const double slope = (4.0 * diff(0.5 * h) - diff(h)) / 3.0;
  if (!(slope > 0.0)) return kNegInf;
  return log_h(x) + std::log(slope);
}

double md_quantile(double a, double u) {
  require_positive(a, "median-Dirichlet concentration");
  if (!(u >= 0.0 && u <= 1.0)) throw DomainError("md_quantile: u outside [0, 1]");
  if (u == 0.5) return 0.5;
  double lo = 0.0;
  double hi = 1.0;
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    if (md_cdf(a, mid) < u) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

double md_sample(double a, Rng& rng) { return md_quantile(a, rng.uniform()); }

// ---------------------------------------------------------------------------
// Closed forms and quadrature

double xi(double b) {
  if (!(b > 0.0)) throw DomainError("xi: b must be positive");
  using special::log_gamma;
  const double log_norm = log_gamma(2.0 * b) - 2.0 * log_gamma(b) - b * std::log(4.0);
  const double ratio = std::exp(log_gamma(0.5) + log_gamma(b) - log_gamma(b + 0.5));
  return std::exp(log_norm) * (1.0 / b + ratio);
}

double expected_max_qdensity(const LevelSchedule& schedule, int m) {
  double product = 1.0;
  for (int l = 1; l <= m; ++l) product *= 2.0 * xi(0.5 * schedule.at(l));
  return product;
}

namespace {

template <typename F>
double adaptive_simpson(const F& f, double a, double b, double fa, double fm, double fb, double whole,
                        double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::fabs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double tau2(double a, double abs_tol) {
  if (!(a > 0.0)) throw DomainError("tau2: a must be positive");
  // Pr{U^2 >= x} = G(1/2; a sqrt(x), a (1 - sqrt(x))); limits 1 at x = 0 and 0 at x = 1.
  auto f = [a](double x) {
    if (x <= 0.0) return 1.0;
    if (x >= 1.0) return 0.0;
    const double r = std::sqrt(x);
    return special::incomplete_beta(0.5, a * r, a * (1.0 - r));
  };
  constexpr int kMaxDepth = 20;
  const double fa = f(0.0);
  const double fm = f(0.5);
  const double fb = f(1.0);
  const double whole = (fa + 4.0 * fm + fb) / 6.0;
  return adaptive_simpson(f, 0.0, 1.0, fa, fm, fb, whole, abs_tol, kMaxDepth) - 0.25;
}

double md_rho(double a, double abs_tol) { return 4.0 * (a + 1.0) * tau2(a, abs_tol); }

}  // namespace qpyramid
