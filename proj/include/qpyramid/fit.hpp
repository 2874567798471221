#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>

#include <nlohmann/json.hpp>

namespace qpyramid {

inline constexpr const char* kToolVersion = "0.1.0";

enum class FitLikelihood { Interp, Substitute, Semiparam };

FitLikelihood parse_fit_likelihood(const std::string& text);
std::string to_string(FitLikelihood kind);

// Everything a `fit` run depends on, with defaults materialised.
struct FitConfig {
  std::filesystem::path data;
  std::optional<std::pair<double, double>> bounds;
  int level = 5;
  std::string prior = "uniform";
  FitLikelihood likelihood = FitLikelihood::Substitute;
  std::size_t iterations = 5000;
  std::optional<std::size_t> burn_in;
  std::size_t thin = 1;
  std::size_t chains = 1;
  std::uint64_t seed = 1;
  double alpha = 0.05;
  std::size_t grid_points = 512;

  // Rejects bad combinations before any data is read or chain is run.
  void validate() const;
  nlohmann::json to_json() const;
  static FitConfig from_json(const nlohmann::json& j);
};

struct FitOutcome {
  std::size_t draws = 0;
  double acceptance = 0.0;
};

// Runs the chains and writes draws.csv, grid.csv, functionals.json and
// manifest.json into `out`. An existing non-empty directory is refused
// unless `force` is set.
FitOutcome run_fit(const FitConfig& config, const std::filesystem::path& out, bool force);

// Creates `out`, refusing a non-empty existing directory without `force`.
void prepare_output_dir(const std::filesystem::path& out, bool force);

}  // namespace qpyramid
