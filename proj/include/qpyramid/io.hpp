#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "qpyramid/likelihoods.hpp"
#include "qpyramid/sampler.hpp"
#include "qpyramid/summaries.hpp"

namespace qpyramid::io {

struct DataFingerprint {
  std::size_t bytes = 0;
  std::size_t values = 0;
  std::uint64_t fnv1a = 0;

  std::string hex() const;
  nlohmann::json to_json() const;
};

struct Ingested {
  Dataset data;                 // unit scale
  std::vector<double> raw;      // sorted, raw scale
  DataFingerprint fingerprint;
};

// One decimal number per line; blank lines and lines starting with '#' are skipped.
// Without bounds the range is the data range padded by 0.1% on each side.
Ingested ingest(const std::filesystem::path& path, std::optional<std::pair<double, double>> bounds = std::nullopt);
Ingested ingest_text(const std::string& text, std::optional<std::pair<double, double>> bounds = std::nullopt);

std::uint64_t fnv1a(const std::string& bytes);

// Shortest decimal string that parses back to exactly the same double.
std::string format_double(double x);
double parse_double(const std::string& text);

// Writes `[chain,]sweep,q_1,...,q_{k-1},log_prior,log_lik[,mu,sigma]`.
void write_draws_csv(std::ostream& out, const std::vector<DrawMatrix>& chains);
void write_draws_csv(const std::filesystem::path& path, const std::vector<DrawMatrix>& chains);

struct DrawRecord {
  std::size_t chain = 0;
  std::size_t sweep = 0;
  std::vector<double> q;
  double log_prior = 0.0;
  double log_lik = 0.0;
  double mu = 0.0;
  double sigma = 0.0;
};

struct DrawTable {
  bool has_chain = false;
  bool semiparametric = false;
  std::vector<DrawRecord> rows;
};

DrawTable read_draws_csv(std::istream& in);
DrawTable read_draws_csv(const std::filesystem::path& path);

// Columns y,mean,median,lo,hi.
void write_grid_csv(const std::filesystem::path& path, const SummaryGrid& grid);

void write_json(const std::filesystem::path& path, const nlohmann::json& value);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace qpyramid::io
