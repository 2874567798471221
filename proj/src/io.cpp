#include "qpyramid/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <system_error>

#include "qpyramid/errors.hpp"

namespace qpyramid::io {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  return out;
}

}  // namespace

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string DataFingerprint::hex() const {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << fnv1a;
  return s.str();
}

nlohmann::json DataFingerprint::to_json() const {
  return {{"bytes", bytes}, {"values", values}, {"fnv1a", hex()}};
}

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  if (res.ec != std::errc{}) throw NumericError("cannot format number");
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& text) {
  const std::string t = trim(text);
  double value = 0.0;
  const char* begin = t.data();
  const char* end = t.data() + t.size();
  if (!t.empty() && *begin == '+') ++begin;
  const auto res = std::from_chars(begin, end, value);
  if (t.empty() || res.ec != std::errc{} || res.ptr != end) throw DataError("not a number: '" + text + "'");
  return value;
}

Ingested ingest_text(const std::string& text, std::optional<std::pair<double, double>> bounds) {
  std::vector<double> raw;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    double v = 0.0;
    try {
      v = parse_double(t);
    } catch (const DataError&) {
      throw DataError("line " + std::to_string(lineno) + ": not a number: '" + t + "'");
    }
    if (!std::isfinite(v)) throw DataError("line " + std::to_string(lineno) + ": value is not finite");
    raw.push_back(v);
  }
  if (raw.empty()) throw DataError("data file holds no observations");
  std::sort(raw.begin(), raw.end());

  UnitAffineMap map;
  if (bounds) {
    const auto [lo, hi] = *bounds;
    if (!(hi > lo)) throw ConfigError("bounds must satisfy lo < hi");
    if (raw.front() < lo || raw.back() > hi) throw DataError("observations fall outside the given bounds");
    map = UnitAffineMap(lo, hi);
  } else {
    if (!(raw.back() > raw.front())) throw DataError("all observations are equal; the data range has zero width");
    map = UnitAffineMap::padded(raw.front(), raw.back());
  }
  std::vector<double> unit(raw.size());
  std::transform(raw.begin(), raw.end(), unit.begin(),
                 [&](double x) { return std::clamp(map.to_unit(x), 0.0, 1.0); });

  Ingested result{Dataset(std::move(unit), map), std::move(raw), {}};
  result.fingerprint = {text.size(), result.raw.size(), fnv1a(text)};
  return result;
}

Ingested ingest(const std::filesystem::path& path, std::optional<std::pair<double, double>> bounds) {
  if (!std::filesystem::exists(path)) throw DataError("data file '" + path.string() + "' does not exist");
  return ingest_text(read_file(path), bounds);
}

void write_draws_csv(std::ostream& out, const std::vector<DrawMatrix>& chains) {
  if (chains.empty()) throw ConfigError("no chains to write");
  const bool with_chain = chains.size() > 1;
  const bool semi = chains.front().semiparametric;
  std::size_t k = 0;
  for (const auto& c : chains) {
    if (!c.empty()) {
      k = c.rows.front().q.cells();
      break;
    }
  }
  if (with_chain) out << "chain,";
  out << "sweep";
  for (std::size_t j = 1; j < k; ++j) out << ",q_" << j;
  out << ",log_prior,log_lik";
  if (semi) out << ",mu,sigma";
  out << '\n';
  for (const auto& c : chains) {
    for (const auto& d : c.rows) {
      if (with_chain) out << c.chain << ',';
      out << d.sweep;
      for (double v : d.q.values()) out << ',' << format_double(v);
      out << ',' << format_double(d.log_prior) << ',' << format_double(d.log_lik);
      if (semi) out << ',' << format_double(d.mu) << ',' << format_double(d.sigma);
      out << '\n';
    }
  }
}

void write_draws_csv(const std::filesystem::path& path, const std::vector<DrawMatrix>& chains) {
  auto out = open_out(path);
  write_draws_csv(out, chains);
}

DrawTable read_draws_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("draws file is empty");
  const auto header = split(trim(line), ',');
  DrawTable table;
  table.has_chain = !header.empty() && header.front() == "chain";
  table.semiparametric = header.size() >= 2 && header.back() == "sigma";
  const std::size_t lead = table.has_chain ? 2 : 1;
  const std::size_t tail = table.semiparametric ? 4 : 2;
  if (header.size() < lead + tail) throw DataError("draws header is too short");
  const std::size_t nq = header.size() - lead - tail;

  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split(trim(line), ',');
    if (cells.size() != header.size()) throw DataError("draws line " + std::to_string(lineno) + ": wrong column count");
    DrawRecord r;
    std::size_t c = 0;
    try {
      if (table.has_chain) r.chain = std::stoul(cells[c++]);
      r.sweep = std::stoul(cells[c++]);
    } catch (const std::logic_error&) {
      throw DataError("draws line " + std::to_string(lineno) + ": bad integer");
    }
    r.q.resize(nq);
    for (auto& v : r.q) v = parse_double(cells[c++]);
    r.log_prior = parse_double(cells[c++]);
    r.log_lik = parse_double(cells[c++]);
    if (table.semiparametric) {
      r.mu = parse_double(cells[c++]);
      r.sigma = parse_double(cells[c++]);
    }
    table.rows.push_back(std::move(r));
  }
  return table;
}

DrawTable read_draws_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return read_draws_csv(in);
}

void write_grid_csv(const std::filesystem::path& path, const SummaryGrid& grid) {
  auto out = open_out(path);
  out << "y,mean,median,lo,hi\n";
  for (std::size_t i = 0; i < grid.grid.size(); ++i) {
    out << format_double(grid.grid[i]) << ',' << format_double(grid.mean[i]) << ','
        << format_double(grid.median[i]) << ',' << format_double(grid.lower[i]) << ','
        << format_double(grid.upper[i]) << '\n';
  }
}

void write_json(const std::filesystem::path& path, const nlohmann::json& value) {
  auto out = open_out(path);
  out << value.dump(2) << '\n';
}

nlohmann::json read_json(const std::filesystem::path& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

}  // namespace qpyramid::io
