#include "carcheck/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

#include "carcheck/error.hpp"
#include "carcheck/format.hpp"

namespace carcheck {

namespace detail {
std::string_view bundled_scotland_csv();
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(delim, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

[[noreturn]] void fail(std::string_view source, std::size_t line, std::string_view column, const std::string& what) {
  std::ostringstream msg;
  msg << source << ": line " << line;
  if (!column.empty()) msg << ", column '" << column << "'";
  msg << ": " << what;
  throw DataError(msg.str());
}

template <class T>
T parse_number(std::string_view text, std::string_view source, std::size_t line, std::string_view column) {
  text = trim(text);
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (text.empty() || ec != std::errc{} || ptr != end) {
    fail(source, line, column, "cannot parse '" + std::string(text) + "' as a number");
  }
  return value;
}

}  // namespace

SpatialDataset::SpatialDataset(std::vector<DistrictRecord> records) : records_(std::move(records)) {
  counts_.reserve(records_.size());
  expected_.reserve(records_.size());
  covariate_.reserve(records_.size());
  for (const auto& r : records_) {
    counts_.push_back(r.y_obs);
    expected_.push_back(r.expected);
    covariate_.push_back(r.covariate);
  }
}

SpatialDataset SpatialDataset::from_records(std::vector<DistrictRecord> records) {
  const std::size_t n = records.size();
  if (n == 0) throw DataError("dataset has no districts");

  std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  for (std::size_t k = 0; k < n; ++k) {
    const auto& r = records[k];
    if (r.id < 1 || static_cast<std::size_t>(r.id) > n) {
      throw DataError("district id " + std::to_string(r.id) + " outside 1.." + std::to_string(n));
    }
    if (k > 0 && records[k - 1].id == r.id) throw DataError("duplicate district id " + std::to_string(r.id));
  }
  // n distinct ids in 1..n means every id is present exactly once.

  for (auto& r : records) {
    const std::string who = "district " + std::to_string(r.id);
    if (!(r.expected > 0.0) || !std::isfinite(r.expected)) throw DataError(who + ": expected count E must be > 0");
    if (r.y_obs < 0) throw DataError(who + ": observed count must be >= 0");
    if (!std::isfinite(r.covariate)) throw DataError(who + ": covariate is not finite");
    if (r.neighbours.empty()) throw DataError(who + ": has no neighbours");
    std::sort(r.neighbours.begin(), r.neighbours.end());
    for (std::size_t k = 0; k < r.neighbours.size(); ++k) {
      const int j = r.neighbours[k];
      if (j == r.id) throw DataError(who + ": lists itself as a neighbour");
      if (j < 1 || static_cast<std::size_t>(j) > n) {
        throw DataError(who + ": neighbour id " + std::to_string(j) + " out of range");
      }
      if (k > 0 && r.neighbours[k - 1] == j) throw DataError(who + ": neighbour " + std::to_string(j) + " listed twice");
    }
  }

  std::vector<std::string> asymmetric;
  for (const auto& r : records) {
    for (int j : r.neighbours) {
      const auto& other = records[static_cast<std::size_t>(j - 1)].neighbours;
      if (!std::binary_search(other.begin(), other.end(), r.id)) {
        asymmetric.push_back(std::to_string(r.id) + "->" + std::to_string(j) + " without " + std::to_string(j) +
                             "->" + std::to_string(r.id));
      }
    }
  }
  if (!asymmetric.empty()) {
    std::string msg = "asymmetric adjacency:";
    for (const auto& a : asymmetric) msg += " " + a + ";";
    throw DataError(msg);
  }
  return SpatialDataset(std::move(records));
}

SpatialDataset parse_dataset_csv(std::istream& in, std::string_view source) {
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::vector<DistrictRecord> records;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = trim(line);
    if (text.empty()) continue;
    if (!have_header) {
      if (text != kDatasetCsvHeader) {
        fail(source, line_no, "", "expected header '" + std::string(kDatasetCsvHeader) + "'");
      }
      have_header = true;
      continue;
    }
    const auto fields = split(text, ',');
    if (fields.size() != 6) {
      fail(source, line_no, "", "expected 6 fields, found " + std::to_string(fields.size()));
    }
    DistrictRecord r;
    r.id = parse_number<int>(fields[0], source, line_no, "id");
    r.name = std::string(trim(fields[1]));
    r.y_obs = parse_number<int>(fields[2], source, line_no, "y");
    r.expected = parse_number<double>(fields[3], source, line_no, "E");
    r.covariate = parse_number<double>(fields[4], source, line_no, "x");
    const auto nb = trim(fields[5]);
    if (!nb.empty()) {
      for (auto id : split(nb, ';')) r.neighbours.push_back(parse_number<int>(id, source, line_no, "neighbours"));
    }
    if (!(r.expected > 0.0)) fail(source, line_no, "E", "expected count must be > 0");
    if (r.y_obs < 0) fail(source, line_no, "y", "observed count must be >= 0");
    records.push_back(std::move(r));
  }
  if (!have_header) fail(source, line_no, "", "empty file");
  return SpatialDataset::from_records(std::move(records));
}

SpatialDataset load_dataset(const std::filesystem::path& path, DataFormat format) {
  if (format != DataFormat::csv) throw DataError("unsupported dataset format");
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset '" + path.string() + "'");
  return parse_dataset_csv(in, path.string());
}

std::string to_csv(const SpatialDataset& dataset) {
  std::string out(kDatasetCsvHeader);
  out += '\n';
  for (const auto& r : dataset.records()) {
    out += std::to_string(r.id);
    out += ',';
    out += r.name;
    out += ',';
    out += std::to_string(r.y_obs);
    out += ',';
    out += format_double(r.expected);
    out += ',';
    out += format_double(r.covariate);
    out += ',';
    for (std::size_t k = 0; k < r.neighbours.size(); ++k) {
      if (k) out += ';';
      out += std::to_string(r.neighbours[k]);
    }
    out += '\n';
  }
  return out;
}

void save_dataset(const SpatialDataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write dataset '" + path.string() + "'");
  out << to_csv(dataset);
}

std::string_view bundled_dataset_csv() { return detail::bundled_scotland_csv(); }

const SpatialDataset& bundled_dataset() {
  static const SpatialDataset dataset = [] {
    std::istringstream in{std::string(bundled_dataset_csv())};
    return parse_dataset_csv(in, "<bundled scotland.csv>");
  }();
  return dataset;
}

std::uint64_t dataset_checksum(const SpatialDataset& dataset) { return fnv1a64(to_csv(dataset)); }

}  // namespace carcheck
