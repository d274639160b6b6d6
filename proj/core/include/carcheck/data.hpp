#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace carcheck {

/// One areal unit: observed and expected counts, covariate and neighbour ids.
struct DistrictRecord {
  int id = 0;  // 1-based
  std::string name;
  int y_obs = 0;
  double expected = 0.0;
  double covariate = 0.0;
  std::vector<int> neighbours;  // 1-based ids

  /// Standardized morbidity ratio y / E.
  [[nodiscard]] double smr() const { return static_cast<double>(y_obs) / expected; }

  friend bool operator==(const DistrictRecord&, const DistrictRecord&) = default;
};

/// A validated areal dataset. Records are stored in id order, so record k has
/// id k + 1. Immutable once constructed.
class SpatialDataset {
 public:
  /// Validates and sorts the records by id. Throws DataError on any
  /// violation: duplicate or missing ids, E <= 0, y < 0, self-loops,
  /// neighbour ids out of range, asymmetric adjacency, or an isolated district.
  static SpatialDataset from_records(std::vector<DistrictRecord> records);

  [[nodiscard]] std::size_t size() const { return records_.size(); }
  [[nodiscard]] const DistrictRecord& operator[](std::size_t index) const { return records_[index]; }
  [[nodiscard]] std::span<const DistrictRecord> records() const { return records_; }

  [[nodiscard]] std::span<const int> counts() const { return counts_; }
  [[nodiscard]] std::span<const double> expected() const { return expected_; }
  [[nodiscard]] std::span<const double> covariate() const { return covariate_; }

  friend bool operator==(const SpatialDataset& a, const SpatialDataset& b) { return a.records_ == b.records_; }

 private:
  explicit SpatialDataset(std::vector<DistrictRecord> records);

  std::vector<DistrictRecord> records_;
  std::vector<int> counts_;
  std::vector<double> expected_;
  std::vector<double> covariate_;
};

enum class DataFormat { csv };

/// Header line of the CSV format; neighbours are ';'-joined ids.
inline constexpr std::string_view kDatasetCsvHeader = "id,name,y,E,x,neighbours";

SpatialDataset parse_dataset_csv(std::istream& in, std::string_view source = "<stream>");
SpatialDataset load_dataset(const std::filesystem::path& path, DataFormat format = DataFormat::csv);

[[nodiscard]] std::string to_csv(const SpatialDataset& dataset);
void save_dataset(const SpatialDataset& dataset, const std::filesystem::path& path);

/// The 56-district Scotland lip cancer dataset shipped with the library.
[[nodiscard]] const SpatialDataset& bundled_dataset();
[[nodiscard]] std::string_view bundled_dataset_csv();

/// FNV-1a 64 of the canonical CSV serialization.
[[nodiscard]] std::uint64_t dataset_checksum(const SpatialDataset& dataset);

}  // namespace carcheck
