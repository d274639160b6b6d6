#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace carcheck::cli {

enum ExitCode : int { kOk = 0, kConfig = 1, kData = 2, kNumeric = 3 };

/// Every setting a command runs with, defaults materialized. Serialized into
/// the run manifest; the output directory is not part of it.
struct RunOptions {
  std::string command;
  std::string data;  // empty: bundled Scotland dataset
  std::uint64_t seed = 1;
  std::size_t chains = 2;
  std::size_t iterations = 15000;
  std::size_t burn_in = 5000;
  std::size_t thin = 1;
  unsigned threads = 1;
  std::string method = "all";
  std::size_t k = 100;
  std::size_t ghost_k = 1;
  std::size_t reps = 0;
  std::uint64_t reps_seed = 20160401;
  bool shared_streams = true;
  std::string format = "csv";
  int holdout = 0;  // 1-based; 0 disables
  std::string draws;
  bool dump_draws = false;
  bool draws_csv = false;
  std::string reference;
  std::string estimates;
  std::size_t reference_draws = 0;  // 0: four times the configured budget
  int district = 2;
  std::string grid = "0..70";

  friend bool operator==(const RunOptions&, const RunOptions&) = default;
};

std::string manifest_json(const RunOptions& options, const std::string& dataset_checksum,
                          const std::vector<std::string>& artifacts, const std::vector<std::string>& volatile_artifacts,
                          const std::vector<std::string>& notes);
RunOptions options_from_manifest(const std::string& text, std::string* dataset_checksum = nullptr);

/// Runs the command line (program name excluded). Diagnostics go to err.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace carcheck::cli
