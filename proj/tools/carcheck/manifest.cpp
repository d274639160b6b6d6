#include <string>
#include <vector>

#include "carcheck/cli.hpp"
#include "carcheck/error.hpp"
#include "json.hpp"

namespace carcheck::cli {

namespace {

using Json = nlohmann::ordered_json;

constexpr const char* kManifestVersion = "carcheck-manifest/1";

template <typename T>
void read_field(const Json& config, const char* key, T& value) {
  if (!config.contains(key)) throw ConfigError(std::string("manifest config lacks '") + key + "'");
  try {
    value = config.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("manifest field '") + key + "': " + e.what());
  }
}

}  // namespace

std::string manifest_json(const RunOptions& o, const std::string& dataset_checksum,
                          const std::vector<std::string>& artifacts, const std::vector<std::string>& volatile_artifacts,
                          const std::vector<std::string>& notes) {
  Json config;
  config["command"] = o.command;
  config["data"] = o.data;
  config["seed"] = o.seed;
  config["chains"] = o.chains;
  config["iterations"] = o.iterations;
  config["burn_in"] = o.burn_in;
  config["thin"] = o.thin;
  config["threads"] = o.threads;
  config["method"] = o.method;
  config["K"] = o.k;
  config["ghost_K"] = o.ghost_k;
  config["reps"] = o.reps;
  config["reps_seed"] = o.reps_seed;
  config["shared_streams"] = o.shared_streams;
  config["format"] = o.format;
  config["holdout"] = o.holdout;
  config["draws"] = o.draws;
  config["dump_draws"] = o.dump_draws;
  config["draws_csv"] = o.draws_csv;
  config["reference"] = o.reference;
  config["estimates"] = o.estimates;
  config["reference_draws"] = o.reference_draws;
  config["district"] = o.district;
  config["grid"] = o.grid;

  Json doc;
  doc["manifest"] = kManifestVersion;
  doc["version"] = std::string("carcheck ") + CARCHECK_VERSION;
  doc["config"] = std::move(config);
  doc["dataset_checksum"] = dataset_checksum;
  doc["master_seed"] = o.seed;
  doc["artifacts"] = artifacts;
  doc["volatile_artifacts"] = volatile_artifacts;
  doc["notes"] = notes;
  return doc.dump(2) + "\n";
}

RunOptions options_from_manifest(const std::string& text, std::string* dataset_checksum) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || doc.value("manifest", std::string()) != kManifestVersion || !doc.contains("config")) {
    throw ConfigError("not a carcheck run manifest");
  }
  const Json& c = doc["config"];
  RunOptions o;
  read_field(c, "command", o.command);
  read_field(c, "data", o.data);
  read_field(c, "seed", o.seed);
  read_field(c, "chains", o.chains);
  read_field(c, "iterations", o.iterations);
  read_field(c, "burn_in", o.burn_in);
  read_field(c, "thin", o.thin);
  read_field(c, "threads", o.threads);
  read_field(c, "method", o.method);
  read_field(c, "K", o.k);
  read_field(c, "ghost_K", o.ghost_k);
  read_field(c, "reps", o.reps);
  read_field(c, "reps_seed", o.reps_seed);
  read_field(c, "shared_streams", o.shared_streams);
  read_field(c, "format", o.format);
  read_field(c, "holdout", o.holdout);
  read_field(c, "draws", o.draws);
  read_field(c, "dump_draws", o.dump_draws);
  read_field(c, "draws_csv", o.draws_csv);
  read_field(c, "reference", o.reference);
  read_field(c, "estimates", o.estimates);
  read_field(c, "reference_draws", o.reference_draws);
  read_field(c, "district", o.district);
  read_field(c, "grid", o.grid);
  if (dataset_checksum) *dataset_checksum = doc.value("dataset_checksum", std::string());
  return o;
}

}  // namespace carcheck::cli
