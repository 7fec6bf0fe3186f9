#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace vigraph {

struct RunManifest {
  std::vector<std::string> command_line;
  nlohmann::json config;
  std::string dataset_hash;
  std::string scenario_hash;
  std::vector<std::uint64_t> seeds;
  std::string tool_version = VIGRAPH_VERSION;
  std::string started_at;
  std::string finished_at;
  /// Command-specific fields (split source, strict mode, inputs, ...).
  nlohmann::json extra = nlohmann::json::object();

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& doc);
};

/// UTC time as YYYY-MM-DDTHH:MM:SSZ. Honors SOURCE_DATE_EPOCH so repeated
/// runs can produce identical manifests.
std::string utc_timestamp();

void write_manifest(const RunManifest& manifest, const std::filesystem::path& dir);
RunManifest read_manifest(const std::filesystem::path& dir);

}  // namespace vigraph
