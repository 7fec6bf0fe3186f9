#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "vigraph/evaluate.hpp"

namespace vigraph {

/// Every field, with defaults filled in.
nlohmann::json to_json(const PipelineConfig& config);

/// Overlays `doc` onto `base`. Unknown keys and wrong types raise ConfigError
/// with the JSON pointer of the offending key.
PipelineConfig apply_config(PipelineConfig base, const nlohmann::json& doc);

PipelineConfig load_config(const std::filesystem::path& path);

/// SHA-256 of the canonical JSON form.
std::string config_hash(const PipelineConfig& config);

}  // namespace vigraph
