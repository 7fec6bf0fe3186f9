#include "vigraph/manifest.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>

#include "text_util.hpp"
#include "vigraph/errors.hpp"

namespace vigraph {

using nlohmann::json;

json RunManifest::to_json() const {
  return {{"command_line", command_line}, {"config", config},
          {"dataset_hash", dataset_hash}, {"scenario_hash", scenario_hash},
          {"seeds", seeds},               {"tool_version", tool_version},
          {"started_at", started_at},     {"finished_at", finished_at},
          {"extra", extra}};
}

RunManifest RunManifest::from_json(const json& doc) {
  RunManifest m;
  try {
    m.command_line = doc.at("command_line").get<std::vector<std::string>>();
    m.config = doc.at("config");
    m.dataset_hash = doc.at("dataset_hash").get<std::string>();
    m.scenario_hash = doc.at("scenario_hash").get<std::string>();
    m.seeds = doc.at("seeds").get<std::vector<std::uint64_t>>();
    m.tool_version = doc.at("tool_version").get<std::string>();
    m.started_at = doc.at("started_at").get<std::string>();
    m.finished_at = doc.at("finished_at").get<std::string>();
    m.extra = doc.value("extra", json::object());
  } catch (const json::exception& e) {
    throw Error(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

std::string utc_timestamp() {
  std::time_t t = 0;
  if (const char* fixed = std::getenv("SOURCE_DATE_EPOCH"); fixed != nullptr && *fixed != '\0') {
    long long v = 0;
    if (detail::parse_number(std::string_view(fixed), v)) t = static_cast<std::time_t>(v);
  } else {
    t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_manifest(const RunManifest& manifest, const std::filesystem::path& dir) {
  detail::write_file(dir / "manifest.json", manifest.to_json().dump(2) + "\n");
}

RunManifest read_manifest(const std::filesystem::path& dir) {
  const std::string text = detail::read_file(dir / "manifest.json");
  try {
    return RunManifest::from_json(json::parse(text));
  } catch (const json::parse_error& e) {
    throw Error("manifest in " + dir.string() + " is not valid JSON: " + e.what());
  }
}

}  // namespace vigraph
