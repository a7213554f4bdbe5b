#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "ls3/orchestrator.hpp"

namespace ls3 {

/// Invalid or unreadable configuration. The message names the offending key path.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Prefix for environment overrides: LS3_PLANNER__DELTA_SS=0.5 sets planner.delta_ss.
inline constexpr std::string_view kEnvOverridePrefix = "LS3_";

/// Builds a config from a JSON document. Missing optional keys take their
/// defaults; unknown keys and wrongly typed values are errors.
RunConfig config_from_json(const nlohmann::json& doc);

/// Fully resolved snapshot: every key, no defaults left implicit.
nlohmann::json config_to_json(const RunConfig& config);

/// Applies dotted-path overrides (values parsed as JSON, falling back to strings).
void apply_overrides(nlohmann::json& doc, const std::map<std::string, std::string>& overrides);

/// Collects LS3_SECTION__KEY variables from the process environment.
std::map<std::string, std::string> environment_overrides();

/// Reads a config file (comments allowed), applies environment overrides and validates.
RunConfig load_config(const std::filesystem::path& path);

}  // namespace ls3
