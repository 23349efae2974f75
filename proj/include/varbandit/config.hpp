#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "varbandit/harness.hpp"

namespace varbandit {

/// Environment variable consulted for the default parallelism degree.
inline constexpr const char* kParallelismEnv = "VARBANDIT_PARALLELISM";

/// Reads and parses a JSON file. IoError if unreadable, ConfigError if not JSON.
[[nodiscard]] nlohmann::json load_config_json(const std::filesystem::path& path);

/// Applies `dotted.key=value` overrides. Values parse as JSON when possible,
/// otherwise as strings. Intermediate objects are created as needed.
void apply_overrides(nlohmann::json& doc, const std::vector<std::string>& overrides);

/// Converts a config document into a validated ExperimentConfig. Throws
/// ConfigError naming the first violation. Unknown keys are violations.
[[nodiscard]] ExperimentConfig parse_config(const nlohmann::json& doc);

/// FNV-1a 64 of the canonical (sorted-key, compact) dump, as 16 hex digits.
[[nodiscard]] std::string config_hash(const nlohmann::json& doc);

} // namespace varbandit
