#pragma once

/**
 * @file config.hpp
 * @brief Run configuration: JSON files and key=value overrides layered over a preset.
 *
 * Precedence is flags > file > preset. Keys are the SimulationConfig field names
 * plus the selectors listed in config_keys().
 */

#include "mfc/optimizer.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mfc {

const std::vector<std::string>& config_keys();

/// Throws IoError when unreadable, ConfigError when not a JSON object.
nlohmann::json read_config_file(const std::filesystem::path& path);

/// "key=value"; the value is read as JSON when it parses, otherwise as a string.
nlohmann::json parse_assignment(const std::string& text);

struct RunRequest {
    Problem problem;
    std::optional<Method> method;
    nlohmann::json resolved;  ///< every key with its final value
};

/// Checks every key and value type, then applies preset, file, flags in that order.
/// Errors name the offending key.
RunRequest resolve_run(const nlohmann::json& file, const nlohmann::json& flags);

/// Applies one layer of overrides to a problem. `controls_set` reports whether u_max or n_u appeared.
void apply_overrides(Problem& p, const nlohmann::json& layer, bool* controls_set = nullptr);

nlohmann::json describe(const Problem& p);

} // namespace mfc
