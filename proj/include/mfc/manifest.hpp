#pragma once

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace mfc {

/// Hex SHA-1 of "blob <size>\0" + content, as git computes object ids.
std::string git_blob_hash(const std::string& content);

/// Written next to every output set; enough to rerun bit-exactly.
struct RunManifest {
    std::string command;
    std::string preset;
    std::string method;
    nlohmann::json config;  ///< fully resolved configuration
    std::vector<std::string> outputs;
    double wall_time_s = 0.0;
    nlohmann::json extra = nlohmann::json::object();

    /// Hash of the canonical (sorted-key) dump of config plus command and method.
    std::string input_hash() const;
    nlohmann::json to_json() const;
    void write(const std::filesystem::path& path) const;
};

} // namespace mfc
