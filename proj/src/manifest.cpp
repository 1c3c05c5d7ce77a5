#include "mfc/manifest.hpp"

#include "mfc/error.hpp"

#include <openssl/sha.h>

#include <array>
#include <cstdio>
#include <fstream>

namespace mfc {

std::string git_blob_hash(const std::string& content)
{
    std::string framed = "blob " + std::to_string(content.size());
    framed.push_back('\0');
    framed += content;
    std::array<unsigned char, SHA_DIGEST_LENGTH> digest{};
    SHA1(reinterpret_cast<const unsigned char*>(framed.data()), framed.size(), digest.data());
    std::string hex;
    hex.reserve(2 * digest.size());
    for (unsigned char b : digest) {
        char buf[3];
        std::snprintf(buf, sizeof buf, "%02x", b);
        hex += buf;
    }
    return hex;
}

std::string RunManifest::input_hash() const
{
    const nlohmann::json inputs{{"command", command}, {"method", method}, {"config", config}};
    return git_blob_hash(inputs.dump());
}

nlohmann::json RunManifest::to_json() const
{
    nlohmann::json j;
    j["command"] = command;
    j["preset"] = preset;
    j["method"] = method;
    j["config"] = config;
    j["input_hash"] = input_hash();
    j["outputs"] = outputs;
    j["wall_time_s"] = wall_time_s;
    if (!extra.empty()) j["extra"] = extra;
    return j;
}

void RunManifest::write(const std::filesystem::path& path) const
{
    std::ofstream os(path);
    if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
    os << to_json().dump(2) << '\n';
    if (!os) throw IoError("write failed for '" + path.string() + "'");
}

} // namespace mfc
