#include "evdiff/manifest.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "evdiff/errors.hpp"
#include "evdiff/version.hpp"

namespace evdiff {

std::string config_hash(const std::string& verb, const std::vector<std::string>& args) {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&](const std::string& s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ULL;
        }
        h ^= 0xff;
        h *= 1099511628211ULL;
    };
    mix(verb);
    for (const auto& a : args) mix(a);
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string manifest_path_for(const std::string& primary_output) {
    return primary_output + ".manifest.json";
}

void write_run_manifest(const RunManifest& m, const std::string& path) {
    nlohmann::json j;
    j["verb"] = m.verb;
    j["args"] = m.args;
    j["seed"] = m.seed;
    j["config_hash"] = m.config_hash;
    j["toolkit_version"] = m.toolkit_version.empty() ? kVersion : m.toolkit_version;
    j["outputs"] = m.outputs;
    j["wall_seconds"] = m.wall_seconds;

    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::trunc);
        if (!f) throw IoError("cannot write manifest temp file: " + tmp);
        f << j.dump(2) << "\n";
        if (!f) throw IoError("manifest write failed: " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace evdiff
