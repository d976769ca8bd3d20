#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace evdiff {

// Written atomically (temp file + rename) next to a verb's primary output
// after the run succeeds; absent on failure.
struct RunManifest {
    std::string verb;
    std::vector<std::string> args;
    std::uint64_t seed = 0;
    std::string config_hash;
    std::string toolkit_version;
    std::vector<std::string> outputs;
    double wall_seconds = 0.0;
};

// FNV-1a over the canonical "verb arg0 arg1 ..." string.
std::string config_hash(const std::string& verb, const std::vector<std::string>& args);

// "<primary_output>.manifest.json"
std::string manifest_path_for(const std::string& primary_output);

void write_run_manifest(const RunManifest& m, const std::string& path);

}  // namespace evdiff
