#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace lakedo::cli {

/// Run record written as manifest.json at the end of every command.
struct RunManifest {
    std::string command;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::map<std::string, std::string> inputs;
    std::vector<std::string> outputs;
    std::map<std::string, std::string> extra;
    std::string version;
    double duration_seconds = 0.0;
};

std::string format_manifest(const RunManifest& manifest);
void write_manifest(const RunManifest& manifest, const std::filesystem::path& path);

}  // namespace lakedo::cli
