#include "lakedo_cli/manifest.hpp"

#include "lakedo/csv.hpp"

#include <json.hpp>

namespace lakedo::cli {

std::string format_manifest(const RunManifest& m) {
    nlohmann::ordered_json j;
    j["command"] = m.command;
    j["config_hash"] = m.config_hash;
    j["seed"] = m.seed;
    j["inputs"] = m.inputs;
    j["outputs"] = m.outputs;
    if (!m.extra.empty()) j["extra"] = m.extra;
    j["version"] = m.version;
    j["duration_seconds"] = m.duration_seconds;
    return j.dump(2) + "\n";
}

void write_manifest(const RunManifest& manifest, const std::filesystem::path& path) {
    csv::write_file_atomic(path, format_manifest(manifest));
}

}  // namespace lakedo::cli
