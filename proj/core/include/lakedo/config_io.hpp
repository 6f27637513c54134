/**
 * @file config_io.hpp
 * @brief Versioned JSON experiment configuration with strict key checking
 *        and a platform-stable content hash.
 */
#pragma once

#include "lakedo/april.hpp"
#include "lakedo/pril.hpp"
#include "lakedo/synthetic.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace lakedo {

inline constexpr int kConfigSchemaVersion = 1;

/// Cartesian grid of conservation weights.
struct SweepConfig {
    std::vector<double> lambda_epi{0.0, 1.0, 10.0, 100.0, 1000.0};
    std::vector<double> lambda_hyp{1.0};

    void validate() const;
};

/// Sections: "train", "april", "generate", "sweep"; every section and key
/// is optional, unknown keys are rejected.
struct ExperimentConfig {
    TrainConfig train;
    AprilConfig april;
    GenConfig generate;
    SweepConfig sweep;

    void validate() const;
};

/// Throws ConfigError naming the offending field.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Every field with sorted keys and shortest round-trip numbers.
std::string canonical_json(const ExperimentConfig& config);

/// 64-bit FNV-1a of canonical_json.
std::uint64_t config_hash(const ExperimentConfig& config);
std::string hash_hex(std::uint64_t hash);

}  // namespace lakedo
