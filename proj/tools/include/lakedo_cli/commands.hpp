/**
 * @file commands.hpp
 * @brief The generate, train, evaluate and sweep commands behind the
 *        `lakedo` executable, callable in-process.
 *
 * Each command throws lakedo::Error subclasses on failure; run_guarded
 * turns them into exit codes (0 ok, 2 usage/config/data, 3 numerical).
 */
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace lakedo::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumerical = 3;

struct GenerateArgs {
    std::optional<std::filesystem::path> config;
    std::filesystem::path out;
    std::optional<std::uint64_t> seed;
};

struct TrainArgs {
    std::string mode = "pril";  // baseline | pril | april
    std::optional<std::filesystem::path> config;
    std::filesystem::path data;
    std::filesystem::path out;
    std::optional<std::uint64_t> seed;
    std::optional<int> k;  // substeps on drastic days (april only)
};

struct EvaluateArgs {
    std::filesystem::path checkpoint;
    std::optional<std::filesystem::path> config;
    std::filesystem::path data;
    std::filesystem::path out;
    std::optional<int> k;  // reference substeps, default 192
    bool daily_reference = false;
};

struct SweepArgs {
    std::optional<std::filesystem::path> config;
    std::filesystem::path data;
    std::filesystem::path out;
    std::optional<std::uint64_t> seed;
    std::size_t threads = 1;
};

void cmd_generate(const GenerateArgs& args);
void cmd_train(const TrainArgs& args);
void cmd_evaluate(const EvaluateArgs& args);
void cmd_sweep(const SweepArgs& args);

/// Runs `body`, printing any failure to stderr, and returns the exit code.
int run_guarded(const std::function<void()>& body);

/// Lake CSVs of a data directory (files ending in .csv that are not
/// truth, label or time-series exports), sorted by name.
std::vector<std::filesystem::path> lake_files(const std::filesystem::path& data_dir);

std::string version_string();

}  // namespace lakedo::cli
