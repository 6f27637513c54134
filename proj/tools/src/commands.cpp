#include "lakedo_cli/commands.hpp"

#include "lakedo/april.hpp"
#include "lakedo/config_io.hpp"
#include "lakedo/csv.hpp"
#include "lakedo/error.hpp"
#include "lakedo/eval.hpp"
#include "lakedo/networks.hpp"
#include "lakedo/pril.hpp"
#include "lakedo/synthetic.hpp"
#include "lakedo_cli/manifest.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <iostream>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;

namespace lakedo::cli {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

ExperimentConfig load_or_default(const std::optional<fs::path>& path) {
    if (path) return load_config(*path);
    ExperimentConfig config;
    config.validate();
    return config;
}

void ensure_directory(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
}

std::vector<LakeSeries> load_lakes(const fs::path& data_dir) {
    std::vector<LakeSeries> lakes;
    for (const auto& path : lake_files(data_dir)) lakes.push_back(load_series(path));
    if (lakes.empty()) throw IoError("no lake files in " + data_dir.string());
    return lakes;
}

std::string relative_name(const fs::path& path) { return path.filename().string(); }

std::string cell(double x) { return std::isfinite(x) ? csv::format_double(x) : std::string{}; }

}  // namespace

std::string version_string() {
#ifdef LAKEDO_VERSION_STRING
    return LAKEDO_VERSION_STRING;
#else
    return "unknown";
#endif
}

std::vector<fs::path> lake_files(const fs::path& data_dir) {
    std::error_code ec;
    if (!fs::is_directory(data_dir, ec)) throw IoError("data directory not found: " + data_dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(data_dir, ec)) {
        const auto& p = entry.path();
        if (!entry.is_regular_file() || p.extension() != ".csv") continue;
        if (p.stem().string().find('.') != std::string::npos) continue;  // truth, labels, exports
        files.push_back(p);
    }
    if (ec) throw IoError("cannot list " + data_dir.string());
    std::sort(files.begin(), files.end());
    return files;
}

void cmd_generate(const GenerateArgs& args) {
    const auto start = Clock::now();
    auto config = load_or_default(args.config);
    if (args.seed) config.generate.seed = *args.seed;
    config.validate();
    ensure_directory(args.out);

    RunManifest manifest;
    manifest.command = "generate";
    manifest.seed = config.generate.seed;
    manifest.config_hash = hash_hex(config_hash(config));
    if (args.config) manifest.inputs["config"] = args.config->string();
    manifest.inputs["out"] = args.out.string();

    for (const auto& lake : generate_dataset(config.generate)) {
        const auto data_path = args.out / (lake.series.lake_id + ".csv");
        const auto truth_path = args.out / (lake.series.lake_id + ".truth.csv");
        write_series(lake.series, data_path);
        write_truth(lake.series, lake.truth, truth_path);
        manifest.outputs.push_back(relative_name(data_path));
        manifest.outputs.push_back(relative_name(truth_path));
    }
    manifest.version = version_string();
    manifest.duration_seconds = seconds_since(start);
    write_manifest(manifest, args.out / "manifest.json");
}

void cmd_train(const TrainArgs& args) {
    const auto start = Clock::now();
    if (args.mode != "baseline" && args.mode != "pril" && args.mode != "april") {
        throw ConfigError("--mode must be baseline, pril or april, got '" + args.mode + "'");
    }
    auto config = load_or_default(args.config);
    if (args.seed) config.train.seed = *args.seed;
    if (args.k) {
        if (args.mode != "april") throw ConfigError("--k applies to --mode april only");
        config.april.k_drastic = *args.k;
    }
    if (args.mode == "baseline") {
        config.train.lambda_mc_epi = config.train.lambda_mc_hyp = config.train.lambda_mc_total = 0.0;
    }
    if (args.mode != "april") config.train.substep_k = 1;
    config.validate();

    const auto lakes = load_lakes(args.data);
    const auto split = split_dataset(lakes, config.train.window_length, config.train.validation_windows);
    ensure_directory(args.out);

    RunManifest manifest;
    manifest.command = "train";
    manifest.seed = config.train.seed;
    manifest.config_hash = hash_hex(config_hash(config));
    if (args.config) manifest.inputs["config"] = args.config->string();
    manifest.inputs["data"] = args.data.string();
    manifest.inputs["out"] = args.out.string();
    manifest.extra["mode"] = args.mode;

    TrainResult result;
    if (args.mode == "april") {
        auto april = train_april(split.train, split.validation, config.train, config.april);
        write_history(april.stage1.history, args.out / "stage1_history.csv");
        manifest.outputs.push_back("stage1_history.csv");
        write_checkpoint(to_checkpoint(april.discriminator), args.out / "discriminator.txt");
        manifest.outputs.push_back("discriminator.txt");
        for (const auto& lake : lakes) {
            const auto policy = classify_days(april.discriminator, lake, config.april);
            const auto name = lake.lake_id + ".labels.csv";
            write_labels(lake, policy, args.out / name);
            manifest.outputs.push_back(name);
        }
        result = std::move(april.final);
    } else {
        result = train_pril(split.train, split.validation, config.train);
    }

    auto checkpoint = to_checkpoint(result.params);
    checkpoint.meta["mode"] = args.mode;
    checkpoint.meta["window_length"] = std::to_string(config.train.window_length);
    checkpoint.meta["validation_windows"] = std::to_string(config.train.validation_windows);
    checkpoint.meta["seed"] = std::to_string(config.train.seed);
    checkpoint.meta["best_epoch"] = std::to_string(result.best_epoch);
    write_checkpoint(checkpoint, args.out / "checkpoint.txt");
    write_history(result.history, args.out / "history.csv");
    manifest.outputs.push_back("checkpoint.txt");
    manifest.outputs.push_back("history.csv");
    manifest.extra["best_epoch"] = std::to_string(result.best_epoch);
    manifest.version = version_string();
    manifest.duration_seconds = seconds_since(start);
    write_manifest(manifest, args.out / "manifest.json");
}

void cmd_evaluate(const EvaluateArgs& args) {
    const auto start = Clock::now();
    auto config = load_or_default(args.config);
    const auto checkpoint = read_checkpoint(args.checkpoint);
    const auto params = predictor_from_checkpoint(checkpoint);
    auto meta_size = [&](const char* key, std::size_t fallback) {
        const auto it = checkpoint.meta.find(key);
        if (it == checkpoint.meta.end()) return fallback;
        try {
            return static_cast<std::size_t>(std::stoull(it->second));
        } catch (const std::exception&) {
            throw SchemaError(std::string("checkpoint meta ") + key + " is not a number");
        }
    };
    const std::size_t window = meta_size("window_length", config.train.window_length);
    const std::size_t validation_windows = meta_size("validation_windows", config.train.validation_windows);
    InconsistencyOptions options;
    if (args.k) {
        if (*args.k < 1) throw ConfigError("--k must be at least 1");
        options.reference_k = *args.k;
    }
    options.daily_reference = args.daily_reference;

    const auto lakes = load_lakes(args.data);
    for (const auto& lake : lakes) {
        if (lake.feature_count != params.feature_count) {
            throw DomainError("checkpoint expects " + std::to_string(params.feature_count) + " features but " +
                              lake.lake_id + " has " + std::to_string(lake.feature_count));
        }
    }
    ensure_directory(args.out);

    RunManifest manifest;
    manifest.command = "evaluate";
    manifest.config_hash = hash_hex(config_hash(config));
    manifest.seed = meta_size("seed", 0);
    manifest.inputs["checkpoint"] = args.checkpoint.string();
    manifest.inputs["data"] = args.data.string();
    manifest.inputs["out"] = args.out.string();

    std::vector<double> pred_pool[3], obs_pool[3];
    double inconsistency_sum[3] = {0, 0, 0};
    std::size_t inconsistency_n[3] = {0, 0, 0};
    const int sim_k = options.daily_reference ? 1 : options.reference_k;
    for (const auto& lake : lakes) {
        const auto preds = predict_series(params, lake, window);
        const auto simulated = simulate_trajectory(lake, preds, sim_k);
        GroundTruth truth;
        const auto truth_path = args.data / (lake.lake_id + ".truth.csv");
        if (fs::exists(truth_path)) truth = read_truth(truth_path);
        if (!truth.state.empty() && truth.state.size() != lake.size()) {
            throw DomainError("truth file length differs for " + lake.lake_id);
        }
        const auto name = lake.lake_id + ".timeseries.csv";
        export_timeseries(lake, preds, simulated, truth.state, args.out / name);
        manifest.outputs.push_back(name);

        for (Task task : kAllTasks) {
            const auto i = static_cast<std::size_t>(task);
            const auto& obs = lake.observations(task);
            for (std::size_t t = 0; t < lake.size(); ++t) {
                if (!obs[t]) continue;
                pred_pool[i].push_back(*preds[t].get(task));
                obs_pool[i].push_back(*obs[t]);
            }
        }
        if (lake.size() >= 2) {
            const auto inc = mass_inconsistency(preds, lake, options);
            for (Task task : kAllTasks) {
                const auto i = static_cast<std::size_t>(task);
                if (!std::isfinite(inc[task])) continue;
                inconsistency_sum[i] += inc[task];
                ++inconsistency_n[i];
            }
        }
    }

    SeedMetrics metrics;
    for (Task task : kAllTasks) {
        const auto i = static_cast<std::size_t>(task);
        metrics.rmse[task] = obs_pool[i].empty() ? std::nan("") : rmse(pred_pool[i], obs_pool[i]);
        metrics.inconsistency[task] =
            inconsistency_n[i] ? inconsistency_sum[i] / static_cast<double>(inconsistency_n[i]) : std::nan("");
    }
    const auto mode = checkpoint.meta.count("mode") ? checkpoint.meta.at("mode") : std::string("model");
    const EvalReport report = aggregate_report(mode, std::span<const SeedMetrics>(&metrics, 1));
    csv::write_file_atomic(args.out / "comparison.csv", compare_models(std::span(&report, 1)).to_csv());
    manifest.outputs.push_back("comparison.csv");

    const auto split = split_dataset(lakes, window, validation_windows);
    const auto score = validation_score(params, split.validation, window);
    std::ostringstream val;
    val << "rmse_epi,rmse_hyp,rmse_total,rmse_pooled\n"
        << cell(score.rmse[Task::Epi]) << ',' << cell(score.rmse[Task::Hyp]) << ',' << cell(score.rmse[Task::Total])
        << ',' << cell(score.pooled) << '\n';
    csv::write_file_atomic(args.out / "validation_rmse.csv", val.str());
    manifest.outputs.push_back("validation_rmse.csv");

    manifest.version = version_string();
    manifest.duration_seconds = seconds_since(start);
    write_manifest(manifest, args.out / "manifest.json");
}

void cmd_sweep(const SweepArgs& args) {
    const auto start = Clock::now();
    auto config = load_or_default(args.config);
    if (args.seed) config.train.seed = *args.seed;
    config.train.substep_k = 1;
    config.validate();
    if (args.threads == 0) throw ConfigError("--threads must be at least 1");

    const auto lakes = load_lakes(args.data);
    const auto split = split_dataset(lakes, config.train.window_length, config.train.validation_windows);
    ensure_directory(args.out);

    struct Point {
        double lambda_epi = 0.0;
        double lambda_hyp = 0.0;
        TaskValues rmse;
        std::string error;
    };
    std::vector<Point> points;
    for (double le : config.sweep.lambda_epi)
        for (double lh : config.sweep.lambda_hyp) points.push_back({le, lh, {}, {}});

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < points.size(); i = next++) {
            auto& p = points[i];
            TrainConfig cfg = config.train;
            cfg.lambda_mc_epi = p.lambda_epi;
            cfg.lambda_mc_hyp = p.lambda_hyp;
            try {
                const auto result = train_pril(split.train, split.validation, cfg);
                p.rmse = validation_score(result.params, split.validation, cfg.window_length).rmse;
            } catch (const std::exception& e) {
                p.error = e.what();
            }
        }
    };
    const std::size_t width = std::min(args.threads, std::max<std::size_t>(points.size(), 1));
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < width; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    std::ostringstream out, failures;
    out << "lambda_epi,lambda_hyp,rmse_epi,rmse_hyp,rmse_total\n";
    std::size_t failed = 0;
    for (const auto& p : points) {
        out << csv::format_double(p.lambda_epi) << ',' << csv::format_double(p.lambda_hyp);
        for (Task task : kAllTasks) out << ',' << (p.error.empty() ? cell(p.rmse[task]) : std::string{});
        out << '\n';
        if (!p.error.empty()) {
            ++failed;
            failures << csv::format_double(p.lambda_epi) << ',' << csv::format_double(p.lambda_hyp) << ",\""
                     << p.error << "\"\n";
            std::cerr << "sweep point (" << p.lambda_epi << ", " << p.lambda_hyp << ") failed: " << p.error << '\n';
        }
    }
    csv::write_file_atomic(args.out / "sweep.csv", out.str());

    RunManifest manifest;
    manifest.command = "sweep";
    manifest.seed = config.train.seed;
    manifest.config_hash = hash_hex(config_hash(config));
    if (args.config) manifest.inputs["config"] = args.config->string();
    manifest.inputs["data"] = args.data.string();
    manifest.inputs["out"] = args.out.string();
    manifest.outputs.push_back("sweep.csv");
    if (failed > 0) {
        csv::write_file_atomic(args.out / "sweep_failures.csv", "lambda_epi,lambda_hyp,error\n" + failures.str());
        manifest.outputs.push_back("sweep_failures.csv");
    }
    manifest.extra["failed_points"] = std::to_string(failed);
    manifest.version = version_string();
    manifest.duration_seconds = seconds_since(start);
    write_manifest(manifest, args.out / "manifest.json");
}

int run_guarded(const std::function<void()>& body) {
    try {
        body();
        return kExitOk;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }
}

}  // namespace lakedo::cli
