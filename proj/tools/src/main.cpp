#include "lakedo_cli/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    using namespace lakedo::cli;

    CLI::App app{"Process-guided dissolved-oxygen modelling for stratified lakes"};
    app.set_version_flag("--version", version_string());
    app.require_subcommand(1);

    GenerateArgs gen;
    std::uint64_t seed = 0;
    auto* generate = app.add_subcommand("generate", "Write a synthetic lake dataset");
    generate->add_option("--config", gen.config, "Experiment config (JSON)");
    generate->add_option("--out", gen.out, "Output directory")->required();
    auto* gen_seed = generate->add_option("--seed", seed, "Generator seed");

    TrainArgs train;
    auto* train_cmd = app.add_subcommand("train", "Train a predictor");
    train_cmd->add_option("--mode", train.mode, "baseline, pril or april")
        ->check(CLI::IsMember({"baseline", "pril", "april"}));
    train_cmd->add_option("--config", train.config, "Experiment config (JSON)");
    train_cmd->add_option("--data", train.data, "Directory of lake CSVs")->required();
    train_cmd->add_option("--out", train.out, "Output directory")->required();
    auto* train_seed = train_cmd->add_option("--seed", seed, "Training seed");
    train_cmd->add_option("--k", train.k, "Substeps on drastic days (april)");

    EvaluateArgs eval;
    auto* evaluate = app.add_subcommand("evaluate", "Score a checkpoint and export time series");
    evaluate->add_option("--checkpoint", eval.checkpoint, "Predictor checkpoint")->required();
    evaluate->add_option("--config", eval.config, "Experiment config (JSON)");
    evaluate->add_option("--data", eval.data, "Directory of lake CSVs")->required();
    evaluate->add_option("--out", eval.out, "Output directory")->required();
    evaluate->add_option("--k", eval.k, "Reference substeps for mass inconsistency");
    evaluate->add_flag("--daily-reference", eval.daily_reference, "Use the daily step as reference");

    SweepArgs sweep;
    auto* sweep_cmd = app.add_subcommand("sweep", "Train over a grid of conservation weights");
    sweep_cmd->add_option("--config", sweep.config, "Experiment config with a sweep section");
    sweep_cmd->add_option("--data", sweep.data, "Directory of lake CSVs")->required();
    sweep_cmd->add_option("--out", sweep.out, "Output directory")->required();
    auto* sweep_seed = sweep_cmd->add_option("--seed", seed, "Training seed");
    sweep_cmd->add_option("--threads", sweep.threads, "Parallel grid points")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    if (generate->parsed()) {
        if (*gen_seed) gen.seed = seed;
        return run_guarded([&] { cmd_generate(gen); });
    }
    if (train_cmd->parsed()) {
        if (*train_seed) train.seed = seed;
        return run_guarded([&] { cmd_train(train); });
    }
    if (evaluate->parsed()) return run_guarded([&] { cmd_evaluate(eval); });
    if (*sweep_seed) sweep.seed = seed;
    return run_guarded([&] { cmd_sweep(sweep); });
}
