#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "dsb/generate.hpp"
#include "dsb/pipeline.hpp"

namespace {

// Exit codes: 0 success, 1 bad usage or configuration, 2 failure while
// running (unreadable data, training/generation errors, all cells failed).
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

struct CommonFlags {
    std::string config_path;
    std::uint64_t seed = 0;
    std::string out_dir;
    std::string variant;
    int threads = 1;

    CLI::Option* config_opt = nullptr;
    CLI::Option* seed_opt = nullptr;
    CLI::Option* out_opt = nullptr;
    CLI::Option* variant_opt = nullptr;
    CLI::Option* threads_opt = nullptr;
};

void add_common_flags(CLI::App* cmd, CommonFlags& f, bool with_variant) {
    f.config_opt = cmd->add_option("--config", f.config_path,
                                   "Run configuration JSON; explicit flags override its values")
                       ->check(CLI::ExistingFile);
    f.seed_opt = cmd->add_option("--seed", f.seed, "Global RNG seed");
    f.out_opt = cmd->add_option("--out", f.out_dir, "Output directory");
    if (with_variant)
        f.variant_opt = cmd->add_option(
            "--variant", f.variant,
            "Generation variant: Baseline, OS, SB+AE, BVAE, kBVAE, BVAEw, kBVAEw, DSB");
    f.threads_opt =
        cmd->add_option("--threads", f.threads, "Worker threads for cross-validation folds")
            ->check(CLI::PositiveNumber);
}

/// Builds the effective RunConfig: file values first, then flag overrides.
dsb::pipeline::RunConfig build_config(const CommonFlags& f) {
    dsb::pipeline::RunConfig cfg;
    if (f.config_opt->count() > 0) cfg = dsb::pipeline::load_run_config(f.config_path);
    if (f.seed_opt->count() > 0) cfg.seed = f.seed;
    if (f.out_opt->count() > 0) cfg.out_dir = f.out_dir;
    if (f.threads_opt->count() > 0) cfg.threads = f.threads;
    if (f.variant_opt != nullptr && f.variant_opt->count() > 0)
        cfg.gen.variant = dsb::gen::variant_from_name(f.variant);
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Imbalance-aware synthetic data for tabular regression: fit a latent-variable\n"
        "model, generate rows via a weighted smoothed bootstrap in latent space, and\n"
        "benchmark augmentation variants under cross-validation."};
    app.require_subcommand(1);

    CommonFlags fit_f, gen_f, bench_f, synth_f;
    CLI::App* fit_cmd =
        app.add_subcommand("fit", "Train a model on a dataset and save it with its encoding");
    add_common_flags(fit_cmd, fit_f, true);
    CLI::App* gen_cmd = app.add_subcommand(
        "generate", "Sample synthetic rows from a saved model (or the dataset, for OS)");
    add_common_flags(gen_cmd, gen_f, true);
    CLI::App* bench_cmd = app.add_subcommand(
        "benchmark", "Cross-validated comparison of augmentation variants and regressors");
    add_common_flags(bench_cmd, bench_f, true);
    CLI::App* synth_cmd =
        app.add_subcommand("synth", "Write a synthetic imbalanced-regression dataset");
    add_common_flags(synth_cmd, synth_f, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    // Configuration phase: everything here is a usage error.
    dsb::pipeline::RunConfig cfg;
    bool restrict_bench_variants = false;
    try {
        if (fit_cmd->parsed()) {
            cfg = build_config(fit_f);
            if (dsb::gen::required_model(cfg.gen.variant) == dsb::gen::ModelKind::none)
                throw std::invalid_argument("variant " + dsb::gen::variant_name(cfg.gen.variant) +
                                            " trains no model; pick a model-backed variant");
        } else if (gen_cmd->parsed()) {
            cfg = build_config(gen_f);
            if (cfg.gen.variant == dsb::gen::Variant::Baseline)
                throw std::invalid_argument("variant Baseline produces no synthetic rows");
        } else if (bench_cmd->parsed()) {
            cfg = build_config(bench_f);
            restrict_bench_variants = bench_f.variant_opt->count() > 0;
        } else {
            cfg = build_config(synth_f);
        }
        if (restrict_bench_variants) cfg.variants = {cfg.gen.variant};
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    // Execution phase. Invalid-argument errors are configuration problems
    // discovered late (incompatible variant, impossible fold count) and keep
    // the usage exit code; everything else is a data or runtime failure.
    try {
        if (fit_cmd->parsed()) {
            const auto out = dsb::pipeline::run_fit(cfg);
            std::cout << "model: " << out.model_path << "\n"
                      << "trace: " << out.trace_path << "\n";
        } else if (gen_cmd->parsed()) {
            const auto out = dsb::pipeline::run_generate(cfg);
            std::cout << "rows: " << out.csv_path << "\n"
                      << "provenance: " << out.provenance_path << "\n";
        } else if (bench_cmd->parsed()) {
            const auto out = dsb::pipeline::run_benchmark_files(cfg);
            std::cout << "report: " << out.json_path << "\n"
                      << "cells: " << out.csv_path << "\n"
                      << out.total_cells - out.failed_cells << "/" << out.total_cells
                      << " cells succeeded\n";
            if (out.all_failed) {
                std::cerr << "error: every benchmark cell failed\n";
                return kExitRuntime;
            }
        } else {
            const auto out = dsb::pipeline::run_synth(cfg);
            std::cout << "rows: " << out.csv_path << "\n"
                      << "schema: " << out.schema_path << "\n";
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return 0;
}
