#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dsb/bench.hpp"
#include "dsb/generate.hpp"
#include "dsb/synthdata.hpp"
#include "dsb/tabular.hpp"
#include "dsb/vae.hpp"

namespace dsb::pipeline {

struct DatasetRef {
    std::string csv;
    std::string schema;
    bool synth = false;  // generate the dataset from the synth spec instead
};

/// One config drives every command; all randomness is derived from `seed` by
/// purpose, so per-stage seeds never appear here. Serialized as JSON
/// (run_config_to_json / run_config_from_json round-trip losslessly).
struct RunConfig {
    std::uint64_t seed = 0;
    std::string out_dir = "out";
    int threads = 1;
    DatasetRef dataset;
    synth::SynthSpec synth_spec;
    vae::TrainConfig train;        // loss_variant/rng_seed are derived, not configured
    vae::ArchitectureSpec arch;    // input_dim resolved from the data
    gen::GenConfig gen;
    std::size_t folds = 10;
    std::vector<gen::Variant> variants = gen::all_variants();
    std::vector<bench::RegressorSpec> regressors{
        {bench::RegressorSpec::Kind::ridge, 1e-2, 5},
        {bench::RegressorSpec::Kind::knn, 1e-2, 5}};
    double rare_quantile = 0.9;
    gen::Variant reference = gen::Variant::Baseline;
    std::string model_path;  // `generate` input; default <out_dir>/model.bin
};

RunConfig run_config_from_json(const std::string& text);
std::string run_config_to_json(const RunConfig& cfg);
RunConfig load_run_config(const std::string& path);

/// The configured CSV+schema pair, or the synth-spec dataset when
/// dataset.synth is set.
tabular::Dataset load_dataset(const RunConfig& cfg);

struct FitOutputs {
    std::string model_path;
    std::string trace_path;
};

/// Trains the model kind cfg.gen.variant requires on the whole dataset and
/// writes the self-contained model file plus a per-epoch loss trace JSON.
FitOutputs run_fit(const RunConfig& cfg);

struct GenerateOutputs {
    std::string csv_path;
    std::string provenance_path;
};

/// Writes the synthetic rows as CSV plus a provenance sidecar. OS reads the
/// dataset; every other variant reads only the model file.
GenerateOutputs run_generate(const RunConfig& cfg);

struct BenchmarkOutputs {
    std::string json_path;
    std::string csv_path;
    std::size_t total_cells = 0;
    std::size_t failed_cells = 0;
    bool all_failed = false;
};

BenchmarkOutputs run_benchmark_files(const RunConfig& cfg);

struct SynthOutputs {
    std::string csv_path;
    std::string schema_path;
};

SynthOutputs run_synth(const RunConfig& cfg);

}  // namespace dsb::pipeline
