#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dsb/generate.hpp"
#include "dsb/regress.hpp"
#include "dsb/tabular.hpp"
#include "dsb/vae.hpp"
#include "dsb/wilcoxon.hpp"

namespace dsb::bench {

struct RegressorSpec {
    enum class Kind { ridge, knn };
    Kind kind = Kind::ridge;
    double ridge_lambda = 1e-2;
    std::size_t knn_k = 5;
};

std::string regressor_name(const RegressorSpec& spec);
RegressorSpec regressor_from_name(const std::string& name);

struct BenchConfig {
    std::size_t folds = 10;
    std::vector<gen::Variant> variants = gen::all_variants();
    std::vector<RegressorSpec> regressors{{RegressorSpec::Kind::ridge, 1e-2, 5},
                                          {RegressorSpec::Kind::knn, 1e-2, 5}};
    vae::TrainConfig train;          // per-variant loss settings are derived from this template
    vae::ArchitectureSpec arch;      // input_dim/latent_dim resolved per fold
    gen::GenConfig gen;              // m and hmult; variant/seed set per cell
    double rare_quantile = 0.9;      // training-y quantile defining the rare region
    gen::Variant reference = gen::Variant::Baseline;
    std::uint64_t rng_seed = 0;
    int threads = 1;                 // fold-level parallelism; output independent of it
};

/// One (fold, variant, regressor) result: metrics, or the error that stopped it.
struct Cell {
    std::size_t fold = 0;
    gen::Variant variant = gen::Variant::Baseline;
    std::string regressor;
    std::optional<regress::MetricSet> metrics;
    std::string error;
};

struct FoldInfo {
    std::size_t fold = 0;
    std::size_t train_rows = 0;
    std::size_t test_rows = 0;
    std::vector<std::string> models_trained;  // model kinds fitted on this fold
};

struct Aggregate {
    gen::Variant variant = gen::Variant::Baseline;
    std::string regressor;
    std::size_t folds_valid = 0;
    double rmse_mean = 0.0, rmse_stddev = 0.0;
    double mae_mean = 0.0, mae_stddev = 0.0;
    double weighted_mse_mean = 0.0, weighted_mse_stddev = 0.0;
    std::size_t r2_folds = 0;
    std::optional<double> r2_mean, r2_stddev;
    std::size_t rare_folds = 0;
    std::optional<double> rare_region_rmse_mean, rare_region_rmse_stddev;
    std::optional<stats::WilcoxonResult> vs_reference;  // paired on per-fold RMSE
};

struct BenchReport {
    BenchConfig config;
    std::size_t dataset_rows = 0;
    std::vector<FoldInfo> folds;
    std::vector<Cell> cells;        // fold-major, then config variant/regressor order
    std::vector<Aggregate> aggregates;
};

/// K-fold ablation run. Everything fitted (encoding, weights, bandwidths,
/// models) sees only the fold's training split. Cell failures are recorded in
/// place; the run itself only throws on invalid configuration or data.
BenchReport run_benchmark(const tabular::Dataset& ds, const BenchConfig& cfg);

bool all_cells_failed(const BenchReport& report);

/// Deterministic serializations (no timestamps; reruns with one seed match
/// byte for byte, whatever the thread count).
std::string report_to_json(const BenchReport& report);
std::string report_to_csv(const BenchReport& report);

}  // namespace dsb::bench
