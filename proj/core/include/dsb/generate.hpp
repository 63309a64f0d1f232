#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dsb/density.hpp"
#include "dsb/rng.hpp"
#include "dsb/tabular.hpp"
#include "dsb/vae.hpp"

namespace dsb::gen {

/// The eight benchmark arms. Baseline trains on the original data only; every
/// other variant appends synthetic rows built as:
///   OS      weighted resampling of original rows (no model, y copied)
///   SB_AE   smoothed bootstrap on a deterministic autoencoder's latent codes
///   BVAE    ancestral sampling from the plain-loss model
///   kBVAE   smoothed bootstrap on the plain-loss model's latent means
///   BVAEw   ancestral sampling from the balanced-loss model
///   kBVAEw  smoothed bootstrap on the balanced-loss model's latent means
///   DSB     smoothed bootstrap on the correlation-penalized model's latent means
enum class Variant { Baseline, OS, SB_AE, BVAE, kBVAE, BVAEw, kBVAEw, DSB };

std::string variant_name(Variant v);
Variant variant_from_name(std::string_view name);
std::vector<Variant> all_variants();

/// What a variant must be given: nothing, or a model trained a specific way.
enum class ModelKind { none, autoencoder, plain, balanced, disentangled };

ModelKind required_model(Variant v);
std::string model_kind_name(ModelKind k);

/// Train-config template realizing a model kind (loss variant, KL/noise
/// switches); base supplies every other knob.
vae::TrainConfig train_config_for(ModelKind kind, vae::TrainConfig base);

/// Throws when `model` was not trained the way `variant` requires.
void check_model_compat(Variant variant, const vae::VaeModel& model);

struct GenConfig {
    std::optional<std::size_t> m;  // synthetic row count; default n
    double hmult = 1.0;
    std::uint64_t rng_seed = 0;
    Variant variant = Variant::DSB;
};

struct SyntheticBatch {
    tabular::Dataset rows;
    std::vector<std::size_t> seed_indices;  // provenance, length m
    Variant variant = Variant::DSB;
    std::uint64_t rng_seed = 0;
};

/// m categorical draws over rows with the normalized relevance weights.
std::vector<std::size_t> sample_seeds(const density::RelevanceWeights& weights, std::size_t m,
                                      Rng& rng);

struct BootstrapDraw {
    Eigen::MatrixXd z;                      // m x q
    std::vector<std::size_t> seed_indices;  // chosen mu rows
};

/// Weighted smoothed bootstrap in latent space: pick a seed row by the
/// normalized weights, then add independent per-dimension Gaussian noise with
/// stddev hmult * h_j. Seed draws and noise come from the one generator, in
/// row order.
BootstrapDraw smoothed_bootstrap(const Eigen::MatrixXd& latent_mu,
                                 const density::RelevanceWeights& weights,
                                 const density::BandwidthSpec& bw, std::size_t m, Rng& rng);

/// Builds the synthetic batch for cfg.variant. `weights` are the relevance
/// weights of the training target (their length defines n and the default m).
/// OS needs `train` (rows are copied from it) and no model; every other
/// variant needs `model`/`latent`/`encoded` matching its training recipe and
/// ignores `train`, so a loaded model file alone suffices.
SyntheticBatch generate(const tabular::Dataset* train, const tabular::EncodedMatrix& encoded,
                        const density::RelevanceWeights& weights, const vae::VaeModel* model,
                        const vae::LatentSummary* latent, const GenConfig& cfg);

/// original rows followed by the synthetic rows, schemas checked.
tabular::Dataset build_training_set(const tabular::Dataset& original, const SyntheticBatch& synth);

}  // namespace dsb::gen
