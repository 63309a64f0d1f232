#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "dsb/nn.hpp"
#include "dsb/rng.hpp"

namespace dsb::vae {

/// Loss variants: `plain` is the textbook beta-VAE objective, `balanced` adds
/// inverse-density weights on the target reconstruction, `disentangled` adds
/// the pairwise latent-correlation penalty on top of that. Serialized as
/// "plain" / "balanced" / "final".
enum class LossVariant { plain, balanced, disentangled };

std::string loss_variant_name(LossVariant v);
LossVariant loss_variant_from_name(std::string_view name);

struct ArchitectureSpec {
    Eigen::Index input_dim = 0;  // d: encoded feature count (y enters separately)
    Eigen::Index latent_dim = 0; // q; <= 0 requests the default min(8, ceil(d/2))
    std::vector<Eigen::Index> encoder_hidden{64, 64};
    std::vector<Eigen::Index> decoder_hidden{64, 64};
    nn::Activation activation = nn::Activation::tanh;
};

/// Fills input_dim from the data and resolves a defaulted latent_dim;
/// validates widths.
ArchitectureSpec resolve_architecture(ArchitectureSpec spec, Eigen::Index input_dim);

struct TrainConfig {
    double beta_x = 1.0;
    double beta_y = 3.0;
    double beta_kl = 1e-5;
    double beta_corr = 1.0;
    double alpha = 1.0;
    int epochs = 500;
    int batch_size = 64;
    double learning_rate = 1e-3;
    std::uint64_t rng_seed = 0;
    LossVariant loss_variant = LossVariant::disentangled;
    double kde_bandwidth = 0.0;  // <= 0: Silverman's rule on the training y
    // Autoencoder mode: train and encode with z = mu (no reparameterization
    // noise). Meaningful together with loss_variant=plain and beta_kl=0.
    bool deterministic_latent = false;
};

/// Encoder maps (x, y) -> (mu, logvar); decoder maps z -> (x_hat, y_hat).
/// All heads are single linear layers on the shared trunks. The logvar head
/// is clamped to [-20, 20].
struct VaeModel {
    ArchitectureSpec arch;
    TrainConfig train_config;
    std::vector<nn::DenseLayer> enc_trunk;   // (d+1) -> hidden
    std::vector<nn::DenseLayer> enc_mu;      // hidden -> q
    std::vector<nn::DenseLayer> enc_logvar;  // hidden -> q
    std::vector<nn::DenseLayer> dec_trunk;   // q -> hidden
    std::vector<nn::DenseLayer> dec_x;       // hidden -> d
    std::vector<nn::DenseLayer> dec_y;       // hidden -> 1
};

/// Parameter order for serialization and optimization:
/// enc_trunk, enc_mu, enc_logvar, dec_trunk, dec_x, dec_y (each per nn::flatten).
std::size_t param_count(const VaeModel& model);
Eigen::VectorXd flatten_params(const VaeModel& model);
void unflatten_params(const Eigen::VectorXd& flat, VaeModel& model);

/// Freshly initialized (untrained) model with Glorot weights.
VaeModel init_model(const ArchitectureSpec& arch, const TrainConfig& cfg, Rng& rng);

/// Per-row encoder outputs on the training set (row-aligned with it).
struct LatentSummary {
    Eigen::MatrixXd mu;      // n x q
    Eigen::MatrixXd logvar;  // n x q, clamped
};

struct LossTerms {
    double recon_x = 0.0;           // mean over batch of summed squared feature error
    double recon_y_weighted = 0.0;  // mean over batch of w_i * (y_hat - y)^2
    double kl = 0.0;
    double corr_penalty = 0.0;      // sum of r^2 over ordered latent column pairs
    double total = 0.0;
};

/// Sum over ordered pairs (a, b), a != b, of the squared Pearson correlation
/// between latent columns a and b (population moments over the batch).
/// Zero-variance columns contribute 0.
double corr_penalty(const Eigen::MatrixXd& z);

/// d(corr_penalty)/dz, analytically.
Eigen::MatrixXd corr_penalty_grad(const Eigen::MatrixXd& z);

/// weights_raw are the per-row loss weights 1/f(y_i)^alpha computed on the
/// full training set; `plain` ignores them. noise is the reparameterization
/// draw (batch x q).
LossTerms loss_terms(const VaeModel& model, const Eigen::MatrixXd& batch_x,
                     const Eigen::VectorXd& batch_y, const Eigen::VectorXd& weights_raw,
                     const Eigen::MatrixXd& noise, const TrainConfig& cfg);

/// Same, and writes d(total)/d(params) in flatten_params order.
LossTerms loss_terms_with_grad(const VaeModel& model, const Eigen::MatrixXd& batch_x,
                               const Eigen::VectorXd& batch_y, const Eigen::VectorXd& weights_raw,
                               const Eigen::MatrixXd& noise, const TrainConfig& cfg,
                               Eigen::VectorXd& param_grad);

struct TrainResult {
    VaeModel model;
    std::vector<LossTerms> trace;  // batch-averaged terms per epoch
};

/// Deterministic given cfg.rng_seed. X is the encoded feature matrix, y the
/// standardized target. Relevance weights are computed once on the full y.
TrainResult train(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                  const ArchitectureSpec& arch, const TrainConfig& cfg);

LatentSummary encode_latent(const VaeModel& model, const Eigen::MatrixXd& X,
                            const Eigen::VectorXd& y);

struct DecodeResult {
    Eigen::MatrixXd x_hat;  // m x d
    Eigen::VectorXd y_hat;  // m
};

DecodeResult decode_latent(const VaeModel& model, const Eigen::MatrixXd& z);

/// Ancestral sampling for the chosen seed rows: z ~ N(mu_i, diag(exp(logvar_i)))
/// then decode.
struct GeneratedBatch {
    Eigen::MatrixXd z;
    Eigen::MatrixXd x_hat;
    Eigen::VectorXd y_hat;
};

GeneratedBatch natural_generate(const VaeModel& model, const LatentSummary& latent,
                                const std::vector<std::size_t>& seeds, Rng& rng);

}  // namespace dsb::vae
