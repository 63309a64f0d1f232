#include "dsb/generate.hpp"

#include <algorithm>
#include <stdexcept>

namespace dsb::gen {

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::Baseline: return "Baseline";
        case Variant::OS: return "OS";
        case Variant::SB_AE: return "SB_AE";
        case Variant::BVAE: return "BVAE";
        case Variant::kBVAE: return "kBVAE";
        case Variant::BVAEw: return "BVAEw";
        case Variant::kBVAEw: return "kBVAEw";
        case Variant::DSB: return "DSB";
    }
    throw std::logic_error("variant_name: unknown variant");
}

Variant variant_from_name(std::string_view name) {
    if (name == "Baseline") return Variant::Baseline;
    if (name == "OS") return Variant::OS;
    if (name == "SB_AE" || name == "SB+AE") return Variant::SB_AE;
    if (name == "BVAE") return Variant::BVAE;
    if (name == "kBVAE") return Variant::kBVAE;
    if (name == "BVAEw") return Variant::BVAEw;
    if (name == "kBVAEw") return Variant::kBVAEw;
    if (name == "DSB") return Variant::DSB;
    throw std::invalid_argument("unknown variant: " + std::string(name));
}

std::vector<Variant> all_variants() {
    return {Variant::Baseline, Variant::OS,    Variant::SB_AE,  Variant::BVAE,
            Variant::kBVAE,    Variant::BVAEw, Variant::kBVAEw, Variant::DSB};
}

ModelKind required_model(Variant v) {
    switch (v) {
        case Variant::Baseline:
        case Variant::OS: return ModelKind::none;
        case Variant::SB_AE: return ModelKind::autoencoder;
        case Variant::BVAE:
        case Variant::kBVAE: return ModelKind::plain;
        case Variant::BVAEw:
        case Variant::kBVAEw: return ModelKind::balanced;
        case Variant::DSB: return ModelKind::disentangled;
    }
    throw std::logic_error("required_model: unknown variant");
}

std::string model_kind_name(ModelKind k) {
    switch (k) {
        case ModelKind::none: return "none";
        case ModelKind::autoencoder: return "autoencoder";
        case ModelKind::plain: return "plain";
        case ModelKind::balanced: return "balanced";
        case ModelKind::disentangled: return "final";
    }
    throw std::logic_error("model_kind_name: unknown kind");
}

vae::TrainConfig train_config_for(ModelKind kind, vae::TrainConfig base) {
    switch (kind) {
        case ModelKind::none:
            throw std::invalid_argument("train_config_for: this variant trains no model");
        case ModelKind::autoencoder:
            base.loss_variant = vae::LossVariant::plain;
            base.beta_kl = 0.0;
            base.deterministic_latent = true;
            return base;
        case ModelKind::plain:
            base.loss_variant = vae::LossVariant::plain;
            base.deterministic_latent = false;
            return base;
        case ModelKind::balanced:
            base.loss_variant = vae::LossVariant::balanced;
            base.deterministic_latent = false;
            return base;
        case ModelKind::disentangled:
            base.loss_variant = vae::LossVariant::disentangled;
            base.deterministic_latent = false;
            return base;
    }
    throw std::logic_error("train_config_for: unknown kind");
}

void check_model_compat(Variant variant, const vae::VaeModel& model) {
    const ModelKind kind = required_model(variant);
    const auto& tc = model.train_config;
    const std::string have = loss_variant_name(tc.loss_variant);
    switch (kind) {
        case ModelKind::none:
            throw std::invalid_argument("variant " + variant_name(variant) + " does not use a model");
        case ModelKind::autoencoder:
            if (tc.loss_variant != vae::LossVariant::plain || !tc.deterministic_latent ||
                tc.beta_kl != 0.0)
                throw std::invalid_argument(
                    "variant SB_AE requires a deterministic autoencoder (loss_variant=plain, "
                    "beta_kl=0, deterministic latent); got loss_variant=" + have);
            return;
        case ModelKind::plain:
            if (tc.loss_variant != vae::LossVariant::plain || tc.deterministic_latent)
                throw std::invalid_argument("variant " + variant_name(variant) +
                                            " requires a model trained with loss_variant=plain; "
                                            "got loss_variant=" + have +
                                            (tc.deterministic_latent ? " (autoencoder mode)" : ""));
            return;
        case ModelKind::balanced:
            if (tc.loss_variant != vae::LossVariant::balanced)
                throw std::invalid_argument("variant " + variant_name(variant) +
                                            " requires a model trained with loss_variant=balanced; "
                                            "got loss_variant=" + have);
            return;
        case ModelKind::disentangled:
            if (tc.loss_variant != vae::LossVariant::disentangled)
                throw std::invalid_argument("variant DSB requires a model trained with "
                                            "loss_variant=final; got loss_variant=" + have);
            return;
    }
}

std::vector<std::size_t> sample_seeds(const density::RelevanceWeights& weights, std::size_t m,
                                      Rng& rng) {
    const auto n = static_cast<std::size_t>(weights.normalized.size());
    if (n == 0) throw std::invalid_argument("sample_seeds: empty weight vector");
    if (m == 0) throw std::invalid_argument("sample_seeds: m must be >= 1");
    std::vector<double> cum(n);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = weights.normalized[static_cast<Eigen::Index>(i)];
        if (!(w >= 0.0)) throw std::invalid_argument("sample_seeds: negative weight");
        acc += w;
        cum[i] = acc;
    }
    if (!(acc > 0.0)) throw std::invalid_argument("sample_seeds: weights sum to zero");

    std::vector<std::size_t> seeds(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double u = rng.uniform01() * acc;
        const auto it = std::upper_bound(cum.begin(), cum.end(), u);
        seeds[i] = std::min<std::size_t>(static_cast<std::size_t>(it - cum.begin()), n - 1);
    }
    return seeds;
}

BootstrapDraw smoothed_bootstrap(const Eigen::MatrixXd& latent_mu,
                                 const density::RelevanceWeights& weights,
                                 const density::BandwidthSpec& bw, std::size_t m, Rng& rng) {
    const Eigen::Index q = latent_mu.cols();
    if (bw.per_dim.size() != q)
        throw std::invalid_argument("smoothed_bootstrap: bandwidth dimension mismatch");
    if (weights.normalized.size() != latent_mu.rows())
        throw std::invalid_argument("smoothed_bootstrap: weight count does not match rows");
    if (!(bw.hmult > 0.0)) throw std::invalid_argument("smoothed_bootstrap: hmult must be positive");

    BootstrapDraw draw;
    draw.seed_indices = sample_seeds(weights, m, rng);
    draw.z.resize(static_cast<Eigen::Index>(m), q);
    for (std::size_t i = 0; i < m; ++i) {
        const auto si = static_cast<Eigen::Index>(draw.seed_indices[i]);
        for (Eigen::Index j = 0; j < q; ++j)
            draw.z(static_cast<Eigen::Index>(i), j) =
                latent_mu(si, j) + bw.hmult * bw.per_dim[j] * rng.normal();
    }
    return draw;
}

SyntheticBatch generate(const tabular::Dataset* train, const tabular::EncodedMatrix& encoded,
                        const density::RelevanceWeights& weights, const vae::VaeModel* model,
                        const vae::LatentSummary* latent, const GenConfig& cfg) {
    if (cfg.variant == Variant::Baseline)
        throw std::invalid_argument("generate: Baseline adds no synthetic rows");
    const auto n = static_cast<std::size_t>(weights.normalized.size());
    if (n == 0) throw std::invalid_argument("generate: empty weight vector");
    const std::size_t m = cfg.m.value_or(n);
    if (m == 0) throw std::invalid_argument("generate: m must be >= 1");
    if (!(cfg.hmult > 0.0)) throw std::invalid_argument("generate: hmult must be positive");

    Rng rng(derive_seed(cfg.rng_seed, "generate"));
    SyntheticBatch out;
    out.variant = cfg.variant;
    out.rng_seed = cfg.rng_seed;

    if (cfg.variant == Variant::OS) {
        if (train == nullptr)
            throw std::invalid_argument("generate: OS copies original rows and needs the dataset");
        if (train->n() != n)
            throw std::invalid_argument("generate: weight count does not match training rows");
        out.seed_indices = sample_seeds(weights, m, rng);
        out.rows = tabular::subset(*train, out.seed_indices);
        return out;
    }

    if (model == nullptr || latent == nullptr)
        throw std::invalid_argument("generate: variant " + variant_name(cfg.variant) +
                                    " requires a trained model and its latent summary");
    check_model_compat(cfg.variant, *model);
    if (latent->mu.rows() != static_cast<Eigen::Index>(n))
        throw std::invalid_argument("generate: latent summary does not match the training rows");

    Eigen::MatrixXd x_hat;
    Eigen::VectorXd y_hat;
    if (cfg.variant == Variant::BVAE || cfg.variant == Variant::BVAEw) {
        out.seed_indices = sample_seeds(weights, m, rng);
        const vae::GeneratedBatch batch = vae::natural_generate(*model, *latent, out.seed_indices, rng);
        x_hat = batch.x_hat;
        y_hat = batch.y_hat;
    } else {
        density::BandwidthSpec bw = density::scott_bandwidth(latent->mu);
        bw.hmult = cfg.hmult;
        const BootstrapDraw draw = smoothed_bootstrap(latent->mu, weights, bw, m, rng);
        out.seed_indices = draw.seed_indices;
        const vae::DecodeResult dec = vae::decode_latent(*model, draw.z);
        x_hat = dec.x_hat;
        y_hat = dec.y_hat;
    }
    out.rows = tabular::decode(encoded, x_hat, y_hat);
    return out;
}

tabular::Dataset build_training_set(const tabular::Dataset& original, const SyntheticBatch& synth) {
    if (synth.rows.n() == 0) return original;
    return tabular::concat(original, synth.rows);
}

}  // namespace dsb::gen
