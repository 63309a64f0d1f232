#include "dsb/vae.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "dsb/density.hpp"

namespace dsb::vae {

namespace {

constexpr double kLogvarClamp = 20.0;

Eigen::MatrixXd concat_xy(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    if (X.rows() != y.size()) throw std::invalid_argument("encoder input: row count mismatch");
    Eigen::MatrixXd in(X.rows(), X.cols() + 1);
    in.leftCols(X.cols()) = X;
    in.col(X.cols()) = y;
    return in;
}

}  // namespace

std::string loss_variant_name(LossVariant v) {
    switch (v) {
        case LossVariant::plain: return "plain";
        case LossVariant::balanced: return "balanced";
        case LossVariant::disentangled: return "final";
    }
    throw std::logic_error("loss_variant_name: unknown variant");
}

LossVariant loss_variant_from_name(std::string_view name) {
    if (name == "plain") return LossVariant::plain;
    if (name == "balanced") return LossVariant::balanced;
    if (name == "final") return LossVariant::disentangled;
    throw std::invalid_argument("unknown loss variant: " + std::string(name) +
                                " (expected plain, balanced, or final)");
}

ArchitectureSpec resolve_architecture(ArchitectureSpec spec, Eigen::Index input_dim) {
    if (input_dim < 1) throw std::invalid_argument("resolve_architecture: input_dim must be >= 1");
    spec.input_dim = input_dim;
    if (spec.latent_dim <= 0) spec.latent_dim = std::min<Eigen::Index>(8, (input_dim + 1) / 2);
    for (auto w : spec.encoder_hidden)
        if (w < 1) throw std::invalid_argument("resolve_architecture: encoder width must be >= 1");
    for (auto w : spec.decoder_hidden)
        if (w < 1) throw std::invalid_argument("resolve_architecture: decoder width must be >= 1");
    return spec;
}

std::size_t param_count(const VaeModel& m) {
    return nn::param_count(m.enc_trunk) + nn::param_count(m.enc_mu) +
           nn::param_count(m.enc_logvar) + nn::param_count(m.dec_trunk) +
           nn::param_count(m.dec_x) + nn::param_count(m.dec_y);
}

Eigen::VectorXd flatten_params(const VaeModel& m) {
    Eigen::VectorXd flat(static_cast<Eigen::Index>(param_count(m)));
    Eigen::Index off = 0;
    for (const auto* stack : {&m.enc_trunk, &m.enc_mu, &m.enc_logvar, &m.dec_trunk, &m.dec_x, &m.dec_y}) {
        const Eigen::VectorXd part = nn::flatten(*stack);
        flat.segment(off, part.size()) = part;
        off += part.size();
    }
    return flat;
}

void unflatten_params(const Eigen::VectorXd& flat, VaeModel& m) {
    if (static_cast<std::size_t>(flat.size()) != param_count(m))
        throw std::invalid_argument("unflatten_params: length mismatch");
    Eigen::Index off = 0;
    for (auto* stack : {&m.enc_trunk, &m.enc_mu, &m.enc_logvar, &m.dec_trunk, &m.dec_x, &m.dec_y}) {
        const auto count = static_cast<Eigen::Index>(nn::param_count(*stack));
        nn::unflatten(flat.segment(off, count), *stack);
        off += count;
    }
}

VaeModel init_model(const ArchitectureSpec& arch, const TrainConfig& cfg, Rng& rng) {
    if (arch.input_dim < 1 || arch.latent_dim < 1)
        throw std::invalid_argument("init_model: architecture not resolved");
    VaeModel m;
    m.arch = arch;
    m.train_config = cfg;

    Eigen::Index width = arch.input_dim + 1;
    for (auto h : arch.encoder_hidden) {
        m.enc_trunk.push_back(nn::glorot_layer(width, h, arch.activation, rng));
        width = h;
    }
    m.enc_mu.push_back(nn::glorot_layer(width, arch.latent_dim, nn::Activation::identity, rng));
    m.enc_logvar.push_back(nn::glorot_layer(width, arch.latent_dim, nn::Activation::identity, rng));

    width = arch.latent_dim;
    for (auto h : arch.decoder_hidden) {
        m.dec_trunk.push_back(nn::glorot_layer(width, h, arch.activation, rng));
        width = h;
    }
    m.dec_x.push_back(nn::glorot_layer(width, arch.input_dim, nn::Activation::identity, rng));
    m.dec_y.push_back(nn::glorot_layer(width, 1, nn::Activation::identity, rng));
    return m;
}

double corr_penalty(const Eigen::MatrixXd& z) {
    if (z.rows() < 2) throw std::invalid_argument("corr_penalty: need at least 2 rows");
    const double b = static_cast<double>(z.rows());
    const Eigen::Index q = z.cols();
    const Eigen::MatrixXd u = z.rowwise() - z.colwise().mean();
    const Eigen::MatrixXd c = (u.transpose() * u) / b;
    double acc = 0.0;
    for (Eigen::Index a = 0; a < q; ++a) {
        if (c(a, a) == 0.0) continue;
        for (Eigen::Index d = a + 1; d < q; ++d) {
            if (c(d, d) == 0.0) continue;
            const double r = c(a, d) / std::sqrt(c(a, a) * c(d, d));
            acc += 2.0 * r * r;  // ordered pairs (a,d) and (d,a)
        }
    }
    return acc;
}

Eigen::MatrixXd corr_penalty_grad(const Eigen::MatrixXd& z) {
    if (z.rows() < 2) throw std::invalid_argument("corr_penalty_grad: need at least 2 rows");
    const double b = static_cast<double>(z.rows());
    const Eigen::Index q = z.cols();
    const Eigen::MatrixXd u = z.rowwise() - z.colwise().mean();
    const Eigen::MatrixXd c = (u.transpose() * u) / b;
    const Eigen::VectorXd var = c.diagonal();
    const Eigen::VectorXd s = var.cwiseSqrt();

    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(q, q);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(q, q);  // m(a,d) = r(a,d)/(s_a s_d)
    for (Eigen::Index a = 0; a < q; ++a) {
        if (var[a] == 0.0) continue;
        for (Eigen::Index d = a + 1; d < q; ++d) {
            if (var[d] == 0.0) continue;
            const double denom = s[a] * s[d];
            r(a, d) = r(d, a) = c(a, d) / denom;
            m(a, d) = m(d, a) = r(a, d) / denom;
        }
    }
    Eigen::VectorXd g = Eigen::VectorXd::Zero(q);
    for (Eigen::Index a = 0; a < q; ++a)
        if (var[a] > 0.0) g[a] = r.row(a).squaredNorm() / var[a];

    // d/dz_ia of sum over ordered pairs of r^2:
    //   (4/b) * [ sum_d u_id * r_ad/(s_a s_d)  -  u_ia * sum_d r_ad^2 / var_a ]
    return (4.0 / b) * (u * m - u * g.asDiagonal());
}

namespace {

LossTerms compute_loss(const VaeModel& model, const Eigen::MatrixXd& batch_x,
                       const Eigen::VectorXd& batch_y, const Eigen::VectorXd& weights_raw,
                       const Eigen::MatrixXd& noise, const TrainConfig& cfg,
                       Eigen::VectorXd* grad_out) {
    const Eigen::Index b = batch_x.rows();
    const Eigen::Index d = model.arch.input_dim;
    const Eigen::Index q = model.arch.latent_dim;
    if (b < 1) throw std::invalid_argument("loss_terms: empty batch");
    if (batch_x.cols() != d) throw std::invalid_argument("loss_terms: feature width mismatch");
    if (batch_y.size() != b || weights_raw.size() != b)
        throw std::invalid_argument("loss_terms: target/weight length mismatch");
    if (noise.rows() != b || noise.cols() != q)
        throw std::invalid_argument("loss_terms: noise shape mismatch");
    if (cfg.loss_variant == LossVariant::disentangled && b < 2)
        throw std::invalid_argument(
            "loss_terms: the correlation penalty needs at least 2 rows per batch");

    const Eigen::VectorXd w_eff =
        cfg.loss_variant == LossVariant::plain ? Eigen::VectorXd::Ones(b) : weights_raw;
    const double beta_corr_eff =
        cfg.loss_variant == LossVariant::disentangled ? cfg.beta_corr : 0.0;

    const Eigen::MatrixXd enc_in = concat_xy(batch_x, batch_y);
    const auto enc_acts = nn::forward(model.enc_trunk, enc_in);
    const auto mu_acts = nn::forward(model.enc_mu, enc_acts.back());
    const auto lv_acts = nn::forward(model.enc_logvar, enc_acts.back());
    const Eigen::MatrixXd& mu = mu_acts.back();
    const Eigen::MatrixXd& lv_raw = lv_acts.back();
    const Eigen::MatrixXd lv = lv_raw.cwiseMax(-kLogvarClamp).cwiseMin(kLogvarClamp);

    const Eigen::MatrixXd z = nn::reparameterize(mu, lv, noise);
    const auto dec_acts = nn::forward(model.dec_trunk, z);
    const auto x_acts = nn::forward(model.dec_x, dec_acts.back());
    const auto y_acts = nn::forward(model.dec_y, dec_acts.back());
    const Eigen::MatrixXd& x_hat = x_acts.back();
    const Eigen::VectorXd y_hat = y_acts.back().col(0);

    LossTerms t;
    const Eigen::MatrixXd x_err = x_hat - batch_x;
    const Eigen::VectorXd y_err = y_hat - batch_y;
    t.recon_x = x_err.squaredNorm() / static_cast<double>(b);
    t.recon_y_weighted = w_eff.cwiseProduct(y_err.cwiseProduct(y_err)).sum() / static_cast<double>(b);
    t.kl = nn::kl_gaussian(mu, lv);
    t.corr_penalty = cfg.loss_variant == LossVariant::disentangled ? corr_penalty(z) : 0.0;
    t.total = cfg.beta_x * t.recon_x + cfg.beta_y * t.recon_y_weighted + cfg.beta_kl * t.kl +
              beta_corr_eff * t.corr_penalty;

    if (grad_out == nullptr) return t;

    const double bn = static_cast<double>(b);
    const Eigen::MatrixXd gx = (2.0 * cfg.beta_x / bn) * x_err;
    const Eigen::MatrixXd gy = (2.0 * cfg.beta_y / bn) * w_eff.cwiseProduct(y_err);

    const auto bw_x = nn::backward(model.dec_x, x_acts, gx);
    const auto bw_y = nn::backward(model.dec_y, y_acts, gy);
    const auto bw_dt =
        nn::backward(model.dec_trunk, dec_acts, bw_x.input_grad + bw_y.input_grad);

    Eigen::MatrixXd gz = bw_dt.input_grad;
    if (beta_corr_eff != 0.0) gz += beta_corr_eff * corr_penalty_grad(z);

    const Eigen::MatrixXd g_mu = gz + (cfg.beta_kl / bn) * mu;
    const Eigen::MatrixXd half_sigma_noise =
        (lv.array() * 0.5).exp().matrix().cwiseProduct(noise) * 0.5;
    Eigen::MatrixXd g_lv =
        gz.cwiseProduct(half_sigma_noise) +
        (cfg.beta_kl * 0.5 / bn) * (lv.array().exp() - 1.0).matrix();
    // Clamp: no gradient where the raw head output was cut off.
    const Eigen::MatrixXd in_range =
        ((lv_raw.array() > -kLogvarClamp) && (lv_raw.array() < kLogvarClamp)).cast<double>();
    g_lv = g_lv.cwiseProduct(in_range);

    const auto bw_mu = nn::backward(model.enc_mu, mu_acts, g_mu);
    const auto bw_lv = nn::backward(model.enc_logvar, lv_acts, g_lv);
    const auto bw_et = nn::backward(model.enc_trunk, enc_acts, bw_mu.input_grad + bw_lv.input_grad);

    grad_out->resize(static_cast<Eigen::Index>(param_count(model)));
    Eigen::Index off = 0;
    for (const Eigen::VectorXd* part : {&bw_et.param_grad, &bw_mu.param_grad, &bw_lv.param_grad,
                                        &bw_dt.param_grad, &bw_x.param_grad, &bw_y.param_grad}) {
        grad_out->segment(off, part->size()) = *part;
        off += part->size();
    }
    return t;
}

}  // namespace

LossTerms loss_terms(const VaeModel& model, const Eigen::MatrixXd& batch_x,
                     const Eigen::VectorXd& batch_y, const Eigen::VectorXd& weights_raw,
                     const Eigen::MatrixXd& noise, const TrainConfig& cfg) {
    return compute_loss(model, batch_x, batch_y, weights_raw, noise, cfg, nullptr);
}

LossTerms loss_terms_with_grad(const VaeModel& model, const Eigen::MatrixXd& batch_x,
                               const Eigen::VectorXd& batch_y, const Eigen::VectorXd& weights_raw,
                               const Eigen::MatrixXd& noise, const TrainConfig& cfg,
                               Eigen::VectorXd& param_grad) {
    return compute_loss(model, batch_x, batch_y, weights_raw, noise, cfg, &param_grad);
}

TrainResult train(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                  const ArchitectureSpec& arch_in, const TrainConfig& cfg) {
    const Eigen::Index n = X.rows();
    if (n < 2) throw std::invalid_argument("train: need at least 2 rows");
    if (y.size() != n) throw std::invalid_argument("train: target length mismatch");
    if (cfg.epochs < 0) throw std::invalid_argument("train: epochs must be >= 0");
    if (cfg.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
    if (cfg.loss_variant == LossVariant::disentangled && cfg.batch_size < 2)
        throw std::invalid_argument("train: batch_size must be >= 2 with the correlation penalty");
    if (n < cfg.batch_size)
        throw std::invalid_argument("train: fewer rows than batch_size");
    if (!(cfg.learning_rate > 0.0)) throw std::invalid_argument("train: learning rate must be positive");
    if (cfg.beta_x < 0 || cfg.beta_y < 0 || cfg.beta_kl < 0 || cfg.beta_corr < 0 || cfg.alpha < 0)
        throw std::invalid_argument("train: loss coefficients must be nonnegative");

    const ArchitectureSpec arch = resolve_architecture(arch_in, X.cols());

    Eigen::VectorXd weights_raw;
    if (cfg.loss_variant == LossVariant::plain)
        weights_raw = Eigen::VectorXd::Ones(n);
    else
        weights_raw = density::relevance_weights(y, cfg.alpha, {cfg.kde_bandwidth}).raw;

    Rng init_rng(derive_seed(cfg.rng_seed, "init"));
    TrainResult result;
    result.model = init_model(arch, cfg, init_rng);
    if (cfg.epochs == 0) return result;

    Rng shuffle_rng(derive_seed(cfg.rng_seed, "shuffle"));
    Rng noise_rng(derive_seed(cfg.rng_seed, "noise"));
    Eigen::VectorXd params = flatten_params(result.model);
    auto opt = nn::make_optimizer(static_cast<std::size_t>(params.size()), cfg.learning_rate);
    Eigen::VectorXd grad;

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);

        // Batch starts; a trailing 1-row remainder is folded into the last batch.
        std::vector<Eigen::Index> starts;
        for (Eigen::Index s = 0; s < n; s += cfg.batch_size) starts.push_back(s);
        const bool merge_tail = cfg.batch_size >= 2 && n % cfg.batch_size == 1 && starts.size() > 1;
        if (merge_tail) starts.pop_back();

        LossTerms epoch_sum;
        int batches = 0;
        for (std::size_t bi = 0; bi < starts.size(); ++bi) {
            const Eigen::Index lo = starts[bi];
            const Eigen::Index hi = bi + 1 < starts.size() ? starts[bi + 1] : n;
            const Eigen::Index bsz = hi - lo;
            Eigen::MatrixXd bx(bsz, X.cols());
            Eigen::VectorXd by(bsz), bw(bsz);
            for (Eigen::Index i = 0; i < bsz; ++i) {
                const Eigen::Index row = order[static_cast<std::size_t>(lo + i)];
                bx.row(i) = X.row(row);
                by[i] = y[row];
                bw[i] = weights_raw[row];
            }
            const Eigen::MatrixXd noise =
                cfg.deterministic_latent
                    ? Eigen::MatrixXd::Zero(bsz, arch.latent_dim)
                    : nn::normal_matrix(noise_rng, bsz, arch.latent_dim);
            const LossTerms t =
                compute_loss(result.model, bx, by, bw, noise, cfg, &grad);
            if (!std::isfinite(t.total))
                throw std::runtime_error("train: non-finite loss at epoch " +
                                         std::to_string(epoch) + ", batch " + std::to_string(bi));
            nn::adam_step(opt, params, grad);
            unflatten_params(params, result.model);

            epoch_sum.recon_x += t.recon_x;
            epoch_sum.recon_y_weighted += t.recon_y_weighted;
            epoch_sum.kl += t.kl;
            epoch_sum.corr_penalty += t.corr_penalty;
            epoch_sum.total += t.total;
            ++batches;
        }
        const double inv = 1.0 / static_cast<double>(batches);
        result.trace.push_back({epoch_sum.recon_x * inv, epoch_sum.recon_y_weighted * inv,
                                epoch_sum.kl * inv, epoch_sum.corr_penalty * inv,
                                epoch_sum.total * inv});
    }
    return result;
}

LatentSummary encode_latent(const VaeModel& model, const Eigen::MatrixXd& X,
                            const Eigen::VectorXd& y) {
    if (X.cols() != model.arch.input_dim)
        throw std::invalid_argument("encode_latent: feature width mismatch");
    const Eigen::MatrixXd enc_in = concat_xy(X, y);
    const Eigen::MatrixXd h = nn::apply(model.enc_trunk, enc_in);
    LatentSummary out;
    out.mu = nn::apply(model.enc_mu, h);
    out.logvar = nn::apply(model.enc_logvar, h).cwiseMax(-kLogvarClamp).cwiseMin(kLogvarClamp);
    return out;
}

DecodeResult decode_latent(const VaeModel& model, const Eigen::MatrixXd& z) {
    if (z.cols() != model.arch.latent_dim)
        throw std::invalid_argument("decode_latent: latent width mismatch");
    const Eigen::MatrixXd h = nn::apply(model.dec_trunk, z);
    DecodeResult out;
    out.x_hat = nn::apply(model.dec_x, h);
    out.y_hat = nn::apply(model.dec_y, h).col(0);
    return out;
}

GeneratedBatch natural_generate(const VaeModel& model, const LatentSummary& latent,
                                const std::vector<std::size_t>& seeds, Rng& rng) {
    const auto n = static_cast<std::size_t>(latent.mu.rows());
    const Eigen::Index q = latent.mu.cols();
    if (latent.logvar.rows() != latent.mu.rows() || latent.logvar.cols() != q)
        throw std::invalid_argument("natural_generate: latent summary shape mismatch");
    GeneratedBatch out;
    out.z.resize(static_cast<Eigen::Index>(seeds.size()), q);
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        if (seeds[i] >= n)
            throw std::out_of_range("natural_generate: seed index " + std::to_string(seeds[i]) +
                                    " out of range for " + std::to_string(n) + " rows");
        const auto si = static_cast<Eigen::Index>(seeds[i]);
        for (Eigen::Index j = 0; j < q; ++j)
            out.z(static_cast<Eigen::Index>(i), j) =
                latent.mu(si, j) + std::exp(0.5 * latent.logvar(si, j)) * rng.normal();
    }
    const DecodeResult dec = decode_latent(model, out.z);
    out.x_hat = dec.x_hat;
    out.y_hat = dec.y_hat;
    return out;
}

}  // namespace dsb::vae
