#include "dsb/model_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "dsb/rng.hpp"

namespace dsb::model_io {

using ordered_json = nlohmann::ordered_json;

namespace {

constexpr char kMagic[8] = {'D', 'S', 'B', 'M', 'O', 'D', 'E', 'L'};
constexpr std::uint32_t kVersion = 1;

std::uint64_t to_le(std::uint64_t v) {
    if constexpr (std::endian::native == std::endian::big) return __builtin_bswap64(v);
    return v;
}

std::uint32_t to_le(std::uint32_t v) {
    if constexpr (std::endian::native == std::endian::big) return __builtin_bswap32(v);
    return v;
}

void append_u32(std::string& buf, std::uint32_t v) {
    const std::uint32_t le = to_le(v);
    buf.append(reinterpret_cast<const char*>(&le), 4);
}

void append_u64(std::string& buf, std::uint64_t v) {
    const std::uint64_t le = to_le(v);
    buf.append(reinterpret_cast<const char*>(&le), 8);
}

void append_f64(std::string& buf, double v) {
    append_u64(buf, std::bit_cast<std::uint64_t>(v));
}

std::uint32_t read_u32(const char* p) {
    std::uint32_t v;
    std::memcpy(&v, p, 4);
    return to_le(v);
}

std::uint64_t read_u64(const char* p) {
    std::uint64_t v;
    std::memcpy(&v, p, 8);
    return to_le(v);
}

double read_f64(const char* p) { return std::bit_cast<double>(read_u64(p)); }

const char* role_name(tabular::FeatureRole role) {
    return role == tabular::FeatureRole::standardized_numeric ? "standardized_numeric"
                                                              : "one_hot_level";
}

tabular::FeatureRole role_from_name(const std::string& name) {
    if (name == "standardized_numeric") return tabular::FeatureRole::standardized_numeric;
    if (name == "one_hot_level") return tabular::FeatureRole::one_hot_level;
    throw std::runtime_error("model file: unknown feature role " + name);
}

ordered_json header_json(const ModelPackage& pkg) {
    const auto& arch = pkg.model.arch;
    const auto& tc = pkg.model.train_config;
    ordered_json j;
    j["format"] = "dsb-model";
    j["version"] = kVersion;

    ordered_json aj;
    aj["input_dim"] = arch.input_dim;
    aj["latent_dim"] = arch.latent_dim;
    aj["encoder_hidden"] = arch.encoder_hidden;
    aj["decoder_hidden"] = arch.decoder_hidden;
    aj["activation"] = nn::activation_name(arch.activation);
    j["arch"] = std::move(aj);

    ordered_json tj;
    tj["beta_x"] = tc.beta_x;
    tj["beta_y"] = tc.beta_y;
    tj["beta_kl"] = tc.beta_kl;
    tj["beta_corr"] = tc.beta_corr;
    tj["alpha"] = tc.alpha;
    tj["epochs"] = tc.epochs;
    tj["batch_size"] = tc.batch_size;
    tj["learning_rate"] = tc.learning_rate;
    tj["rng_seed"] = tc.rng_seed;
    tj["loss_variant"] = vae::loss_variant_name(tc.loss_variant);
    tj["kde_bandwidth"] = tc.kde_bandwidth;
    tj["deterministic_latent"] = tc.deterministic_latent;
    j["train"] = std::move(tj);

    ordered_json ej;
    ordered_json schema = ordered_json::array();
    for (const auto& col : pkg.encoding.schema) {
        ordered_json cj;
        cj["name"] = col.name;
        cj["kind"] = tabular::kind_name(col.kind);
        if (col.kind == tabular::ColumnKind::categorical) cj["categories"] = col.categories;
        schema.push_back(std::move(cj));
    }
    ej["schema"] = std::move(schema);
    ej["target_column"] = pkg.encoding.target_column;
    ej["target_mean"] = pkg.encoding.target_mean;
    ej["target_stddev"] = pkg.encoding.target_stddev;
    ej["target_constant"] = pkg.encoding.target_constant;
    ordered_json fmap = ordered_json::array();
    for (const auto& f : pkg.encoding.feature_map) {
        ordered_json fj;
        fj["source_column"] = f.source_column;
        fj["role"] = role_name(f.role);
        fj["level"] = f.level;
        fj["mean"] = f.mean;
        fj["stddev"] = f.stddev;
        fj["constant"] = f.constant;
        fmap.push_back(std::move(fj));
    }
    ej["feature_map"] = std::move(fmap);
    j["encoding"] = std::move(ej);

    j["rows"] = pkg.latent.mu.rows();
    j["param_count"] = vae::param_count(pkg.model);
    return j;
}

}  // namespace

void save_model(const std::string& path, const ModelPackage& pkg) {
    const Eigen::Index n = pkg.latent.mu.rows();
    const Eigen::Index q = pkg.latent.mu.cols();
    if (pkg.latent.logvar.rows() != n || pkg.latent.logvar.cols() != q)
        throw std::invalid_argument("save_model: latent summary shape mismatch");
    if (pkg.weights_raw.size() != n)
        throw std::invalid_argument("save_model: weight count does not match latent rows");
    if (q != pkg.model.arch.latent_dim)
        throw std::invalid_argument("save_model: latent width does not match the architecture");

    const std::string header = header_json(pkg).dump();
    std::string buf;
    buf.append(kMagic, 8);
    append_u32(buf, kVersion);
    append_u32(buf, 0);  // reserved
    append_u64(buf, header.size());
    buf += header;

    const Eigen::VectorXd params = vae::flatten_params(pkg.model);
    buf.reserve(buf.size() + 8 * static_cast<std::size_t>(params.size() + 2 * n * q + n));
    for (Eigen::Index i = 0; i < params.size(); ++i) append_f64(buf, params[i]);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < q; ++j) append_f64(buf, pkg.latent.mu(i, j));
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < q; ++j) append_f64(buf, pkg.latent.logvar(i, j));
    for (Eigen::Index i = 0; i < n; ++i) append_f64(buf, pkg.weights_raw[i]);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("save_model: cannot open " + path);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw std::runtime_error("save_model: write failed for " + path);
}

ModelPackage load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_model: cannot open " + path);
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (buf.size() < 24 || std::memcmp(buf.data(), kMagic, 8) != 0)
        throw std::runtime_error("load_model: " + path + " is not a model file");
    if (read_u32(buf.data() + 8) != kVersion)
        throw std::runtime_error("load_model: unsupported model file version");
    const std::uint64_t header_len = read_u64(buf.data() + 16);
    if (24 + header_len > buf.size())
        throw std::runtime_error("load_model: truncated model file header");

    ordered_json j;
    try {
        j = ordered_json::parse(buf.substr(24, header_len));
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string("load_model: bad header: ") + e.what());
    }

    ModelPackage pkg;
    try {
        const auto& aj = j.at("arch");
        vae::ArchitectureSpec arch;
        arch.input_dim = aj.at("input_dim").get<Eigen::Index>();
        arch.latent_dim = aj.at("latent_dim").get<Eigen::Index>();
        arch.encoder_hidden = aj.at("encoder_hidden").get<std::vector<Eigen::Index>>();
        arch.decoder_hidden = aj.at("decoder_hidden").get<std::vector<Eigen::Index>>();
        arch.activation = nn::activation_from_name(aj.at("activation").get<std::string>());

        const auto& tj = j.at("train");
        vae::TrainConfig tc;
        tc.beta_x = tj.at("beta_x").get<double>();
        tc.beta_y = tj.at("beta_y").get<double>();
        tc.beta_kl = tj.at("beta_kl").get<double>();
        tc.beta_corr = tj.at("beta_corr").get<double>();
        tc.alpha = tj.at("alpha").get<double>();
        tc.epochs = tj.at("epochs").get<int>();
        tc.batch_size = tj.at("batch_size").get<int>();
        tc.learning_rate = tj.at("learning_rate").get<double>();
        tc.rng_seed = tj.at("rng_seed").get<std::uint64_t>();
        tc.loss_variant = vae::loss_variant_from_name(tj.at("loss_variant").get<std::string>());
        tc.kde_bandwidth = tj.at("kde_bandwidth").get<double>();
        tc.deterministic_latent = tj.at("deterministic_latent").get<bool>();

        const auto& ej = j.at("encoding");
        for (const auto& cj : ej.at("schema")) {
            tabular::ColumnSpec col;
            col.name = cj.at("name").get<std::string>();
            col.kind = tabular::kind_from_name(cj.at("kind").get<std::string>());
            if (cj.contains("categories"))
                col.categories = cj.at("categories").get<std::vector<std::string>>();
            pkg.encoding.schema.push_back(std::move(col));
        }
        pkg.encoding.target_column = ej.at("target_column").get<std::size_t>();
        pkg.encoding.target_mean = ej.at("target_mean").get<double>();
        pkg.encoding.target_stddev = ej.at("target_stddev").get<double>();
        pkg.encoding.target_constant = ej.at("target_constant").get<bool>();
        for (const auto& fj : ej.at("feature_map")) {
            tabular::EncodedFeature f;
            f.source_column = fj.at("source_column").get<std::size_t>();
            f.role = role_from_name(fj.at("role").get<std::string>());
            f.level = fj.at("level").get<std::size_t>();
            f.mean = fj.at("mean").get<double>();
            f.stddev = fj.at("stddev").get<double>();
            f.constant = fj.at("constant").get<bool>();
            pkg.encoding.feature_map.push_back(f);
        }

        const auto n = j.at("rows").get<Eigen::Index>();
        const auto pcount = j.at("param_count").get<std::size_t>();
        const Eigen::Index q = arch.latent_dim;

        Rng dummy(0);
        pkg.model = vae::init_model(arch, tc, dummy);
        if (vae::param_count(pkg.model) != pcount)
            throw std::runtime_error("parameter count does not match the architecture");

        const std::size_t expected =
            24 + header_len +
            8 * (pcount + 2 * static_cast<std::size_t>(n) * static_cast<std::size_t>(q) +
                 static_cast<std::size_t>(n));
        if (buf.size() != expected)
            throw std::runtime_error("array payload size mismatch (truncated or corrupt file)");

        const char* p = buf.data() + 24 + header_len;
        Eigen::VectorXd params(static_cast<Eigen::Index>(pcount));
        for (Eigen::Index i = 0; i < params.size(); ++i, p += 8) params[i] = read_f64(p);
        vae::unflatten_params(params, pkg.model);

        pkg.latent.mu.resize(n, q);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index jj = 0; jj < q; ++jj, p += 8) pkg.latent.mu(i, jj) = read_f64(p);
        pkg.latent.logvar.resize(n, q);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index jj = 0; jj < q; ++jj, p += 8) pkg.latent.logvar(i, jj) = read_f64(p);
        pkg.weights_raw.resize(n);
        for (Eigen::Index i = 0; i < n; ++i, p += 8) pkg.weights_raw[i] = read_f64(p);
    } catch (const std::runtime_error&) {
        throw;
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string("load_model: bad header: ") + e.what());
    }
    return pkg;
}

}  // namespace dsb::model_io
