#include "dsb/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "dsb/density.hpp"
#include "dsb/model_io.hpp"
#include "dsb/rng.hpp"

namespace dsb::pipeline {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

void check_keys(const ordered_json& j, std::initializer_list<const char*> allowed,
                const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        bool known = false;
        for (const char* a : allowed)
            if (key == a) {
                known = true;
                break;
            }
        if (!known)
            throw std::invalid_argument("config: unknown key \"" + key + "\" in " + where);
    }
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Writes content to path via a .tmp sibling + rename, so readers never see a
/// half-written file and failed runs leave no partial final outputs.
void write_text_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp + " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw std::runtime_error("write failed for " + tmp);
    }
    fs::rename(tmp, path);
}

ordered_json run_config_json(const RunConfig& cfg) {
    ordered_json j;
    j["seed"] = cfg.seed;
    j["out"] = cfg.out_dir;
    j["threads"] = cfg.threads;

    ordered_json dj;
    dj["csv"] = cfg.dataset.csv;
    dj["schema"] = cfg.dataset.schema;
    dj["synth"] = cfg.dataset.synth;
    j["dataset"] = std::move(dj);

    ordered_json sj;
    sj["n"] = cfg.synth_spec.n;
    sj["p_numeric"] = cfg.synth_spec.p_numeric;
    sj["p_categorical"] = cfg.synth_spec.p_categorical;
    sj["tail_fraction"] = cfg.synth_spec.tail_fraction;
    sj["noise_sd"] = cfg.synth_spec.noise_sd;
    sj["nonlinearity"] = synth::nonlinearity_name(cfg.synth_spec.nonlinearity);
    j["synth"] = std::move(sj);

    ordered_json tj;
    tj["beta_x"] = cfg.train.beta_x;
    tj["beta_y"] = cfg.train.beta_y;
    tj["beta_kl"] = cfg.train.beta_kl;
    tj["beta_corr"] = cfg.train.beta_corr;
    tj["alpha"] = cfg.train.alpha;
    tj["epochs"] = cfg.train.epochs;
    tj["batch_size"] = cfg.train.batch_size;
    tj["learning_rate"] = cfg.train.learning_rate;
    tj["kde_bandwidth"] = cfg.train.kde_bandwidth;
    j["train"] = std::move(tj);

    ordered_json aj;
    aj["latent_dim"] = cfg.arch.latent_dim;
    aj["encoder_hidden"] = cfg.arch.encoder_hidden;
    aj["decoder_hidden"] = cfg.arch.decoder_hidden;
    aj["activation"] = nn::activation_name(cfg.arch.activation);
    j["arch"] = std::move(aj);

    ordered_json gj;
    gj["variant"] = gen::variant_name(cfg.gen.variant);
    gj["m"] = cfg.gen.m ? ordered_json(*cfg.gen.m) : ordered_json(nullptr);
    gj["hmult"] = cfg.gen.hmult;
    j["gen"] = std::move(gj);

    ordered_json bj;
    bj["folds"] = cfg.folds;
    ordered_json variants = ordered_json::array();
    for (const auto v : cfg.variants) variants.push_back(gen::variant_name(v));
    bj["variants"] = std::move(variants);
    ordered_json regs = ordered_json::array();
    for (const auto& r : cfg.regressors) {
        ordered_json rj;
        rj["kind"] = bench::regressor_name(r);
        if (r.kind == bench::RegressorSpec::Kind::ridge)
            rj["lambda"] = r.ridge_lambda;
        else
            rj["k"] = r.knn_k;
        regs.push_back(std::move(rj));
    }
    bj["regressors"] = std::move(regs);
    bj["rare_quantile"] = cfg.rare_quantile;
    bj["reference"] = gen::variant_name(cfg.reference);
    j["bench"] = std::move(bj);

    j["model"] = cfg.model_path;
    return j;
}

}  // namespace

std::string run_config_to_json(const RunConfig& cfg) {
    return run_config_json(cfg).dump(2) + "\n";
}

RunConfig run_config_from_json(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const std::exception& e) {
        throw std::invalid_argument(std::string("config: invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");
    check_keys(j, {"seed", "out", "threads", "dataset", "synth", "train", "arch", "gen", "bench",
                   "model"},
               "top level");

    RunConfig cfg;
    try {
        if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("out")) cfg.out_dir = j["out"].get<std::string>();
        if (j.contains("threads")) cfg.threads = j["threads"].get<int>();
        if (j.contains("model")) cfg.model_path = j["model"].get<std::string>();

        if (j.contains("dataset")) {
            const auto& dj = j["dataset"];
            check_keys(dj, {"csv", "schema", "synth"}, "dataset");
            if (dj.contains("csv")) cfg.dataset.csv = dj["csv"].get<std::string>();
            if (dj.contains("schema")) cfg.dataset.schema = dj["schema"].get<std::string>();
            if (dj.contains("synth")) cfg.dataset.synth = dj["synth"].get<bool>();
        }

        if (j.contains("synth")) {
            const auto& sj = j["synth"];
            check_keys(sj, {"n", "p_numeric", "p_categorical", "tail_fraction", "noise_sd",
                            "nonlinearity"},
                       "synth");
            if (sj.contains("n")) cfg.synth_spec.n = sj["n"].get<std::size_t>();
            if (sj.contains("p_numeric"))
                cfg.synth_spec.p_numeric = sj["p_numeric"].get<std::size_t>();
            if (sj.contains("p_categorical"))
                cfg.synth_spec.p_categorical = sj["p_categorical"].get<std::size_t>();
            if (sj.contains("tail_fraction"))
                cfg.synth_spec.tail_fraction = sj["tail_fraction"].get<double>();
            if (sj.contains("noise_sd")) cfg.synth_spec.noise_sd = sj["noise_sd"].get<double>();
            if (sj.contains("nonlinearity"))
                cfg.synth_spec.nonlinearity =
                    synth::nonlinearity_from_name(sj["nonlinearity"].get<std::string>());
        }

        if (j.contains("train")) {
            const auto& tj = j["train"];
            check_keys(tj, {"beta_x", "beta_y", "beta_kl", "beta_corr", "alpha", "epochs",
                            "batch_size", "learning_rate", "kde_bandwidth"},
                       "train");
            if (tj.contains("beta_x")) cfg.train.beta_x = tj["beta_x"].get<double>();
            if (tj.contains("beta_y")) cfg.train.beta_y = tj["beta_y"].get<double>();
            if (tj.contains("beta_kl")) cfg.train.beta_kl = tj["beta_kl"].get<double>();
            if (tj.contains("beta_corr")) cfg.train.beta_corr = tj["beta_corr"].get<double>();
            if (tj.contains("alpha")) cfg.train.alpha = tj["alpha"].get<double>();
            if (tj.contains("epochs")) cfg.train.epochs = tj["epochs"].get<int>();
            if (tj.contains("batch_size")) cfg.train.batch_size = tj["batch_size"].get<int>();
            if (tj.contains("learning_rate"))
                cfg.train.learning_rate = tj["learning_rate"].get<double>();
            if (tj.contains("kde_bandwidth"))
                cfg.train.kde_bandwidth = tj["kde_bandwidth"].get<double>();
        }

        if (j.contains("arch")) {
            const auto& aj = j["arch"];
            check_keys(aj, {"latent_dim", "encoder_hidden", "decoder_hidden", "activation"},
                       "arch");
            if (aj.contains("latent_dim"))
                cfg.arch.latent_dim = aj["latent_dim"].get<Eigen::Index>();
            if (aj.contains("encoder_hidden"))
                cfg.arch.encoder_hidden = aj["encoder_hidden"].get<std::vector<Eigen::Index>>();
            if (aj.contains("decoder_hidden"))
                cfg.arch.decoder_hidden = aj["decoder_hidden"].get<std::vector<Eigen::Index>>();
            if (aj.contains("activation"))
                cfg.arch.activation = nn::activation_from_name(aj["activation"].get<std::string>());
        }

        if (j.contains("gen")) {
            const auto& gj = j["gen"];
            check_keys(gj, {"variant", "m", "hmult"}, "gen");
            if (gj.contains("variant"))
                cfg.gen.variant = gen::variant_from_name(gj["variant"].get<std::string>());
            if (gj.contains("m")) {
                if (gj["m"].is_null())
                    cfg.gen.m.reset();
                else
                    cfg.gen.m = gj["m"].get<std::size_t>();
            }
            if (gj.contains("hmult")) cfg.gen.hmult = gj["hmult"].get<double>();
        }

        if (j.contains("bench")) {
            const auto& bj = j["bench"];
            check_keys(bj, {"folds", "variants", "regressors", "rare_quantile", "reference"},
                       "bench");
            if (bj.contains("folds")) cfg.folds = bj["folds"].get<std::size_t>();
            if (bj.contains("variants")) {
                cfg.variants.clear();
                for (const auto& v : bj["variants"])
                    cfg.variants.push_back(gen::variant_from_name(v.get<std::string>()));
            }
            if (bj.contains("regressors")) {
                cfg.regressors.clear();
                for (const auto& rj : bj["regressors"]) {
                    check_keys(rj, {"kind", "lambda", "k"}, "bench.regressors");
                    bench::RegressorSpec spec =
                        bench::regressor_from_name(rj.at("kind").get<std::string>());
                    if (rj.contains("lambda")) spec.ridge_lambda = rj["lambda"].get<double>();
                    if (rj.contains("k")) spec.knn_k = rj["k"].get<std::size_t>();
                    cfg.regressors.push_back(spec);
                }
            }
            if (bj.contains("rare_quantile"))
                cfg.rare_quantile = bj["rare_quantile"].get<double>();
            if (bj.contains("reference"))
                cfg.reference = gen::variant_from_name(bj["reference"].get<std::string>());
        }
    } catch (const std::invalid_argument&) {
        throw;
    } catch (const std::exception& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    return run_config_from_json(read_text_file(path));
}

tabular::Dataset load_dataset(const RunConfig& cfg) {
    if (cfg.dataset.synth) {
        synth::SynthSpec spec = cfg.synth_spec;
        spec.rng_seed = derive_seed(cfg.seed, "synth");
        return synth::make_imbalanced(spec);
    }
    if (cfg.dataset.csv.empty() || cfg.dataset.schema.empty())
        throw std::invalid_argument(
            "config: dataset.csv and dataset.schema are required (or set dataset.synth)");
    const tabular::SchemaFile schema = tabular::read_schema_file(cfg.dataset.schema);
    return tabular::load_csv(cfg.dataset.csv, schema.columns, schema.target);
}

namespace {

std::string resolved_model_path(const RunConfig& cfg) {
    if (!cfg.model_path.empty()) return cfg.model_path;
    return (fs::path(cfg.out_dir) / "model.bin").string();
}

void ensure_out_dir(const RunConfig& cfg) {
    if (!cfg.out_dir.empty()) fs::create_directories(cfg.out_dir);
}

}  // namespace

FitOutputs run_fit(const RunConfig& cfg) {
    const gen::ModelKind kind = gen::required_model(cfg.gen.variant);
    if (kind == gen::ModelKind::none)
        throw std::invalid_argument("fit: variant " + gen::variant_name(cfg.gen.variant) +
                                    " trains no model");
    const tabular::Dataset ds = load_dataset(cfg);
    const tabular::EncodedMatrix em = tabular::fit_encode(ds);

    vae::TrainConfig tc = gen::train_config_for(kind, cfg.train);
    tc.rng_seed = derive_seed(cfg.seed, "fit");
    if (tc.kde_bandwidth > 0.0 && em.target_stddev > 0.0) tc.kde_bandwidth /= em.target_stddev;

    vae::TrainResult res = vae::train(em.values, em.target_vector, cfg.arch, tc);

    const Eigen::VectorXd y_raw = ds.cells.col(static_cast<Eigen::Index>(ds.target));
    const density::RelevanceWeights weights =
        density::relevance_weights(y_raw, cfg.train.alpha, {cfg.train.kde_bandwidth});

    model_io::ModelPackage pkg;
    pkg.latent = vae::encode_latent(res.model, em.values, em.target_vector);
    pkg.model = std::move(res.model);
    pkg.weights_raw = weights.raw;
    pkg.encoding = em;

    ordered_json trace;
    trace["run_config"] = run_config_json(cfg);
    trace["model_kind"] = gen::model_kind_name(kind);
    trace["epochs"] = res.trace.size();
    ordered_json entries = ordered_json::array();
    for (std::size_t e = 0; e < res.trace.size(); ++e) {
        const auto& t = res.trace[e];
        ordered_json ej;
        ej["epoch"] = e;
        ej["recon_x"] = t.recon_x;
        ej["recon_y_weighted"] = t.recon_y_weighted;
        ej["kl"] = t.kl;
        ej["corr_penalty"] = t.corr_penalty;
        ej["total"] = t.total;
        entries.push_back(std::move(ej));
    }
    trace["trace"] = std::move(entries);

    ensure_out_dir(cfg);
    FitOutputs out;
    out.model_path = resolved_model_path(cfg);
    out.trace_path = (fs::path(cfg.out_dir) / "fit_trace.json").string();

    // Stage both files, then move both into place.
    const std::string model_tmp = out.model_path + ".tmp";
    model_io::save_model(model_tmp, pkg);
    write_text_atomic(out.trace_path, trace.dump(2) + "\n");
    fs::rename(model_tmp, out.model_path);
    return out;
}

GenerateOutputs run_generate(const RunConfig& cfg) {
    gen::GenConfig gc = cfg.gen;
    gc.rng_seed = derive_seed(cfg.seed, "generate");

    gen::SyntheticBatch batch;
    if (gc.variant == gen::Variant::OS) {
        const tabular::Dataset ds = load_dataset(cfg);
        const Eigen::VectorXd y_raw = ds.cells.col(static_cast<Eigen::Index>(ds.target));
        const density::RelevanceWeights weights =
            density::relevance_weights(y_raw, cfg.train.alpha, {cfg.train.kde_bandwidth});
        const tabular::EncodedMatrix unused;
        batch = gen::generate(&ds, unused, weights, nullptr, nullptr, gc);
    } else {
        const model_io::ModelPackage pkg = model_io::load_model(resolved_model_path(cfg));
        density::RelevanceWeights weights;
        weights.raw = pkg.weights_raw;
        weights.normalized = pkg.weights_raw / pkg.weights_raw.sum();
        weights.alpha = pkg.model.train_config.alpha;
        batch = gen::generate(nullptr, pkg.encoding, weights, &pkg.model, &pkg.latent, gc);
    }

    ordered_json prov;
    prov["variant"] = gen::variant_name(batch.variant);
    prov["rng_seed"] = batch.rng_seed;
    ordered_json rows = ordered_json::array();
    for (const std::size_t s : batch.seed_indices) {
        ordered_json rj;
        rj["seed_index"] = s;
        rows.push_back(std::move(rj));
    }
    prov["rows"] = std::move(rows);
    prov["run_config"] = run_config_json(cfg);

    ensure_out_dir(cfg);
    GenerateOutputs out;
    out.csv_path = (fs::path(cfg.out_dir) / "synthetic.csv").string();
    out.provenance_path = (fs::path(cfg.out_dir) / "provenance.json").string();
    write_text_atomic(out.csv_path, tabular::to_csv(batch.rows));
    write_text_atomic(out.provenance_path, prov.dump(2) + "\n");
    return out;
}

BenchmarkOutputs run_benchmark_files(const RunConfig& cfg) {
    const tabular::Dataset ds = load_dataset(cfg);
    bench::BenchConfig bc;
    bc.folds = cfg.folds;
    bc.variants = cfg.variants;
    bc.regressors = cfg.regressors;
    bc.train = cfg.train;
    bc.arch = cfg.arch;
    bc.gen = cfg.gen;
    bc.rare_quantile = cfg.rare_quantile;
    bc.reference = cfg.reference;
    bc.rng_seed = cfg.seed;
    bc.threads = cfg.threads;

    const bench::BenchReport report = bench::run_benchmark(ds, bc);

    ordered_json j = ordered_json::parse(bench::report_to_json(report));
    j["run_config"] = run_config_json(cfg);

    ensure_out_dir(cfg);
    BenchmarkOutputs out;
    out.json_path = (fs::path(cfg.out_dir) / "bench_report.json").string();
    out.csv_path = (fs::path(cfg.out_dir) / "bench_report.csv").string();
    write_text_atomic(out.json_path, j.dump(2) + "\n");
    write_text_atomic(out.csv_path, bench::report_to_csv(report));

    out.total_cells = report.cells.size();
    for (const auto& c : report.cells)
        if (!c.metrics) ++out.failed_cells;
    out.all_failed = bench::all_cells_failed(report);
    return out;
}

SynthOutputs run_synth(const RunConfig& cfg) {
    synth::SynthSpec spec = cfg.synth_spec;
    spec.rng_seed = derive_seed(cfg.seed, "synth");
    const tabular::Dataset ds = synth::make_imbalanced(spec);

    ensure_out_dir(cfg);
    SynthOutputs out;
    out.csv_path = (fs::path(cfg.out_dir) / "synth.csv").string();
    out.schema_path = (fs::path(cfg.out_dir) / "synth.schema.json").string();
    write_text_atomic(out.csv_path, tabular::to_csv(ds));
    write_text_atomic(out.schema_path,
                      tabular::schema_to_json(ds.columns, ds.columns[ds.target].name));
    return out;
}

}  // namespace dsb::pipeline
