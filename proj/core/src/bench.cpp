#include "dsb/bench.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "dsb/density.hpp"
#include "dsb/rng.hpp"

namespace dsb::bench {

using ordered_json = nlohmann::ordered_json;

std::string regressor_name(const RegressorSpec& spec) {
    switch (spec.kind) {
        case RegressorSpec::Kind::ridge: return "ridge";
        case RegressorSpec::Kind::knn: return "knn";
    }
    throw std::logic_error("regressor_name: unknown kind");
}

RegressorSpec regressor_from_name(const std::string& name) {
    RegressorSpec spec;
    if (name == "ridge") {
        spec.kind = RegressorSpec::Kind::ridge;
        return spec;
    }
    if (name == "knn") {
        spec.kind = RegressorSpec::Kind::knn;
        return spec;
    }
    throw std::invalid_argument("unknown regressor: " + name + " (expected ridge or knn)");
}

namespace {

struct FoldOutput {
    FoldInfo info;
    std::vector<Cell> cells;
};

std::vector<gen::ModelKind> needed_model_kinds(const std::vector<gen::Variant>& variants) {
    std::vector<gen::ModelKind> kinds;
    for (const auto kind : {gen::ModelKind::autoencoder, gen::ModelKind::plain,
                            gen::ModelKind::balanced, gen::ModelKind::disentangled}) {
        const bool wanted = std::any_of(variants.begin(), variants.end(), [&](gen::Variant v) {
            return gen::required_model(v) == kind;
        });
        if (wanted) kinds.push_back(kind);
    }
    return kinds;
}

FoldOutput run_fold(const tabular::Dataset& ds, const BenchConfig& cfg,
                    const tabular::FoldPlan& plan, std::size_t f) {
    FoldOutput out;
    out.info.fold = f;
    const auto test_rows = plan.fold_rows(f);
    const auto train_rows = plan.complement_rows(f);
    out.info.train_rows = train_rows.size();
    out.info.test_rows = test_rows.size();

    const auto fail_all = [&](const std::string& msg) {
        out.cells.clear();
        for (const auto variant : cfg.variants)
            for (const auto& reg : cfg.regressors)
                out.cells.push_back({f, variant, regressor_name(reg), std::nullopt, msg});
    };

    try {
        const tabular::Dataset train_ds = tabular::subset(ds, train_rows);
        const tabular::Dataset test_ds = tabular::subset(ds, test_rows);
        const tabular::EncodedMatrix em = tabular::fit_encode(train_ds);
        const auto target_col = static_cast<Eigen::Index>(ds.target);
        const Eigen::VectorXd y_train = train_ds.cells.col(target_col);
        const Eigen::VectorXd y_test = test_ds.cells.col(target_col);

        const double h_y = cfg.train.kde_bandwidth > 0.0
                               ? cfg.train.kde_bandwidth
                               : density::silverman_bandwidth_1d(y_train);
        const density::RelevanceWeights weights =
            density::relevance_weights(y_train, cfg.train.alpha, {h_y});
        const double rare_thr = density::quantile(y_train, cfg.rare_quantile);

        // Relevance weights of the TEST targets under the training-fitted
        // density (floored: a far-out test point must not yield an infinite
        // weight).
        Eigen::VectorXd test_w = density::kde_eval(y_train, h_y, y_test);
        for (Eigen::Index i = 0; i < test_w.size(); ++i)
            test_w[i] = std::pow(std::max(test_w[i], 1e-150), -cfg.train.alpha);

        const tabular::ApplyResult test_enc = tabular::apply_encode(em, test_ds);

        std::map<gen::ModelKind, vae::VaeModel> models;
        std::map<gen::ModelKind, vae::LatentSummary> latents;
        std::map<gen::ModelKind, std::string> kind_errors;
        for (const auto kind : needed_model_kinds(cfg.variants)) {
            vae::TrainConfig tc = gen::train_config_for(kind, cfg.train);
            tc.rng_seed = derive_seed(cfg.rng_seed, "train:" + gen::model_kind_name(kind), f);
            // An explicit config bandwidth is in original y units; training
            // sees the standardized target.
            if (tc.kde_bandwidth > 0.0 && em.target_stddev > 0.0)
                tc.kde_bandwidth /= em.target_stddev;
            try {
                vae::TrainResult res = vae::train(em.values, em.target_vector, cfg.arch, tc);
                latents[kind] = vae::encode_latent(res.model, em.values, em.target_vector);
                models[kind] = std::move(res.model);
                out.info.models_trained.push_back(gen::model_kind_name(kind));
            } catch (const std::exception& e) {
                kind_errors[kind] = std::string("model training failed: ") + e.what();
            }
        }

        for (const auto variant : cfg.variants) {
            std::string stage_error;
            tabular::Dataset aug;
            if (variant == gen::Variant::Baseline) {
                aug = train_ds;
            } else {
                const gen::ModelKind kind = gen::required_model(variant);
                const auto err_it = kind_errors.find(kind);
                if (err_it != kind_errors.end()) {
                    stage_error = err_it->second;
                } else {
                    try {
                        gen::GenConfig gc = cfg.gen;
                        gc.variant = variant;
                        gc.rng_seed =
                            derive_seed(cfg.rng_seed, "gen:" + gen::variant_name(variant), f);
                        const vae::VaeModel* mp = nullptr;
                        const vae::LatentSummary* lp = nullptr;
                        if (kind != gen::ModelKind::none) {
                            mp = &models.at(kind);
                            lp = &latents.at(kind);
                        }
                        const gen::SyntheticBatch synth =
                            gen::generate(&train_ds, em, weights, mp, lp, gc);
                        aug = gen::build_training_set(train_ds, synth);
                    } catch (const std::exception& e) {
                        stage_error = std::string("generation failed: ") + e.what();
                    }
                }
            }

            Eigen::MatrixXd aug_x;
            Eigen::VectorXd aug_y;
            if (stage_error.empty()) {
                try {
                    aug_x = tabular::apply_encode(em, aug).values;
                    aug_y = aug.cells.col(target_col);
                } catch (const std::exception& e) {
                    stage_error = std::string("encoding failed: ") + e.what();
                }
            }

            for (const auto& reg : cfg.regressors) {
                Cell cell;
                cell.fold = f;
                cell.variant = variant;
                cell.regressor = regressor_name(reg);
                if (!stage_error.empty()) {
                    cell.error = stage_error;
                } else {
                    try {
                        Eigen::VectorXd pred;
                        if (reg.kind == RegressorSpec::Kind::ridge) {
                            const regress::RidgeModel rm =
                                regress::ridge_fit(aug_x, aug_y, reg.ridge_lambda);
                            pred = regress::ridge_predict(rm, test_enc.values);
                        } else {
                            pred = regress::knn_predict(aug_x, aug_y, test_enc.values, reg.knn_k);
                        }
                        cell.metrics = regress::compute_metrics(y_test, pred, test_w, rare_thr);
                    } catch (const std::exception& e) {
                        cell.error = std::string("regression failed: ") + e.what();
                    }
                }
                out.cells.push_back(std::move(cell));
            }
        }
    } catch (const std::exception& e) {
        fail_all(std::string("fold setup failed: ") + e.what());
    }
    return out;
}

struct MeanStd {
    double mean = 0.0;
    double stddev = 0.0;
};

MeanStd mean_stddev(const std::vector<double>& v) {
    MeanStd ms;
    if (v.empty()) return ms;
    double acc = 0.0;
    for (const double x : v) acc += x;
    ms.mean = acc / static_cast<double>(v.size());
    if (v.size() > 1) {
        double ss = 0.0;
        for (const double x : v) ss += (x - ms.mean) * (x - ms.mean);
        ms.stddev = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    return ms;
}

}  // namespace

BenchReport run_benchmark(const tabular::Dataset& ds, const BenchConfig& cfg) {
    tabular::validate(ds);
    if (cfg.folds < 2) throw std::invalid_argument("run_benchmark: need at least 2 folds");
    if (cfg.folds > ds.n()) throw std::invalid_argument("run_benchmark: more folds than rows");
    if (cfg.variants.empty()) throw std::invalid_argument("run_benchmark: no variants");
    if (cfg.regressors.empty()) throw std::invalid_argument("run_benchmark: no regressors");
    if (!(cfg.rare_quantile >= 0.0 && cfg.rare_quantile < 1.0))
        throw std::invalid_argument("run_benchmark: rare_quantile must be in [0, 1)");
    if (cfg.threads < 1) throw std::invalid_argument("run_benchmark: threads must be >= 1");
    for (const auto& reg : cfg.regressors) {
        if (reg.kind == RegressorSpec::Kind::knn && reg.knn_k < 1)
            throw std::invalid_argument("run_benchmark: knn_k must be >= 1");
        if (reg.kind == RegressorSpec::Kind::ridge && reg.ridge_lambda < 0.0)
            throw std::invalid_argument("run_benchmark: ridge_lambda must be >= 0");
    }

    const tabular::FoldPlan plan = tabular::kfold(ds.n(), cfg.folds, cfg.rng_seed);

    std::vector<FoldOutput> fold_out(cfg.folds);
    const auto nthreads =
        std::min<std::size_t>(static_cast<std::size_t>(cfg.threads), cfg.folds);
    if (nthreads <= 1) {
        for (std::size_t f = 0; f < cfg.folds; ++f) fold_out[f] = run_fold(ds, cfg, plan, f);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(nthreads);
        for (std::size_t tid = 0; tid < nthreads; ++tid)
            pool.emplace_back([&, tid] {
                for (std::size_t f = tid; f < cfg.folds; f += nthreads)
                    fold_out[f] = run_fold(ds, cfg, plan, f);
            });
        for (auto& t : pool) t.join();
    }

    BenchReport report;
    report.config = cfg;
    report.dataset_rows = ds.n();
    for (auto& fo : fold_out) {
        report.folds.push_back(std::move(fo.info));
        for (auto& cell : fo.cells) report.cells.push_back(std::move(cell));
    }

    // Aggregates in (variant, regressor) order; Wilcoxon pairs per-fold RMSE
    // against the reference variant.
    const bool have_reference =
        std::find(cfg.variants.begin(), cfg.variants.end(), cfg.reference) != cfg.variants.end();
    const auto find_cell = [&](std::size_t fold, gen::Variant v,
                               const std::string& reg) -> const Cell* {
        for (const auto& c : report.cells)
            if (c.fold == fold && c.variant == v && c.regressor == reg) return &c;
        return nullptr;
    };

    for (const auto variant : cfg.variants) {
        for (const auto& reg : cfg.regressors) {
            const std::string reg_name = regressor_name(reg);
            Aggregate agg;
            agg.variant = variant;
            agg.regressor = reg_name;
            std::vector<double> rmse, mae, wmse, r2, rare;
            for (std::size_t f = 0; f < cfg.folds; ++f) {
                const Cell* c = find_cell(f, variant, reg_name);
                if (c == nullptr || !c->metrics) continue;
                rmse.push_back(c->metrics->rmse);
                mae.push_back(c->metrics->mae);
                wmse.push_back(c->metrics->weighted_mse);
                if (c->metrics->r2) r2.push_back(*c->metrics->r2);
                if (c->metrics->rare_region_rmse) rare.push_back(*c->metrics->rare_region_rmse);
            }
            agg.folds_valid = rmse.size();
            const MeanStd ms_rmse = mean_stddev(rmse);
            agg.rmse_mean = ms_rmse.mean;
            agg.rmse_stddev = ms_rmse.stddev;
            const MeanStd ms_mae = mean_stddev(mae);
            agg.mae_mean = ms_mae.mean;
            agg.mae_stddev = ms_mae.stddev;
            const MeanStd ms_wmse = mean_stddev(wmse);
            agg.weighted_mse_mean = ms_wmse.mean;
            agg.weighted_mse_stddev = ms_wmse.stddev;
            agg.r2_folds = r2.size();
            if (!r2.empty()) {
                const MeanStd ms = mean_stddev(r2);
                agg.r2_mean = ms.mean;
                agg.r2_stddev = ms.stddev;
            }
            agg.rare_folds = rare.size();
            if (!rare.empty()) {
                const MeanStd ms = mean_stddev(rare);
                agg.rare_region_rmse_mean = ms.mean;
                agg.rare_region_rmse_stddev = ms.stddev;
            }

            if (have_reference && variant != cfg.reference) {
                std::vector<double> a, b;
                for (std::size_t f = 0; f < cfg.folds; ++f) {
                    const Cell* cv = find_cell(f, variant, reg_name);
                    const Cell* cr = find_cell(f, cfg.reference, reg_name);
                    if (cv && cr && cv->metrics && cr->metrics) {
                        a.push_back(cv->metrics->rmse);
                        b.push_back(cr->metrics->rmse);
                    }
                }
                if (!a.empty()) {
                    agg.vs_reference = stats::wilcoxon_signed_rank(
                        Eigen::Map<const Eigen::VectorXd>(a.data(),
                                                          static_cast<Eigen::Index>(a.size())),
                        Eigen::Map<const Eigen::VectorXd>(b.data(),
                                                          static_cast<Eigen::Index>(b.size())));
                }
            }
            report.aggregates.push_back(std::move(agg));
        }
    }
    return report;
}

bool all_cells_failed(const BenchReport& report) {
    if (report.cells.empty()) return true;
    return std::all_of(report.cells.begin(), report.cells.end(),
                       [](const Cell& c) { return !c.metrics.has_value(); });
}

namespace {

ordered_json metrics_to_json(const regress::MetricSet& m) {
    ordered_json j;
    j["rmse"] = m.rmse;
    j["mae"] = m.mae;
    j["weighted_mse"] = m.weighted_mse;
    j["r2"] = m.r2 ? ordered_json(*m.r2) : ordered_json(nullptr);
    j["rare_region_rmse"] =
        m.rare_region_rmse ? ordered_json(*m.rare_region_rmse) : ordered_json(nullptr);
    return j;
}

ordered_json config_to_json(const BenchConfig& cfg) {
    ordered_json j;
    j["folds"] = cfg.folds;
    j["rng_seed"] = cfg.rng_seed;
    j["rare_quantile"] = cfg.rare_quantile;
    j["reference"] = gen::variant_name(cfg.reference);
    ordered_json variants = ordered_json::array();
    for (const auto v : cfg.variants) variants.push_back(gen::variant_name(v));
    j["variants"] = std::move(variants);
    ordered_json regs = ordered_json::array();
    for (const auto& r : cfg.regressors) {
        ordered_json rj;
        rj["kind"] = regressor_name(r);
        if (r.kind == RegressorSpec::Kind::ridge) rj["lambda"] = r.ridge_lambda;
        if (r.kind == RegressorSpec::Kind::knn) rj["k"] = r.knn_k;
        regs.push_back(std::move(rj));
    }
    j["regressors"] = std::move(regs);
    ordered_json train;
    train["beta_x"] = cfg.train.beta_x;
    train["beta_y"] = cfg.train.beta_y;
    train["beta_kl"] = cfg.train.beta_kl;
    train["beta_corr"] = cfg.train.beta_corr;
    train["alpha"] = cfg.train.alpha;
    train["epochs"] = cfg.train.epochs;
    train["batch_size"] = cfg.train.batch_size;
    train["learning_rate"] = cfg.train.learning_rate;
    train["kde_bandwidth"] = cfg.train.kde_bandwidth;
    j["train"] = std::move(train);
    ordered_json arch;
    arch["latent_dim"] = cfg.arch.latent_dim;
    arch["encoder_hidden"] = cfg.arch.encoder_hidden;
    arch["decoder_hidden"] = cfg.arch.decoder_hidden;
    arch["activation"] = nn::activation_name(cfg.arch.activation);
    j["arch"] = std::move(arch);
    ordered_json genj;
    genj["m"] = cfg.gen.m ? ordered_json(*cfg.gen.m) : ordered_json(nullptr);
    genj["hmult"] = cfg.gen.hmult;
    j["gen"] = std::move(genj);
    return j;
}

}  // namespace

std::string report_to_json(const BenchReport& report) {
    ordered_json j;
    j["config"] = config_to_json(report.config);
    j["dataset_rows"] = report.dataset_rows;

    ordered_json folds = ordered_json::array();
    for (const auto& fi : report.folds) {
        ordered_json fj;
        fj["fold"] = fi.fold;
        fj["train_rows"] = fi.train_rows;
        fj["test_rows"] = fi.test_rows;
        fj["models_trained"] = fi.models_trained;
        folds.push_back(std::move(fj));
    }
    j["folds"] = std::move(folds);

    ordered_json cells = ordered_json::array();
    for (const auto& c : report.cells) {
        ordered_json cj;
        cj["fold"] = c.fold;
        cj["variant"] = gen::variant_name(c.variant);
        cj["regressor"] = c.regressor;
        if (c.metrics)
            cj["metrics"] = metrics_to_json(*c.metrics);
        else
            cj["error"] = c.error;
        cells.push_back(std::move(cj));
    }
    j["cells"] = std::move(cells);

    ordered_json aggs = ordered_json::array();
    for (const auto& a : report.aggregates) {
        ordered_json aj;
        aj["variant"] = gen::variant_name(a.variant);
        aj["regressor"] = a.regressor;
        aj["folds_valid"] = a.folds_valid;
        aj["rmse_mean"] = a.rmse_mean;
        aj["rmse_stddev"] = a.rmse_stddev;
        aj["mae_mean"] = a.mae_mean;
        aj["mae_stddev"] = a.mae_stddev;
        aj["weighted_mse_mean"] = a.weighted_mse_mean;
        aj["weighted_mse_stddev"] = a.weighted_mse_stddev;
        aj["r2_folds"] = a.r2_folds;
        aj["r2_mean"] = a.r2_mean ? ordered_json(*a.r2_mean) : ordered_json(nullptr);
        aj["r2_stddev"] = a.r2_stddev ? ordered_json(*a.r2_stddev) : ordered_json(nullptr);
        aj["rare_folds"] = a.rare_folds;
        aj["rare_region_rmse_mean"] = a.rare_region_rmse_mean
                                          ? ordered_json(*a.rare_region_rmse_mean)
                                          : ordered_json(nullptr);
        aj["rare_region_rmse_stddev"] = a.rare_region_rmse_stddev
                                            ? ordered_json(*a.rare_region_rmse_stddev)
                                            : ordered_json(nullptr);
        if (a.vs_reference) {
            ordered_json wj;
            wj["statistic"] = a.vs_reference->statistic;
            wj["p_value"] = a.vs_reference->p_value;
            wj["method"] = a.vs_reference->method;
            wj["degenerate"] = a.vs_reference->degenerate;
            aj["wilcoxon_vs_reference"] = std::move(wj);
        } else {
            aj["wilcoxon_vs_reference"] = nullptr;
        }
        aggs.push_back(std::move(aj));
    }
    j["aggregates"] = std::move(aggs);
    return j.dump(2) + "\n";
}

namespace {

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (const char ch : s) {
        if (ch == '"') out += "\"\"";
        out += ch;
    }
    out += '"';
    return out;
}

}  // namespace

std::string report_to_csv(const BenchReport& report) {
    std::string out = "fold,variant,regressor,rmse,mae,weighted_mse,r2,rare_region_rmse,error\n";
    for (const auto& c : report.cells) {
        out += std::to_string(c.fold);
        out += ',';
        out += gen::variant_name(c.variant);
        out += ',';
        out += c.regressor;
        out += ',';
        if (c.metrics) {
            out += tabular::format_double(c.metrics->rmse);
            out += ',';
            out += tabular::format_double(c.metrics->mae);
            out += ',';
            out += tabular::format_double(c.metrics->weighted_mse);
            out += ',';
            if (c.metrics->r2) out += tabular::format_double(*c.metrics->r2);
            out += ',';
            if (c.metrics->rare_region_rmse)
                out += tabular::format_double(*c.metrics->rare_region_rmse);
            out += ',';
        } else {
            out += ",,,,,";
        }
        out += csv_escape(c.error);
        out += '\n';
    }
    return out;
}

}  // namespace dsb::bench
