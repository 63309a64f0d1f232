#include <doctest.h>

#include <nlohmann/json.hpp>

#include "dsb/pipeline.hpp"
#include "dsb/rng.hpp"
#include "tempdir.hpp"

using namespace dsb;
using pipeline::RunConfig;

TEST_CASE("run config survives a JSON round trip losslessly") {
    RunConfig cfg;
    cfg.seed = 123456789012345ULL;
    cfg.out_dir = "some/where";
    cfg.threads = 3;
    cfg.dataset.csv = "data.csv";
    cfg.dataset.schema = "data.schema.json";
    cfg.synth_spec.n = 321;
    cfg.synth_spec.p_numeric = 4;
    cfg.synth_spec.p_categorical = 2;
    cfg.synth_spec.tail_fraction = 0.07;
    cfg.synth_spec.noise_sd = 0.3;
    cfg.synth_spec.nonlinearity = synth::Nonlinearity::interaction;
    cfg.train.beta_x = 1.5;
    cfg.train.beta_y = 2.5;
    cfg.train.beta_kl = 2e-5;
    cfg.train.beta_corr = 0.5;
    cfg.train.alpha = 0.8;
    cfg.train.epochs = 42;
    cfg.train.batch_size = 17;
    cfg.train.learning_rate = 5e-4;
    cfg.train.kde_bandwidth = 0.33;
    cfg.arch.latent_dim = 5;
    cfg.arch.encoder_hidden = {32, 16};
    cfg.arch.decoder_hidden = {16, 32};
    cfg.gen.variant = gen::Variant::kBVAEw;
    cfg.gen.m = 222;
    cfg.gen.hmult = 0.7;
    cfg.folds = 6;
    cfg.variants = {gen::Variant::Baseline, gen::Variant::DSB};
    cfg.regressors = {{bench::RegressorSpec::Kind::knn, 1e-2, 9}};
    cfg.rare_quantile = 0.85;
    cfg.reference = gen::Variant::OS;
    cfg.model_path = "elsewhere/model.bin";

    const std::string text = pipeline::run_config_to_json(cfg);
    const RunConfig back = pipeline::run_config_from_json(text);

    CHECK(back.seed == cfg.seed);
    CHECK(back.out_dir == cfg.out_dir);
    CHECK(back.threads == cfg.threads);
    CHECK(back.dataset.csv == cfg.dataset.csv);
    CHECK(back.dataset.schema == cfg.dataset.schema);
    CHECK(back.synth_spec.n == cfg.synth_spec.n);
    CHECK(back.synth_spec.p_numeric == cfg.synth_spec.p_numeric);
    CHECK(back.synth_spec.p_categorical == cfg.synth_spec.p_categorical);
    CHECK(back.synth_spec.tail_fraction == cfg.synth_spec.tail_fraction);
    CHECK(back.synth_spec.noise_sd == cfg.synth_spec.noise_sd);
    CHECK(back.synth_spec.nonlinearity == cfg.synth_spec.nonlinearity);
    CHECK(back.train.beta_x == cfg.train.beta_x);
    CHECK(back.train.beta_y == cfg.train.beta_y);
    CHECK(back.train.beta_kl == cfg.train.beta_kl);
    CHECK(back.train.beta_corr == cfg.train.beta_corr);
    CHECK(back.train.alpha == cfg.train.alpha);
    CHECK(back.train.epochs == cfg.train.epochs);
    CHECK(back.train.batch_size == cfg.train.batch_size);
    CHECK(back.train.learning_rate == cfg.train.learning_rate);
    CHECK(back.train.kde_bandwidth == cfg.train.kde_bandwidth);
    CHECK(back.arch.latent_dim == cfg.arch.latent_dim);
    CHECK(back.arch.encoder_hidden == cfg.arch.encoder_hidden);
    CHECK(back.arch.decoder_hidden == cfg.arch.decoder_hidden);
    CHECK(back.gen.variant == cfg.gen.variant);
    CHECK(back.gen.m == cfg.gen.m);
    CHECK(back.gen.hmult == cfg.gen.hmult);
    CHECK(back.folds == cfg.folds);
    CHECK(back.variants == cfg.variants);
    REQUIRE(back.regressors.size() == 1);
    CHECK(back.regressors[0].kind == bench::RegressorSpec::Kind::knn);
    CHECK(back.regressors[0].knn_k == 9);
    CHECK(back.rare_quantile == cfg.rare_quantile);
    CHECK(back.reference == cfg.reference);
    CHECK(back.model_path == cfg.model_path);

    // Serialize -> parse -> serialize is a fixed point.
    CHECK(pipeline::run_config_to_json(back) == text);
}

TEST_CASE("an empty JSON object yields the documented defaults") {
    const RunConfig cfg = pipeline::run_config_from_json("{}");
    CHECK(cfg.seed == 0);
    CHECK(cfg.out_dir == "out");
    CHECK(cfg.threads == 1);
    CHECK_FALSE(cfg.dataset.synth);
    CHECK(cfg.train.beta_x == 1.0);
    CHECK(cfg.train.beta_y == 3.0);
    CHECK(cfg.train.beta_kl == 1e-5);
    CHECK(cfg.train.beta_corr == 1.0);
    CHECK(cfg.train.alpha == 1.0);
    CHECK(cfg.train.epochs == 500);
    CHECK(cfg.train.batch_size == 64);
    CHECK(cfg.train.learning_rate == 1e-3);
    CHECK(cfg.arch.encoder_hidden == std::vector<Eigen::Index>{64, 64});
    CHECK(cfg.folds == 10);
    CHECK(cfg.variants == gen::all_variants());
    CHECK(cfg.gen.variant == gen::Variant::DSB);
    CHECK(cfg.gen.hmult == 1.0);
    CHECK_FALSE(cfg.gen.m.has_value());
    CHECK(cfg.rare_quantile == 0.9);
    CHECK(cfg.reference == gen::Variant::Baseline);
}

TEST_CASE("unknown keys are named in the rejection") {
    CHECK_THROWS_WITH_AS(pipeline::run_config_from_json(R"({"bogus_key": 1})"),
                         doctest::Contains("bogus_key"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(pipeline::run_config_from_json(R"({"train": {"beta_q": 1}})"),
                         doctest::Contains("beta_q"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(pipeline::run_config_from_json("[1,2]"), doctest::Contains("config"),
                         std::invalid_argument);
    CHECK_THROWS_AS(pipeline::run_config_from_json("not json at all"), std::invalid_argument);
}

TEST_CASE("config files load from disk and missing files are runtime errors") {
    testutil::TempDir tmp("pipe-cfg");
    const std::string path = tmp.file("cfg.json", R"({"seed": 9, "bench": {"folds": 3}})");
    const RunConfig cfg = pipeline::load_run_config(path);
    CHECK(cfg.seed == 9);
    CHECK(cfg.folds == 3);
    CHECK_THROWS_AS(pipeline::load_run_config(tmp.join("absent.json")), std::runtime_error);
}

TEST_CASE("synth-backed dataset loading is seed-deterministic") {
    RunConfig cfg;
    cfg.dataset.synth = true;
    cfg.synth_spec.n = 64;
    cfg.synth_spec.p_numeric = 2;
    cfg.seed = 404;
    const tabular::Dataset a = pipeline::load_dataset(cfg);
    const tabular::Dataset b = pipeline::load_dataset(cfg);
    CHECK(a.cells == b.cells);
    CHECK(a.n() == 64);

    cfg.seed = 405;
    const tabular::Dataset c = pipeline::load_dataset(cfg);
    CHECK(a.cells != c.cells);

    // The file route requires both the CSV and its schema.
    RunConfig file_cfg;
    file_cfg.dataset.csv = "only.csv";
    CHECK_THROWS_AS(pipeline::load_dataset(file_cfg), std::invalid_argument);
}

TEST_CASE("csv-backed dataset loading honors the schema") {
    testutil::TempDir tmp("pipe-csv");
    const std::string csv = tmp.file("d.csv", "a,y\n1.0,2.0\n3.0,4.0\n5.0,6.0\n");
    const std::string schema = tmp.file("d.schema.json", R"({
        "columns": [
            {"name": "a", "kind": "numeric"},
            {"name": "y", "kind": "numeric"}
        ],
        "target": "y"
    })");
    RunConfig cfg;
    cfg.dataset.csv = csv;
    cfg.dataset.schema = schema;
    const tabular::Dataset ds = pipeline::load_dataset(cfg);
    CHECK(ds.n() == 3);
    CHECK(ds.target == 1);
    CHECK(ds.cells(2, 1) == 6.0);
}
