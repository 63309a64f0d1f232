// Microbenchmarks for the hot paths: density evaluation, one training run,
// latent-space resampling, and the ridge solve. Not part of the test suite;
// run the binary directly to measure.

#include <benchmark/benchmark.h>

#include "dsb/density.hpp"
#include "dsb/generate.hpp"
#include "dsb/nn.hpp"
#include "dsb/regress.hpp"
#include "dsb/rng.hpp"
#include "dsb/vae.hpp"

using namespace dsb;

namespace {

Eigen::VectorXd random_vector(Eigen::Index n, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.normal();
    return v;
}

void BM_KdeEval(benchmark::State& state) {
    const Eigen::Index n = state.range(0);
    const Eigen::VectorXd y = random_vector(n, 1);
    const Eigen::VectorXd pts = random_vector(256, 2);
    const double h = density::silverman_bandwidth_1d(y);
    for (auto _ : state) {
        benchmark::DoNotOptimize(density::kde_eval(y, h, pts));
    }
    state.SetItemsProcessed(state.iterations() * n * 256);
}
BENCHMARK(BM_KdeEval)->Arg(256)->Arg(1024)->Arg(4096);

void BM_TrainShortRun(benchmark::State& state) {
    const Eigen::Index n = 256, d = 8;
    Rng rng(3);
    const Eigen::MatrixXd X = nn::normal_matrix(rng, n, d);
    const Eigen::VectorXd y = random_vector(n, 4);
    vae::ArchitectureSpec arch;
    arch.encoder_hidden = {32, 32};
    arch.decoder_hidden = {32, 32};
    vae::TrainConfig cfg;
    cfg.epochs = static_cast<int>(state.range(0));
    cfg.batch_size = 64;
    cfg.rng_seed = 5;
    for (auto _ : state) {
        benchmark::DoNotOptimize(vae::train(X, y, arch, cfg));
    }
}
BENCHMARK(BM_TrainShortRun)->Arg(5)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_SmoothedBootstrap(benchmark::State& state) {
    const Eigen::Index n = 1024, q = 4;
    Rng setup(6);
    const Eigen::MatrixXd mu = nn::normal_matrix(setup, n, q);
    density::RelevanceWeights w;
    w.raw = random_vector(n, 7).array().abs() + 0.1;
    w.normalized = w.raw / w.raw.sum();
    const density::BandwidthSpec bw = density::scott_bandwidth(mu);
    const auto m = static_cast<std::size_t>(state.range(0));
    std::uint64_t seed = 0;
    for (auto _ : state) {
        Rng rng(++seed);
        benchmark::DoNotOptimize(gen::smoothed_bootstrap(mu, w, bw, m, rng));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SmoothedBootstrap)->Arg(1024)->Arg(16384);

void BM_RidgeFit(benchmark::State& state) {
    const Eigen::Index n = state.range(0), d = 16;
    Rng rng(8);
    const Eigen::MatrixXd X = nn::normal_matrix(rng, n, d);
    const Eigen::VectorXd y = random_vector(n, 9);
    for (auto _ : state) {
        benchmark::DoNotOptimize(regress::ridge_fit(X, y, 1e-2));
    }
}
BENCHMARK(BM_RidgeFit)->Arg(256)->Arg(2048);

}  // namespace

BENCHMARK_MAIN();
