// Serial reference kernels against their OpenMP counterparts.

#include "support.hpp"
#include "stickersel/image.hpp"
#include "stickersel/kernels.hpp"

#include <benchmark/benchmark.h>

#include <deque>

using namespace stickersel;

namespace {

constexpr std::size_t kText = 64, kRegion = 64, kDim = 64, kHeads = 4, kRegions = 4;

struct Fixture {
    ModelParameters params;
    std::vector<StickerFeatures> stickers;
    std::vector<TrainingSample> batch;
    Eigen::MatrixXd index;
    Eigen::VectorXd query;
    std::vector<SsimPrepared> images;

    Fixture() {
        std::mt19937_64 rng(1);
        params = testsupport::random_model(rng, 8, kText, kRegion, kDim, kHeads, 0.2);
        for (int i = 0; i < 256; ++i) {
            stickers.push_back(testsupport::random_features(rng, "s" + std::to_string(i), kRegions, kRegion, kText));
        }
        for (int i = 0; i < 32; ++i) {
            TrainingSample s;
            s.context = testsupport::random_vector(rng, kText);
            s.gold_label = static_cast<std::size_t>(i % 8);
            s.query = testsupport::random_vector(rng, kDim);
            s.positive = &stickers[static_cast<std::size_t>(i)];
            for (int n = 1; n <= 5; ++n) s.negatives.push_back(&stickers[static_cast<std::size_t>((i + 37 * n) % 256)]);
            batch.push_back(std::move(s));
        }
        index = testsupport::random_matrix(rng, 20000, kDim);
        query = testsupport::random_vector(rng, kDim);
        std::uniform_int_distribution<int> px(0, 255);
        for (int i = 0; i < 48; ++i) {
            GrayImage img{96, 96, std::vector<double>(96 * 96)};
            for (auto& p : img.pixels) p = static_cast<double>(px(rng));
            images.push_back(prepare_ssim(img));
        }
    }
};

const Fixture& fixture() {
    static const Fixture f;
    return f;
}

const ModelOptions kOptions{};

void BM_ScoreRowsSerial(benchmark::State& st) {
    const auto& f = fixture();
    for (auto _ : st) benchmark::DoNotOptimize(kernels::serial::score_rows(f.query, f.index));
}
void BM_ScoreRowsOmp(benchmark::State& st) {
    const auto& f = fixture();
    for (auto _ : st) benchmark::DoNotOptimize(kernels::omp::score_rows(f.query, f.index));
}

void BM_StickerOutputsSerial(benchmark::State& st) {
    const auto& f = fixture();
    for (auto _ : st) benchmark::DoNotOptimize(kernels::serial::sticker_outputs(f.params, f.stickers, kOptions));
}
void BM_StickerOutputsOmp(benchmark::State& st) {
    const auto& f = fixture();
    for (auto _ : st) benchmark::DoNotOptimize(kernels::omp::sticker_outputs(f.params, f.stickers, kOptions));
}

void BM_BatchGradientsSerial(benchmark::State& st) {
    const auto& f = fixture();
    for (auto _ : st) {
        auto grads = f.params.zeros_like();
        benchmark::DoNotOptimize(kernels::serial::batch_gradients(f.params, f.batch, kOptions, grads));
    }
}
void BM_BatchGradientsOmp(benchmark::State& st) {
    const auto& f = fixture();
    for (auto _ : st) {
        auto grads = f.params.zeros_like();
        benchmark::DoNotOptimize(kernels::omp::batch_gradients(f.params, f.batch, kOptions, grads));
    }
}

void BM_PairwiseSsimSerial(benchmark::State& st) {
    const auto& f = fixture();
    for (auto _ : st) benchmark::DoNotOptimize(kernels::serial::pairwise_ssim(f.images));
}
void BM_PairwiseSsimOmp(benchmark::State& st) {
    const auto& f = fixture();
    for (auto _ : st) benchmark::DoNotOptimize(kernels::omp::pairwise_ssim(f.images));
}

}  // namespace

BENCHMARK(BM_ScoreRowsSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ScoreRowsOmp)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_StickerOutputsSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_StickerOutputsOmp)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BatchGradientsSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BatchGradientsOmp)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PairwiseSsimSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PairwiseSsimOmp)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
