#include "stickersel/kernels.hpp"

#include "stickersel/scoring.hpp"

namespace stickersel::kernels {

namespace {

std::vector<std::pair<std::size_t, std::size_t>> pair_list(std::size_t n) {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    pairs.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
    }
    return pairs;
}

StickerOutput one_sticker(const ModelParameters& params, const StickerFeatures& f, const ModelOptions& options) {
    auto fwd = sticker_forward(params, f, options);
    return {std::move(fwd.fused.representation), std::move(fwd.score), fwd.fused.uniform_fallback};
}

void reduce_in_order(const std::vector<SampleLoss>& losses, const std::vector<ModelParameters>& per_sample,
                     double scale, SampleLoss& total, ModelParameters& grads) {
    for (std::size_t i = 0; i < losses.size(); ++i) {
        total.retrieval += losses[i].retrieval * scale;
        total.intention += losses[i].intention * scale;
        total.joint += losses[i].joint * scale;
        grads.add_scaled(per_sample[i], scale);
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// serial
// ---------------------------------------------------------------------------

namespace serial {

std::vector<double> pairwise_ssim(const std::vector<SsimPrepared>& images) {
    const auto pairs = pair_list(images.size());
    std::vector<double> out(pairs.size());
    for (std::size_t p = 0; p < pairs.size(); ++p) out[p] = ssim(images[pairs[p].first], images[pairs[p].second]);
    return out;
}

std::vector<double> score_rows(const Eigen::VectorXd& query, const Eigen::MatrixXd& index) {
    std::vector<double> out(static_cast<std::size_t>(index.rows()));
    for (Eigen::Index i = 0; i < index.rows(); ++i) {
        out[static_cast<std::size_t>(i)] = match_score(query, index.row(i).transpose()).value;
    }
    return out;
}

std::vector<StickerOutput> sticker_outputs(const ModelParameters& params, std::span<const StickerFeatures> stickers,
                                           const ModelOptions& options) {
    std::vector<StickerOutput> out;
    out.reserve(stickers.size());
    for (const auto& f : stickers) out.push_back(one_sticker(params, f, options));
    return out;
}

SampleLoss batch_gradients(const ModelParameters& params, std::span<const TrainingSample> batch,
                           const ModelOptions& options, ModelParameters& grads) {
    SampleLoss total;
    if (batch.empty()) return total;
    std::vector<SampleLoss> losses(batch.size());
    std::vector<ModelParameters> per_sample(batch.size(), params.zeros_like());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        losses[i] = sample_loss(params, batch[i], options, &per_sample[i], 1.0);
    }
    reduce_in_order(losses, per_sample, 1.0 / static_cast<double>(batch.size()), total, grads);
    return total;
}

}  // namespace serial

// ---------------------------------------------------------------------------
// omp
// ---------------------------------------------------------------------------

namespace omp {

std::vector<double> pairwise_ssim(const std::vector<SsimPrepared>& images) {
    const auto pairs = pair_list(images.size());
    std::vector<double> out(pairs.size());
    const auto n = static_cast<std::ptrdiff_t>(pairs.size());
#pragma omp parallel for schedule(dynamic, 8)
    for (std::ptrdiff_t p = 0; p < n; ++p) {
        const auto& [i, j] = pairs[static_cast<std::size_t>(p)];
        out[static_cast<std::size_t>(p)] = ssim(images[i], images[j]);
    }
    return out;
}

std::vector<double> score_rows(const Eigen::VectorXd& query, const Eigen::MatrixXd& index) {
    std::vector<double> out(static_cast<std::size_t>(index.rows()));
    const auto n = static_cast<std::ptrdiff_t>(index.rows());
#pragma omp parallel for schedule(static) if (n > 256)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        out[static_cast<std::size_t>(i)] = match_score(query, index.row(i).transpose()).value;
    }
    return out;
}

std::vector<StickerOutput> sticker_outputs(const ModelParameters& params, std::span<const StickerFeatures> stickers,
                                           const ModelOptions& options) {
    std::vector<StickerOutput> out(stickers.size());
    const auto n = static_cast<std::ptrdiff_t>(stickers.size());
#pragma omp parallel for schedule(dynamic, 4)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        out[static_cast<std::size_t>(i)] = one_sticker(params, stickers[static_cast<std::size_t>(i)], options);
    }
    return out;
}

SampleLoss batch_gradients(const ModelParameters& params, std::span<const TrainingSample> batch,
                           const ModelOptions& options, ModelParameters& grads) {
    SampleLoss total;
    if (batch.empty()) return total;
    std::vector<SampleLoss> losses(batch.size());
    std::vector<ModelParameters> per_sample(batch.size(), params.zeros_like());
    const auto n = static_cast<std::ptrdiff_t>(batch.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        losses[k] = sample_loss(params, batch[k], options, &per_sample[k], 1.0);
    }
    reduce_in_order(losses, per_sample, 1.0 / static_cast<double>(batch.size()), total, grads);
    return total;
}

}  // namespace omp

}  // namespace stickersel::kernels
