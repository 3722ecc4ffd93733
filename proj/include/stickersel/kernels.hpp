#pragma once
// Data-parallel hot loops.
//
// Every kernel exists twice: a plain serial loop kept as the reference, and
// an OpenMP version used in production. Each parallel iteration writes only
// its own output slot and any reduction happens afterwards in index order,
// so the two variants return bit-identical results for any thread count.

#include "stickersel/image.hpp"
#include "stickersel/model.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace stickersel::kernels {

struct StickerOutput {
    Eigen::VectorXd representation;
    RelationScore score;
    bool uniform_fallback = false;
};

namespace serial {

// SSIM of every pair (i < j), row-major over i.
std::vector<double> pairwise_ssim(const std::vector<SsimPrepared>& images);

// Cosine of `query` against each row of `index`.
std::vector<double> score_rows(const Eigen::VectorXd& query, const Eigen::MatrixXd& index);

std::vector<StickerOutput> sticker_outputs(const ModelParameters& params, std::span<const StickerFeatures> stickers,
                                           const ModelOptions& options);

SampleLoss batch_gradients(const ModelParameters& params, std::span<const TrainingSample> batch,
                           const ModelOptions& options, ModelParameters& grads);

}  // namespace serial

namespace omp {

std::vector<double> pairwise_ssim(const std::vector<SsimPrepared>& images);
std::vector<double> score_rows(const Eigen::VectorXd& query, const Eigen::MatrixXd& index);
std::vector<StickerOutput> sticker_outputs(const ModelParameters& params, std::span<const StickerFeatures> stickers,
                                           const ModelOptions& options);
SampleLoss batch_gradients(const ModelParameters& params, std::span<const TrainingSample> batch,
                           const ModelOptions& options, ModelParameters& grads);

}  // namespace omp

}  // namespace stickersel::kernels
