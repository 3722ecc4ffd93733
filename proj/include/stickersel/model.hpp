#pragma once
// The trainable part of the selector and its exact gradients.
//
// Everything upstream of the heads (text encoder, visual encoder, describer,
// commonsense generator) is frozen, so a training sample is fully described
// by precomputed vectors: the context embedding, the query embedding used for
// matching, and the raw features of the positive and negative stickers.

#include "stickersel/fusion.hpp"
#include "stickersel/intention.hpp"
#include "stickersel/scoring.hpp"

#include <array>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace stickersel {

struct ModelOptions {
    FuseMode fuse_mode = FuseMode::PerRegionWeighted;
    // Attributes that take part in cross-modal attention. Empty means the
    // attribute branch is ablated and regions are mean-pooled.
    std::vector<Attribute> attributes{kAttributes.begin(), kAttributes.end()};
    LossForm loss_form = LossForm::ClampedStandard;
    double margin = 0.2;
    double lambda_ret = 1.0;
    double lambda_int = 1.0;
    bool use_intention = true;  // false: no intention loss
};

struct ModelParameters {
    IntentionHead intention;
    FusionParameters fusion;

    // Visits every trainable tensor in a fixed order.
    void for_each(const std::function<void(const std::string& name, double* data, std::size_t size)>& fn);
    void for_each(const std::function<void(const std::string& name, const double* data, std::size_t size)>& fn) const;

    std::size_t parameter_count() const;
    ModelParameters zeros_like() const;
    // this += scale * other
    void add_scaled(const ModelParameters& other, double scale);
};

// Raw, frozen inputs for one sticker.
struct StickerFeatures {
    std::string id;
    Eigen::MatrixXd regions;     // n x region dim
    Eigen::MatrixXd attributes;  // 4 x text dim, row index = Attribute
};

StickerFeatures make_features(std::string id, const RegionEmbeddings& regions,
                              const std::array<Embedding, 4>& attribute_embeddings);

// Forward cache for one sticker.
struct StickerForward {
    Eigen::MatrixXd projected;                     // n x d
    std::map<Attribute, AttentionResult> attention;
    std::map<Attribute, Eigen::VectorXd> projected_attributes;
    RelationScore score;
    FuseResult fused;
};

StickerForward sticker_forward(const ModelParameters& params, const StickerFeatures& features,
                               const ModelOptions& options);

// Accumulates d L / d params given d L / d representation.
void sticker_backward(const ModelParameters& params, const StickerFeatures& features, const StickerForward& fwd,
                      const Eigen::VectorXd& d_representation, const ModelOptions& options, ModelParameters& grads);

struct TrainingSample {
    Eigen::VectorXd context;  // frozen context embedding (classifier input)
    std::size_t gold_label = 0;
    Eigen::VectorXd query;    // frozen matching query (intention embedding under teacher forcing)
    const StickerFeatures* positive = nullptr;
    std::vector<const StickerFeatures*> negatives;
};

struct SampleLoss {
    double retrieval = 0.0;
    double intention = 0.0;
    double joint = 0.0;
};

// Loss of one sample; when grads is non-null, adds scale * d joint / d params.
SampleLoss sample_loss(const ModelParameters& params, const TrainingSample& sample, const ModelOptions& options,
                       ModelParameters* grads, double scale = 1.0);

// Batch mean of sample losses and gradients (serial reference).
SampleLoss batch_loss(const ModelParameters& params, std::span<const TrainingSample> batch,
                      const ModelOptions& options, ModelParameters* grads);

}  // namespace stickersel
