#pragma once
// Sticker featurization, the precomputed sticker index, ranking, and the
// end-to-end retrieval pipeline (knowledge -> context -> intention -> match).

#include "stickersel/checkpoint.hpp"
#include "stickersel/config.hpp"
#include "stickersel/context.hpp"
#include "stickersel/dataset.hpp"
#include "stickersel/model.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace stickersel {

// Frozen per-sticker inputs plus the descriptions they were derived from.
struct StickerAsset {
    StickerFeatures features;
    AttributeDescriptions descriptions;
};

StickerAsset featurize_sticker(const Sticker& sticker, const Backends& backends);

// One asset per sticker, ordered by sticker id.
std::vector<StickerAsset> featurize_stickers(const std::map<std::string, Sticker>& stickers,
                                             const Backends& backends);
std::vector<StickerFeatures> features_of(const std::vector<StickerAsset>& assets);

inline constexpr std::uint16_t kIndexFormatVersion = 1;

struct StickerIndex {
    std::string model_version;
    FuseMode fuse_mode = FuseMode::PerRegionWeighted;
    std::vector<std::string> ids;  // sorted
    Eigen::MatrixXd embeddings;    // one H^R per row, aligned with ids

    std::size_t size() const { return ids.size(); }
    std::size_t dim() const { return static_cast<std::size_t>(embeddings.cols()); }
    std::optional<std::size_t> find(const std::string& id) const;
};

StickerIndex build_index(const ModelParameters& params, std::span<const StickerFeatures> stickers,
                         const ModelOptions& options, const std::string& model_version);

// Binary layout: "STKIDX", u16 version, model version, fuse mode, u32 count,
// u32 dim, then per entry the id and dim little-endian f64 values.
void save_index(const StickerIndex& index, const std::filesystem::path& path);
StickerIndex load_index(const std::filesystem::path& path);

// Throws VersionError when the index was not built from this checkpoint.
void check_compatible(const StickerIndex& index, const Checkpoint& checkpoint);

// Per-sticker relation scores for heat-map rendering.
nlohmann::json relation_scores_json(const ModelParameters& params, std::span<const StickerFeatures> stickers,
                                    const ModelOptions& options);

struct RankedEntry {
    std::string sticker_id;
    double score = 0.0;
    bool operator==(const RankedEntry&) const = default;
};

struct RankedResult {
    std::string query_id;
    std::vector<RankedEntry> entries;  // score descending, ties by sticker id
    bool clamped = false;              // k exceeded the index size
};

// Top-k of `query` against the index. k is clamped to the index size.
RankedResult rank(const Eigen::VectorXd& query, const StickerIndex& index, std::size_t k, std::string query_id = {});

struct QueryEncoding {
    std::string context_text;  // rendered, windowed context
    std::string knowledge;     // assembled commonsense ("" when disabled)
    Eigen::VectorXd context;   // H^T
    IntentionPrediction prediction;
    std::string predicted_label;
    Eigen::VectorXd query;     // the vector matched against the index
};

// Frozen-encoder front end shared by training, evaluation and serving.
class QueryEncoder {
public:
    QueryEncoder(const PipelineConfig& config, const Backends& backends, std::vector<std::string> taxonomy,
                 CaptionLookup captions = {});

    // H^T for a conversation. window 0 uses the configured context window.
    Eigen::VectorXd context_embedding(const Conversation& conversation, std::size_t window = 0,
                                      std::string* context_text = nullptr, std::string* knowledge = nullptr) const;

    // Embedding of a taxonomy label (cached per label).
    const Eigen::VectorXd& label_embedding(std::size_t label) const;

    // Matching query from H^T and the label chosen for H^Y.
    Eigen::VectorXd query_for(const Eigen::VectorXd& context, std::size_t label) const;

    QueryEncoding encode(const Conversation& conversation, const IntentionHead& head, std::size_t window = 0) const;

    const std::vector<std::string>& taxonomy() const { return taxonomy_; }
    const PipelineConfig& config() const { return config_; }

private:
    PipelineConfig config_;
    Backends backends_;
    std::vector<std::string> taxonomy_;
    CaptionLookup captions_;
    std::vector<Eigen::VectorXd> label_embeddings_;
};

// Loaded checkpoint + index + backends, ready to answer queries.
class Retriever {
public:
    Retriever(Checkpoint checkpoint, StickerIndex index, const Backends& backends, CaptionLookup captions = {});

    RankedResult retrieve(const Conversation& conversation, std::size_t k, QueryEncoding* encoding = nullptr,
                          std::size_t window = 0) const;

    const Checkpoint& checkpoint() const { return checkpoint_; }
    const StickerIndex& index() const { return index_; }
    const QueryEncoder& encoder() const { return encoder_; }

private:
    Checkpoint checkpoint_;
    StickerIndex index_;
    QueryEncoder encoder_;
};

nlohmann::json ranked_to_json(const RankedResult& r);

}  // namespace stickersel
