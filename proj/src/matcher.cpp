#include "stickersel/matcher.hpp"

#include "stickersel/cache.hpp"
#include "stickersel/error.hpp"
#include "stickersel/kernels.hpp"
#include "stickersel/knowledge.hpp"
#include "stickersel/scoring.hpp"

#include <algorithm>
#include <fstream>

namespace stickersel {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Featurization
// ---------------------------------------------------------------------------

StickerAsset featurize_sticker(const Sticker& sticker, const Backends& backends) {
    const auto regions = encode_sticker(sticker, *backends.visual);
    StickerAsset asset;
    asset.descriptions =
        describe_attributes(sticker, *backends.describer, backends.describe_cache.get(), backends.attribute_prompt);
    std::array<Embedding, 4> attrs;
    for (auto a : kAttributes) {
        attrs[static_cast<std::size_t>(a)] = encode_text(asset.descriptions[a], *backends.text).embedding;
    }
    asset.features = make_features(sticker.id, regions, attrs);
    return asset;
}

std::vector<StickerAsset> featurize_stickers(const std::map<std::string, Sticker>& stickers,
                                             const Backends& backends) {
    std::vector<StickerAsset> out;
    out.reserve(stickers.size());
    for (const auto& [id, s] : stickers) out.push_back(featurize_sticker(s, backends));
    return out;
}

std::vector<StickerFeatures> features_of(const std::vector<StickerAsset>& assets) {
    std::vector<StickerFeatures> out;
    out.reserve(assets.size());
    for (const auto& a : assets) out.push_back(a.features);
    return out;
}

// ---------------------------------------------------------------------------
// Index
// ---------------------------------------------------------------------------

std::optional<std::size_t> StickerIndex::find(const std::string& id) const {
    auto it = std::lower_bound(ids.begin(), ids.end(), id);
    if (it == ids.end() || *it != id) return std::nullopt;
    return static_cast<std::size_t>(it - ids.begin());
}

StickerIndex build_index(const ModelParameters& params, std::span<const StickerFeatures> stickers,
                         const ModelOptions& options, const std::string& model_version) {
    std::vector<std::size_t> order(stickers.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return stickers[a].id < stickers[b].id; });
    std::vector<StickerFeatures> sorted;
    sorted.reserve(order.size());
    for (auto i : order) {
        if (!sorted.empty() && sorted.back().id == stickers[i].id) {
            throw IntegrityError("duplicate sticker id '" + stickers[i].id + "' in index input");
        }
        sorted.push_back(stickers[i]);
    }

    const auto outputs = kernels::omp::sticker_outputs(params, sorted, options);
    StickerIndex index;
    index.model_version = model_version;
    index.fuse_mode = options.fuse_mode;
    index.embeddings.resize(static_cast<Eigen::Index>(sorted.size()), static_cast<Eigen::Index>(params.fusion.d()));
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        index.ids.push_back(sorted[i].id);
        index.embeddings.row(static_cast<Eigen::Index>(i)) = outputs[i].representation.transpose();
    }
    return index;
}

namespace {
constexpr char kIndexMagic[6] = {'S', 'T', 'K', 'I', 'D', 'X'};
}

void save_index(const StickerIndex& index, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw LoadError("cannot write index: " + path.string());
    out.write(kIndexMagic, sizeof kIndexMagic);
    write_u16(out, kIndexFormatVersion);
    write_str(out, index.model_version);
    write_str(out, to_string(index.fuse_mode));
    write_u32(out, static_cast<std::uint32_t>(index.size()));
    write_u32(out, static_cast<std::uint32_t>(index.dim()));
    for (std::size_t i = 0; i < index.size(); ++i) {
        write_str(out, index.ids[i]);
        for (Eigen::Index c = 0; c < index.embeddings.cols(); ++c) {
            write_f64(out, index.embeddings(static_cast<Eigen::Index>(i), c));
        }
    }
    if (!out) throw LoadError("write failed: " + path.string());
}

StickerIndex load_index(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError("cannot read index: " + path.string());
    char magic[sizeof kIndexMagic];
    in.read(magic, sizeof magic);
    if (!in || !std::equal(magic, magic + sizeof magic, kIndexMagic)) throw LoadError("not an index: " + path.string());
    try {
        const auto version = read_u16(in);
        if (version != kIndexFormatVersion) {
            throw VersionError("index format version " + std::to_string(version) + ", expected " +
                               std::to_string(kIndexFormatVersion));
        }
        StickerIndex index;
        index.model_version = read_str(in);
        index.fuse_mode = parse_fuse_mode(read_str(in));
        const auto n = read_u32(in);
        const auto dim = read_u32(in);
        index.embeddings.resize(n, dim);
        index.ids.reserve(n);
        for (std::uint32_t i = 0; i < n; ++i) {
            index.ids.push_back(read_str(in));
            for (std::uint32_t c = 0; c < dim; ++c) index.embeddings(i, c) = read_f64(in);
        }
        if (!std::is_sorted(index.ids.begin(), index.ids.end())) throw LoadError("index ids are not sorted");
        return index;
    } catch (const VersionError&) {
        throw;
    } catch (const Error& e) {
        throw LoadError("truncated or malformed index " + path.string() + ": " + e.what());
    }
}

void check_compatible(const StickerIndex& index, const Checkpoint& checkpoint) {
    const auto v = checkpoint.model_version();
    if (index.model_version != v) {
        throw VersionError("index built for model " + index.model_version + ", checkpoint is " + v);
    }
    if (index.fuse_mode != checkpoint.config.model.fuse_mode) {
        throw VersionError("index fuse mode " + to_string(index.fuse_mode) + " differs from checkpoint");
    }
}

json relation_scores_json(const ModelParameters& params, std::span<const StickerFeatures> stickers,
                          const ModelOptions& options) {
    const auto outputs = kernels::omp::sticker_outputs(params, stickers, options);
    json out = json::array();
    for (std::size_t i = 0; i < stickers.size(); ++i) {
        const auto& s = outputs[i].score;
        std::vector<double> per_region(s.per_region.data(), s.per_region.data() + s.per_region.size());
        const double total = s.per_region.sum();
        std::vector<double> normalized = per_region;
        for (auto& w : normalized) w = total > 0.0 ? w / total : 1.0 / static_cast<double>(normalized.size());
        out.push_back({{"sticker_id", stickers[i].id},
                       {"per_region", per_region},
                       {"normalized", normalized},
                       {"pooled", s.pooled}});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Ranking
// ---------------------------------------------------------------------------

RankedResult rank(const Eigen::VectorXd& query, const StickerIndex& index, std::size_t k, std::string query_id) {
    if (index.size() == 0) throw DomainError("cannot rank against an empty index");
    if (k == 0) throw RangeError("k must be positive");
    if (static_cast<std::size_t>(query.size()) != index.dim()) {
        throw ShapeError("query dim " + std::to_string(query.size()) + " != index dim " +
                         std::to_string(index.dim()));
    }
    const auto scores = kernels::omp::score_rows(query, index.embeddings);
    std::vector<std::size_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    // ids are sorted, so breaking ties by position breaks them by id.
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });

    RankedResult r;
    r.query_id = std::move(query_id);
    r.clamped = k > index.size();
    const auto n = std::min(k, index.size());
    for (std::size_t i = 0; i < n; ++i) r.entries.push_back({index.ids[order[i]], scores[order[i]]});
    return r;
}

json ranked_to_json(const RankedResult& r) {
    json entries = json::array();
    for (const auto& e : r.entries) entries.push_back({{"sticker_id", e.sticker_id}, {"score", e.score}});
    return {{"query_id", r.query_id}, {"clamped", r.clamped}, {"ranking", entries}};
}

// ---------------------------------------------------------------------------
// Query encoding
// ---------------------------------------------------------------------------

QueryEncoder::QueryEncoder(const PipelineConfig& config, const Backends& backends, std::vector<std::string> taxonomy,
                           CaptionLookup captions)
    : config_(config), backends_(backends), taxonomy_(std::move(taxonomy)), captions_(std::move(captions)) {
    if (taxonomy_.empty()) throw TaxonomyError("empty taxonomy");
    for (const auto& label : taxonomy_) {
        label_embeddings_.push_back(to_vector(encode_intention(label, taxonomy_, *backends_.text)));
    }
}

Eigen::VectorXd QueryEncoder::context_embedding(const Conversation& conversation, std::size_t window,
                                                std::string* context_text, std::string* knowledge) const {
    const auto w = window == 0 ? config_.training.context_window : window;
    const auto rendered = render_context(conversation, captions_, w);
    std::string know;
    if (config_.model.use_knowledge) know = infer_knowledge(rendered, *backends_.generator).assembled;
    const auto enc = encode_context(conversation, know, *backends_.text, captions_, w);
    if (context_text) *context_text = rendered;
    if (knowledge) *knowledge = know;
    return to_vector(enc.embedding);
}

const Eigen::VectorXd& QueryEncoder::label_embedding(std::size_t label) const {
    if (label >= label_embeddings_.size()) throw RangeError("label index " + std::to_string(label) + " out of range");
    return label_embeddings_[label];
}

Eigen::VectorXd QueryEncoder::query_for(const Eigen::VectorXd& context, std::size_t label) const {
    if (!config_.model.use_intention) return context;
    const auto& y = label_embedding(label);
    if (!config_.model.match_with_context) return y;
    Eigen::VectorXd q(context.size() + y.size());
    q << context, y;
    return q;
}

QueryEncoding QueryEncoder::encode(const Conversation& conversation, const IntentionHead& head,
                                   std::size_t window) const {
    QueryEncoding e;
    e.context = context_embedding(conversation, window, &e.context_text, &e.knowledge);
    e.prediction = predict_intention(e.context, head);
    const auto label = intention_for_embedding(e.prediction, std::nullopt, IntentionMode::Inference);
    e.predicted_label = taxonomy_[label];
    e.query = query_for(e.context, label);
    return e;
}

Retriever::Retriever(Checkpoint checkpoint, StickerIndex index, const Backends& backends, CaptionLookup captions)
    : checkpoint_(std::move(checkpoint)),
      index_(std::move(index)),
      encoder_(checkpoint_.config, backends, checkpoint_.taxonomy, std::move(captions)) {
    check_compatible(index_, checkpoint_);
}

RankedResult Retriever::retrieve(const Conversation& conversation, std::size_t k, QueryEncoding* encoding,
                                 std::size_t window) const {
    if (index_.size() == 0) throw DomainError("cannot retrieve from an empty index");
    auto e = encoder_.encode(conversation, checkpoint_.params.intention, window);
    auto r = rank(e.query, index_, k, conversation.id);
    if (encoding) *encoding = std::move(e);
    return r;
}

}  // namespace stickersel
