#include "stickersel/encoders.hpp"

#include "stickersel/context.hpp"
#include "stickersel/error.hpp"
#include "stickersel/hashing.hpp"
#include "stickersel/image.hpp"
#include "stickersel/text.hpp"

#include <opencv2/imgcodecs.hpp>

#include <cmath>
#include <random>

namespace stickersel {

void check_embedding(const Embedding& e) {
    if (e.values.empty()) throw ShapeError("empty embedding from " + e.source);
    for (float v : e.values) {
        if (!std::isfinite(v)) throw ValidationError("non-finite embedding value from " + e.source);
    }
}

std::string_view attribute_name(Attribute a) {
    switch (a) {
        case Attribute::Gesture: return "gesture";
        case Attribute::Posture: return "posture";
        case Attribute::FacialExpression: return "facial expression";
        case Attribute::Verbal: return "verbal";
    }
    return "gesture";
}

char attribute_code(Attribute a) {
    switch (a) {
        case Attribute::Gesture: return 'G';
        case Attribute::Posture: return 'P';
        case Attribute::FacialExpression: return 'F';
        case Attribute::Verbal: return 'V';
    }
    return 'G';
}

Attribute parse_attribute_code(char c) {
    switch (c) {
        case 'G': case 'g': return Attribute::Gesture;
        case 'P': case 'p': return Attribute::Posture;
        case 'F': case 'f': return Attribute::FacialExpression;
        case 'V': case 'v': return Attribute::Verbal;
        default: break;
    }
    throw ConfigError(std::string("unknown attribute code '") + c + "' (expected G, P, F or V)");
}

std::string attribute_prompt(std::string_view prompt_template, Attribute a) {
    static constexpr std::string_view kSlot = "{attribute}";
    std::string out(prompt_template);
    const auto pos = out.find(kSlot);
    if (pos == std::string::npos) throw ConfigError("attribute prompt template lacks {attribute}");
    out.replace(pos, kSlot.size(), attribute_name(a));
    return out;
}

std::vector<float> seeded_unit_vector(std::uint64_t seed, std::size_t dim) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> v(dim);
    double norm = 0.0;
    for (auto& x : v) {
        x = normal(rng);
        norm += x * x;
    }
    norm = std::sqrt(norm);
    std::vector<float> out(dim);
    for (std::size_t i = 0; i < dim; ++i) out[i] = static_cast<float>(v[i] / norm);
    return out;
}

// ---------------------------------------------------------------------------
// StubTextEncoder
// ---------------------------------------------------------------------------

StubTextEncoder::StubTextEncoder(std::size_t dim, std::uint64_t seed, std::size_t max_length)
    : dim_(dim), seed_(seed), max_length_(max_length) {
    if (dim_ == 0) throw ConfigError("text encoder dim must be positive");
    if (max_length_ == 0) throw ConfigError("text encoder max_length must be positive");
}

std::string StubTextEncoder::id() const {
    return "stub-text/v1/dim=" + std::to_string(dim_) + "/seed=" + std::to_string(seed_);
}

TextEncoding StubTextEncoder::encode(std::string_view text) const {
    auto tokens = tokenize(text);
    if (tokens.empty()) tokens.emplace_back(text);  // punctuation-only input still gets a direction
    TextEncoding out;
    if (tokens.size() > max_length_) {
        tokens.resize(max_length_);
        out.truncated = true;
    }
    out.tokens_used = tokens.size();
    std::vector<double> acc(dim_, 0.0);
    for (const auto& tok : tokens) {
        const auto v = seeded_unit_vector(stable_hash64(KeyBuilder().add(seed_).add(tok).bytes()), dim_);
        for (std::size_t i = 0; i < dim_; ++i) acc[i] += v[i];
    }
    double norm = 0.0;
    for (double x : acc) norm += x * x;
    norm = std::sqrt(norm);
    out.embedding.source = id();
    out.embedding.values.resize(dim_);
    for (std::size_t i = 0; i < dim_; ++i) out.embedding.values[i] = static_cast<float>(norm > 0 ? acc[i] / norm : 0.0);
    return out;
}

// ---------------------------------------------------------------------------
// StubVisualEncoder
// ---------------------------------------------------------------------------

StubVisualEncoder::StubVisualEncoder(std::size_t dim, std::size_t regions, std::uint64_t seed)
    : dim_(dim), regions_(regions), seed_(seed) {
    if (dim_ == 0 || regions_ == 0) throw ConfigError("visual encoder needs positive dim and region count");
}

std::string StubVisualEncoder::id() const {
    return "stub-visual/v1/dim=" + std::to_string(dim_) + "/regions=" + std::to_string(regions_) +
           "/seed=" + std::to_string(seed_);
}

namespace {

void require_decodable(std::string_view bytes) {
    std::vector<unsigned char> buf(bytes.begin(), bytes.end());
    if (buf.empty() || cv::imdecode(buf, cv::IMREAD_UNCHANGED).empty()) {
        throw AssetError("undecodable image data");
    }
}

}  // namespace

RegionEmbeddings StubVisualEncoder::encode(std::string_view image_bytes) const {
    require_decodable(image_bytes);
    RegionEmbeddings out;
    const auto content = sha256_hex(image_bytes);
    for (std::size_t r = 0; r < regions_; ++r) {
        Embedding e;
        e.source = id();
        e.values = seeded_unit_vector(stable_hash64(KeyBuilder().add(seed_).add(content).add(r).bytes()), dim_);
        out.regions.push_back(std::move(e));
    }
    return out;
}

// ---------------------------------------------------------------------------
// StubDescriber
// ---------------------------------------------------------------------------

namespace {

const std::vector<std::string_view>& keywords(Attribute a) {
    static const std::vector<std::string_view> gesture = {
        "waving", "thumbs up", "clapping", "pointing", "hands on hips", "covering face", "shrugging", "heart hands"};
    static const std::vector<std::string_view> posture = {
        "standing", "sitting", "lying down", "leaning forward", "jumping", "bowing", "curled up"};
    static const std::vector<std::string_view> face = {
        "smiling", "crying", "frowning", "wide eyes", "laughing", "blushing", "pouting", "sleepy"};
    switch (a) {
        case Attribute::Gesture: return gesture;
        case Attribute::Posture: return posture;
        case Attribute::FacialExpression:
        case Attribute::Verbal: return face;
    }
    return face;
}

}  // namespace

std::string StubDescriber::describe(const Sticker& sticker, std::string_view image_bytes, Attribute attribute,
                                    std::string_view /*prompt*/) const {
    if (attribute == Attribute::Verbal) {
        if (sticker.verbal_text && !is_blank(*sticker.verbal_text)) return *sticker.verbal_text;
        return std::string(kNoneText);
    }
    const auto& words = keywords(attribute);
    auto h = stable_hash64(
        KeyBuilder().add(seed_).add(sha256_hex(image_bytes)).add(attribute_name(attribute)).bytes());
    const auto first = h % words.size();
    const auto second = (first + 1 + (h >> 16) % (words.size() - 1)) % words.size();
    return std::string(words[first]) + ", " + std::string(words[second]);
}

std::string StubDescriber::id() const { return "stub-describer/v1/seed=" + std::to_string(seed_); }

// ---------------------------------------------------------------------------
// Cached wrappers
// ---------------------------------------------------------------------------

CachedTextEncoder::CachedTextEncoder(std::shared_ptr<const TextEncoder> inner, std::shared_ptr<EmbeddingCache> cache)
    : inner_(std::move(inner)), cache_(std::move(cache)) {
    if (!inner_) throw ConfigError("cached text encoder needs a backend");
    if (!cache_) cache_ = std::make_shared<EmbeddingCache>();
}

TextEncoding CachedTextEncoder::encode(std::string_view text) const {
    const auto key = KeyBuilder().add("text").add(inner_->id()).add(text).hex();
    if (auto hit = cache_->get(key)) {
        TextEncoding out;
        out.embedding.values = std::move(*hit);
        out.embedding.source = inner_->id();
        // Truncation is re-derived from the shared token rule on a hit.
        const auto n = count_tokens(text);
        out.truncated = n > inner_->max_length();
        out.tokens_used = std::min(n, inner_->max_length());
        return out;
    }
    auto out = inner_->encode(text);
    cache_->put(key, out.embedding.values);
    return out;
}

CachedVisualEncoder::CachedVisualEncoder(std::shared_ptr<const VisualEncoder> inner,
                                         std::shared_ptr<EmbeddingCache> cache)
    : inner_(std::move(inner)), cache_(std::move(cache)) {
    if (!inner_) throw ConfigError("cached visual encoder needs a backend");
    if (!cache_) cache_ = std::make_shared<EmbeddingCache>();
}

RegionEmbeddings CachedVisualEncoder::encode(std::string_view image_bytes) const {
    const auto base = KeyBuilder().add("visual").add(inner_->id()).add(sha256_hex(image_bytes)).hex();
    const auto count_key = base + "#count";
    if (auto count = cache_->get(count_key); count && count->size() == 1) {
        RegionEmbeddings out;
        const auto n = static_cast<std::size_t>((*count)[0]);
        for (std::size_t r = 0; r < n; ++r) {
            auto v = cache_->get(base + "#" + std::to_string(r));
            if (!v) {
                out.regions.clear();
                break;
            }
            out.regions.push_back(Embedding{std::move(*v), inner_->id()});
        }
        if (out.regions.size() == n) return out;
    }
    auto out = inner_->encode(image_bytes);
    for (std::size_t r = 0; r < out.regions.size(); ++r) {
        cache_->put(base + "#" + std::to_string(r), out.regions[r].values);
    }
    cache_->put(count_key, {static_cast<float>(out.regions.size())});
    return out;
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

TextEncoding encode_text(std::string_view text, const TextEncoder& encoder) {
    auto out = encoder.encode(text);
    check_embedding(out.embedding);
    if (out.embedding.dim() != encoder.dim()) {
        throw ShapeError("text encoder " + encoder.id() + " returned dim " + std::to_string(out.embedding.dim()) +
                         ", declared " + std::to_string(encoder.dim()));
    }
    return out;
}

RegionEmbeddings encode_sticker(const Sticker& sticker, const VisualEncoder& encoder) {
    std::string bytes;
    try {
        bytes = read_bytes(sticker.image_ref);
    } catch (const AssetError& e) {
        throw AssetError("sticker '" + sticker.id + "': " + e.what());
    }
    RegionEmbeddings out;
    try {
        out = encoder.encode(bytes);
    } catch (const AssetError& e) {
        throw AssetError("sticker '" + sticker.id + "' (" + sticker.image_ref.string() + "): " + e.what());
    }
    if (out.regions.empty()) throw ShapeError("visual encoder returned no regions for '" + sticker.id + "'");
    for (const auto& r : out.regions) {
        check_embedding(r);
        if (r.dim() != encoder.dim()) throw ShapeError("visual encoder returned a region of the wrong dim");
    }
    return out;
}

AttributeDescriptions describe_attributes(const Sticker& sticker, const AttributeDescriber& describer,
                                          StringCache* cache, std::string_view prompt_template) {
    AttributeDescriptions out;
    std::string bytes;
    for (auto a : kAttributes) {
        const auto prompt = attribute_prompt(prompt_template, a);
        const auto key = KeyBuilder().add("describe").add(sticker.id).add(describer.id()).add(prompt).hex();
        if (cache) {
            if (auto hit = cache->get(key)) {
                out[a] = *hit;
                continue;
            }
        }
        if (bytes.empty()) bytes = read_bytes(sticker.image_ref);
        std::string text;
        try {
            text = describer.describe(sticker, bytes, a, prompt);
        } catch (const std::exception& e) {
            throw BackendError("attribute describer failed on the \"" + std::string(attribute_name(a)) +
                               "\" prompt for sticker '" + sticker.id + "': " + e.what());
        }
        if (is_blank(text)) text = std::string(kNoneText);
        if (cache) cache->put(key, text);
        out[a] = std::move(text);
    }
    return out;
}

}  // namespace stickersel
