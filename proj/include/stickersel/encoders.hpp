#pragma once
// Interfaces over the pretrained text encoder, the visual region encoder and
// the attribute describer, with deterministic stubs and cached wrappers.

#include "stickersel/cache.hpp"
#include "stickersel/dataset.hpp"

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace stickersel {

struct Embedding {
    std::vector<float> values;
    std::string source;  // encoder id + version

    std::size_t dim() const { return values.size(); }
    bool operator==(const Embedding&) const = default;
};

// Throws ShapeError when empty, ValidationError when any value is not finite.
void check_embedding(const Embedding& e);

struct RegionEmbeddings {
    std::vector<Embedding> regions;

    std::size_t count() const { return regions.size(); }
    std::size_t dim() const { return regions.empty() ? 0 : regions.front().dim(); }
    bool operator==(const RegionEmbeddings&) const = default;
};

struct TextEncoding {
    Embedding embedding;
    bool truncated = false;
    std::size_t tokens_used = 0;
};

class TextEncoder {
public:
    virtual ~TextEncoder() = default;
    // Over-long input is truncated to max_length() and reported, never rejected.
    virtual TextEncoding encode(std::string_view text) const = 0;
    virtual std::size_t dim() const = 0;
    virtual std::size_t max_length() const = 0;
    virtual std::string id() const = 0;
};

class VisualEncoder {
public:
    virtual ~VisualEncoder() = default;
    // Throws AssetError for undecodable bytes.
    virtual RegionEmbeddings encode(std::string_view image_bytes) const = 0;
    virtual std::size_t dim() const = 0;
    virtual std::size_t regions() const = 0;
    virtual std::string id() const = 0;
};

enum class Attribute { Gesture, Posture, FacialExpression, Verbal };

inline constexpr std::array<Attribute, 4> kAttributes = {Attribute::Gesture, Attribute::Posture,
                                                          Attribute::FacialExpression, Attribute::Verbal};

// "gesture", "posture", "facial expression", "verbal"
std::string_view attribute_name(Attribute a);
// Single-letter code used on the command line: G, P, F, V.
char attribute_code(Attribute a);
Attribute parse_attribute_code(char c);

inline constexpr std::string_view kDefaultAttributePrompt =
    "This is a sticker used in conversation, please provide several keywords to describe the {attribute}.";

// Substitutes the attribute word into a template containing "{attribute}".
std::string attribute_prompt(std::string_view prompt_template, Attribute a);

struct AttributeDescriptions {
    std::array<std::string, 4> text;  // indexed by Attribute

    const std::string& operator[](Attribute a) const { return text[static_cast<std::size_t>(a)]; }
    std::string& operator[](Attribute a) { return text[static_cast<std::size_t>(a)]; }
    bool operator==(const AttributeDescriptions&) const = default;
};

class AttributeDescriber {
public:
    virtual ~AttributeDescriber() = default;
    // `prompt` is the filled-in template for `attribute`.
    virtual std::string describe(const Sticker& sticker, std::string_view image_bytes, Attribute attribute,
                                 std::string_view prompt) const = 0;
    virtual std::string id() const = 0;
};

// ---------------------------------------------------------------------------
// Stubs
// ---------------------------------------------------------------------------

// Each token maps to a seeded Gaussian direction; the text embedding is the
// unit-normalized sum over tokens. Texts sharing tokens are therefore
// correlated, and distinct single tokens are nearly orthogonal.
class StubTextEncoder final : public TextEncoder {
public:
    explicit StubTextEncoder(std::size_t dim = 64, std::uint64_t seed = 13, std::size_t max_length = 256);
    TextEncoding encode(std::string_view text) const override;
    std::size_t dim() const override { return dim_; }
    std::size_t max_length() const override { return max_length_; }
    std::string id() const override;

private:
    std::size_t dim_;
    std::uint64_t seed_;
    std::size_t max_length_;
};

// Region r of an image is a seeded unit vector keyed by (image bytes, r).
class StubVisualEncoder final : public VisualEncoder {
public:
    explicit StubVisualEncoder(std::size_t dim = 64, std::size_t regions = 4, std::uint64_t seed = 17);
    RegionEmbeddings encode(std::string_view image_bytes) const override;
    std::size_t dim() const override { return dim_; }
    std::size_t regions() const override { return regions_; }
    std::string id() const override;

private:
    std::size_t dim_;
    std::size_t regions_;
    std::uint64_t seed_;
};

// Keyword picks seeded by (image bytes, attribute). The verbal prompt echoes the
// sticker's caption, or "<none>" for uncaptioned stickers.
class StubDescriber final : public AttributeDescriber {
public:
    explicit StubDescriber(std::uint64_t seed = 19) : seed_(seed) {}
    std::string describe(const Sticker& sticker, std::string_view image_bytes, Attribute attribute,
                         std::string_view prompt) const override;
    std::string id() const override;

private:
    std::uint64_t seed_;
};

// Seeded standard-normal vector scaled to unit length.
std::vector<float> seeded_unit_vector(std::uint64_t seed, std::size_t dim);

// ---------------------------------------------------------------------------
// Cached wrappers
// ---------------------------------------------------------------------------

class CachedTextEncoder final : public TextEncoder {
public:
    CachedTextEncoder(std::shared_ptr<const TextEncoder> inner, std::shared_ptr<EmbeddingCache> cache);
    TextEncoding encode(std::string_view text) const override;
    std::size_t dim() const override { return inner_->dim(); }
    std::size_t max_length() const override { return inner_->max_length(); }
    std::string id() const override { return inner_->id(); }

private:
    std::shared_ptr<const TextEncoder> inner_;
    std::shared_ptr<EmbeddingCache> cache_;
};

class CachedVisualEncoder final : public VisualEncoder {
public:
    CachedVisualEncoder(std::shared_ptr<const VisualEncoder> inner, std::shared_ptr<EmbeddingCache> cache);
    RegionEmbeddings encode(std::string_view image_bytes) const override;
    std::size_t dim() const override { return inner_->dim(); }
    std::size_t regions() const override { return inner_->regions(); }
    std::string id() const override { return inner_->id(); }

private:
    std::shared_ptr<const VisualEncoder> inner_;
    std::shared_ptr<EmbeddingCache> cache_;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

// Checks the shape contract (declared dim, finite values) on the way out.
TextEncoding encode_text(std::string_view text, const TextEncoder& encoder);
RegionEmbeddings encode_sticker(const Sticker& sticker, const VisualEncoder& encoder);

// Runs the four attribute prompts. Results are cached by
// (sticker id, describer id, prompt) when a cache is given. A backend failure
// is rethrown as BackendError naming the attribute prompt.
AttributeDescriptions describe_attributes(const Sticker& sticker, const AttributeDescriber& describer,
                                          StringCache* cache = nullptr,
                                          std::string_view prompt_template = kDefaultAttributePrompt);

}  // namespace stickersel
