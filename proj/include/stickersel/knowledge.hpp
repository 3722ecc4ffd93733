#pragma once
// Commonsense inferences over the five social-interaction relations and the
// assembled knowledge string that is appended to the conversation context.

#include "stickersel/cache.hpp"
#include "stickersel/context.hpp"

#include <array>
#include <map>
#include <memory>
#include <string>
#include <string_view>

namespace stickersel {

enum class RelationType { XIntent, XNeed, XWant, XEffect, XReact };

inline constexpr std::array<RelationType, 5> kRelations = {
    RelationType::XIntent, RelationType::XNeed, RelationType::XWant, RelationType::XEffect, RelationType::XReact};

std::string_view relation_name(RelationType r);
RelationType parse_relation(std::string_view name);

class CommonsenseGenerator {
public:
    virtual ~CommonsenseGenerator() = default;
    // Throws BackendError on failure.
    virtual std::string generate(std::string_view context_text, RelationType relation) const = 0;
    // Identity that enters cache keys; must change when outputs may change.
    virtual std::string id() const = 0;
};

// Hash-seeded templates. Deterministic in (seed, text, relation).
class StubGenerator final : public CommonsenseGenerator {
public:
    explicit StubGenerator(std::uint64_t seed = 7) : seed_(seed) {}
    std::string generate(std::string_view context_text, RelationType relation) const override;
    std::string id() const override;

private:
    std::uint64_t seed_;
};

// Content-addressed cache in front of any generator. Keys hash
// (context text, relation, generator id).
class CachedGenerator final : public CommonsenseGenerator {
public:
    CachedGenerator(std::shared_ptr<const CommonsenseGenerator> inner, std::shared_ptr<StringCache> cache);
    std::string generate(std::string_view context_text, RelationType relation) const override;
    std::string id() const override { return inner_->id(); }

    const StringCache& cache() const { return *cache_; }

private:
    std::shared_ptr<const CommonsenseGenerator> inner_;
    std::shared_ptr<StringCache> cache_;
};

struct CommonsenseBundle {
    std::map<RelationType, std::string> per_relation;
    std::string assembled;
};

// Blank context yields the literal "<none>" without calling the generator.
// Generator failures are rethrown as BackendError naming the relation.
std::string infer_relation(std::string_view context_text, RelationType relation,
                           const CommonsenseGenerator& generator);
std::string infer_relation(const Conversation& conversation, RelationType relation,
                           const CommonsenseGenerator& generator, const CaptionLookup& captions = {},
                           std::size_t window = 0);

// "xIntent: a; xNeed: b; xWant: c; xEffect: d; xReact: e" in canonical order.
// Throws ArityError unless all five relations are present.
std::string assemble_knowledge(const std::map<RelationType, std::string>& per_relation);

CommonsenseBundle infer_knowledge(std::string_view context_text, const CommonsenseGenerator& generator);

}  // namespace stickersel
