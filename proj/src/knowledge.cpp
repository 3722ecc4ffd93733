#include "stickersel/knowledge.hpp"

#include "stickersel/error.hpp"
#include "stickersel/hashing.hpp"
#include "stickersel/text.hpp"

#include <vector>

namespace stickersel {

std::string_view relation_name(RelationType r) {
    switch (r) {
        case RelationType::XIntent: return "xIntent";
        case RelationType::XNeed: return "xNeed";
        case RelationType::XWant: return "xWant";
        case RelationType::XEffect: return "xEffect";
        case RelationType::XReact: return "xReact";
    }
    return "xIntent";
}

RelationType parse_relation(std::string_view name) {
    for (auto r : kRelations) {
        if (relation_name(r) == name) return r;
    }
    throw ValidationError("unknown relation '" + std::string(name) + "'");
}

namespace {

const std::vector<std::string_view>& phrases(RelationType r) {
    static const std::vector<std::string_view> intent = {
        "to share feelings", "to make a joke", "to ask for help", "to express thanks",
        "to show support", "to complain", "to tease a friend", "to agree"};
    static const std::vector<std::string_view> need = {
        "to read the message", "to think of a reply", "to find the right words", "to understand the situation",
        "to open the chat", "to know the news"};
    static const std::vector<std::string_view> want = {
        "to get a reply", "to cheer up", "to change the topic", "to end the chat",
        "to be comforted", "to celebrate"};
    static const std::vector<std::string_view> effect = {
        "gets a reply", "laughs", "feels understood", "is ignored", "smiles", "sighs"};
    static const std::vector<std::string_view> react = {
        "happy", "sad", "awkward", "relieved", "annoyed", "surprised", "grateful"};
    switch (r) {
        case RelationType::XIntent: return intent;
        case RelationType::XNeed: return need;
        case RelationType::XWant: return want;
        case RelationType::XEffect: return effect;
        case RelationType::XReact: return react;
    }
    return intent;
}

}  // namespace

std::string StubGenerator::generate(std::string_view context_text, RelationType relation) const {
    const auto& options = phrases(relation);
    const auto h = stable_hash64(KeyBuilder().add(seed_).add(relation_name(relation)).add(context_text).bytes());
    return std::string(options[h % options.size()]);
}

std::string StubGenerator::id() const { return "stub-commonsense/v1/seed=" + std::to_string(seed_); }

CachedGenerator::CachedGenerator(std::shared_ptr<const CommonsenseGenerator> inner,
                                 std::shared_ptr<StringCache> cache)
    : inner_(std::move(inner)), cache_(std::move(cache)) {
    if (!inner_) throw ConfigError("cached generator needs a backend");
    if (!cache_) cache_ = std::make_shared<StringCache>();
}

std::string CachedGenerator::generate(std::string_view context_text, RelationType relation) const {
    const auto key = KeyBuilder().add("knowledge").add(context_text).add(relation_name(relation)).add(inner_->id()).hex();
    if (auto hit = cache_->get(key)) return *hit;
    auto value = inner_->generate(context_text, relation);
    cache_->put(key, value);
    return value;
}

std::string infer_relation(std::string_view context_text, RelationType relation,
                           const CommonsenseGenerator& generator) {
    if (is_blank(context_text)) return std::string(kNoneText);
    std::string out;
    try {
        out = generator.generate(context_text, relation);
    } catch (const std::exception& e) {
        throw BackendError("commonsense generation failed for " + std::string(relation_name(relation)) + ": " +
                           e.what());
    }
    if (is_blank(out)) return std::string(kNoneText);
    return out;
}

std::string infer_relation(const Conversation& conversation, RelationType relation,
                           const CommonsenseGenerator& generator, const CaptionLookup& captions,
                           std::size_t window) {
    return infer_relation(render_context(conversation, captions, window), relation, generator);
}

std::string assemble_knowledge(const std::map<RelationType, std::string>& per_relation) {
    if (per_relation.size() != kRelations.size()) {
        throw ArityError("knowledge needs all 5 relations, got " + std::to_string(per_relation.size()));
    }
    std::string out;
    for (auto r : kRelations) {
        auto it = per_relation.find(r);
        if (it == per_relation.end()) throw ArityError("missing relation " + std::string(relation_name(r)));
        if (!out.empty()) out += "; ";
        out += relation_name(r);
        out += ": ";
        out += it->second;
    }
    return out;
}

CommonsenseBundle infer_knowledge(std::string_view context_text, const CommonsenseGenerator& generator) {
    CommonsenseBundle b;
    for (auto r : kRelations) b.per_relation[r] = infer_relation(context_text, r, generator);
    b.assembled = assemble_knowledge(b.per_relation);
    return b;
}

}  // namespace stickersel
