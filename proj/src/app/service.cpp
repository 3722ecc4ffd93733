#include "stickersel/app/service.hpp"

#include "stickersel/error.hpp"
#include "stickersel/image.hpp"

#include <chrono>
#include <random>

namespace stickersel::app {

using nlohmann::json;

namespace {

std::int64_t now_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
        .count();
}

std::string new_session_id() {
    static std::mutex mu;
    static std::mt19937_64 rng{std::random_device{}()};
    std::lock_guard lock(mu);
    char buf[33];
    std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(rng()),
                  static_cast<unsigned long long>(rng()));
    return buf;
}

std::string mime_for(const std::filesystem::path& p) {
    auto ext = p.extension().string();
    for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (ext == ".png") return "image/png";
    if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
    if (ext == ".gif") return "image/gif";
    if (ext == ".webp") return "image/webp";
    return "application/octet-stream";
}

}  // namespace

json to_json(const SuggestionResponse& r) {
    json items = json::array();
    for (const auto& s : r.suggestions) {
        items.push_back({{"sticker_id", s.sticker_id},
                         {"score", s.score},
                         {"intention_label", s.intention_label},
                         {"image_url", s.image_url}});
    }
    return {{"session_id", r.session_id},
            {"context_version", r.context_version},
            {"predicted_label", r.predicted_label},
            {"clamped", r.clamped},
            {"context_text", r.context_text},
            {"suggestions", items}};
}

json to_json(const SessionRecord& r) {
    return {{"id", r.id},
            {"index_id", r.index_id},
            {"checkpoint_id", r.checkpoint_id},
            {"created_at", r.created_at},
            {"updated_at", r.updated_at},
            {"conversation", json::parse(conversation_to_json(r.conversation))}};
}

RetrievalService::RetrievalService(Corpus corpus, Backends backends, std::shared_ptr<SessionStore> store)
    : corpus_(std::move(corpus)), backends_(std::move(backends)), store_(std::move(store)) {
    if (!store_) store_ = std::make_shared<SqliteSessionStore>();
}

void RetrievalService::add_checkpoint(const std::string& id, Checkpoint checkpoint) {
    std::lock_guard lock(mu_);
    if (default_checkpoint_.empty()) default_checkpoint_ = id;
    checkpoints_[id] = std::move(checkpoint);
}

void RetrievalService::add_index(const std::string& id, StickerIndex index) {
    std::lock_guard lock(mu_);
    if (default_index_.empty()) default_index_ = id;
    indexes_[id] = std::move(index);
}

std::shared_ptr<const Retriever> RetrievalService::retriever_for(const std::string& index_id,
                                                                 const std::string& checkpoint_id) const {
    std::lock_guard lock(mu_);
    const auto key = std::make_pair(index_id, checkpoint_id);
    if (auto it = retrievers_.find(key); it != retrievers_.end()) return it->second;
    auto ci = checkpoints_.find(checkpoint_id);
    if (ci == checkpoints_.end()) throw NotFoundError("unknown checkpoint '" + checkpoint_id + "'");
    auto ii = indexes_.find(index_id);
    if (ii == indexes_.end()) throw NotFoundError("unknown index '" + index_id + "'");
    const auto* corpus = &corpus_;
    auto r = std::make_shared<const Retriever>(ci->second, ii->second, backends_, captions_from(*corpus));
    retrievers_[key] = r;
    return r;
}

std::shared_ptr<std::mutex> RetrievalService::session_lock(const std::string& id) const {
    std::lock_guard lock(mu_);
    auto& m = session_locks_[id];
    if (!m) m = std::make_shared<std::mutex>();
    return m;
}

SessionRecord RetrievalService::load(const std::string& id) const {
    auto r = store_->find(id);
    if (!r) throw NotFoundError("unknown session '" + id + "'");
    return std::move(*r);
}

SessionRecord RetrievalService::create_session(const std::optional<std::string>& index_id,
                                               const std::optional<std::string>& checkpoint_id) {
    std::string idx, ckpt;
    {
        std::lock_guard lock(mu_);
        idx = index_id.value_or(default_index_);
        ckpt = checkpoint_id.value_or(default_checkpoint_);
    }
    if (idx.empty()) throw NotFoundError("no index loaded");
    if (ckpt.empty()) throw NotFoundError("no checkpoint loaded");
    const auto retriever = retriever_for(idx, ckpt);  // validates ids and versions

    SessionRecord r;
    r.id = new_session_id();
    r.index_id = idx;
    r.checkpoint_id = ckpt;
    r.conversation.id = r.id;
    r.created_at = r.updated_at = now_ms();
    store_->insert(r);
    return r;
}

SessionRecord RetrievalService::get_session(const std::string& id) const { return load(id); }

SessionRecord RetrievalService::append(const std::string& session_id, Utterance u) {
    const auto lock = session_lock(session_id);
    std::lock_guard guard(*lock);
    auto r = load(session_id);
    u.index = r.conversation.utterances.empty() ? 0 : r.conversation.utterances.back().index + 1;
    validate_utterance(u);
    r.conversation.utterances.push_back(std::move(u));
    r.updated_at = now_ms();
    store_->update(r);
    return r;
}

SessionRecord RetrievalService::post_utterance(const std::string& session_id, const std::string& speaker_id,
                                               const std::string& text) {
    Utterance u;
    u.speaker_id = speaker_id;
    u.text = text;
    return append(session_id, std::move(u));
}

SessionRecord RetrievalService::commit_sticker(const std::string& session_id, const std::string& sticker_id,
                                               const std::optional<std::string>& speaker_id) {
    std::string speaker;
    {
        const auto r = load(session_id);
        const auto retriever = retriever_for(r.index_id, r.checkpoint_id);
        if (!retriever->index().find(sticker_id)) {
            throw NotFoundError("sticker '" + sticker_id + "' is not in index '" + r.index_id + "'");
        }
        if (speaker_id) {
            speaker = *speaker_id;
        } else if (!r.conversation.utterances.empty()) {
            speaker = r.conversation.utterances.back().speaker_id;
        } else {
            speaker = "User_1";
        }
    }
    Utterance u;
    u.speaker_id = speaker;
    u.sticker_id = sticker_id;
    return append(session_id, std::move(u));
}

SuggestionResponse RetrievalService::suggest(const std::string& session_id, std::size_t k) const {
    SessionRecord r;
    {
        const auto lock = session_lock(session_id);
        std::lock_guard guard(*lock);
        r = load(session_id);
    }
    if (r.conversation.utterances.empty()) throw PreconditionError("session '" + session_id + "' has no utterances");
    const auto retriever = retriever_for(r.index_id, r.checkpoint_id);
    QueryEncoding enc;
    const auto ranked = retriever->retrieve(r.conversation, k, &enc);

    SuggestionResponse out;
    out.session_id = session_id;
    out.context_version = r.conversation.utterances.size();
    out.predicted_label = enc.predicted_label;
    out.clamped = ranked.clamped;
    out.context_text = enc.context_text;
    for (const auto& e : ranked.entries) {
        out.suggestions.push_back({e.sticker_id, e.score, enc.predicted_label, "/stickers/" + e.sticker_id + "/image"});
    }
    return out;
}

std::pair<std::string, std::string> RetrievalService::sticker_image(const std::string& sticker_id) const {
    auto it = corpus_.stickers.find(sticker_id);
    if (it == corpus_.stickers.end()) throw NotFoundError("unknown sticker '" + sticker_id + "'");
    return {read_bytes(it->second.image_ref), mime_for(it->second.image_ref)};
}

json RetrievalService::sticker_details(const std::string& sticker_id) const {
    auto it = corpus_.stickers.find(sticker_id);
    if (it == corpus_.stickers.end()) throw NotFoundError("unknown sticker '" + sticker_id + "'");
    std::call_once(assets_once_, [&] { assets_ = featurize_stickers(corpus_.stickers, backends_); });
    const StickerAsset* asset = nullptr;
    for (const auto& a : assets_) {
        if (a.features.id == sticker_id) asset = &a;
    }
    json descriptions = json::object();
    for (auto a : kAttributes) descriptions[std::string(attribute_name(a))] = asset->descriptions[a];
    json out = {{"sticker_id", sticker_id},
                {"verbal_text", it->second.verbal_text ? json(*it->second.verbal_text) : json(nullptr)},
                {"descriptions", descriptions},
                {"image_url", "/stickers/" + sticker_id + "/image"}};
    std::lock_guard lock(mu_);
    if (auto ci = checkpoints_.find(default_checkpoint_); ci != checkpoints_.end()) {
        const std::vector<StickerFeatures> one{asset->features};
        out["relation_score"] = relation_scores_json(ci->second.params, one, model_options(ci->second.config)).at(0);
    }
    return out;
}

json RetrievalService::health() const {
    std::lock_guard lock(mu_);
    json ck = json::array(), ix = json::array();
    for (const auto& [id, c] : checkpoints_) ck.push_back(id);
    for (const auto& [id, i] : indexes_) ix.push_back(id);
    return {{"status", "ok"}, {"checkpoints", ck}, {"indexes", ix}, {"stickers", corpus_.stickers.size()}};
}

}  // namespace stickersel::app
