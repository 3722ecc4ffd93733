#pragma once
// Retrieval service behind the HTTP API and the chat playground.

#include "stickersel/app/session_store.hpp"
#include "stickersel/matcher.hpp"

#include <json.hpp>

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace stickersel::app {

struct Suggestion {
    std::string sticker_id;
    double score = 0.0;
    std::string intention_label;  // predicted for the query
    std::string image_url;
};

struct SuggestionResponse {
    std::string session_id;
    std::size_t context_version = 0;  // utterance count the suggestions were computed for
    std::string predicted_label;
    bool clamped = false;             // k exceeded the index size
    std::string context_text;         // rendered context the pipeline saw
    std::vector<Suggestion> suggestions;
};

nlohmann::json to_json(const SuggestionResponse& r);
nlohmann::json to_json(const SessionRecord& r);

class RetrievalService {
public:
    // `corpus` supplies the sticker set (images and captions).
    RetrievalService(Corpus corpus, Backends backends, std::shared_ptr<SessionStore> store);

    // The first checkpoint / index registered becomes the default.
    void add_checkpoint(const std::string& id, Checkpoint checkpoint);
    void add_index(const std::string& id, StickerIndex index);

    SessionRecord create_session(const std::optional<std::string>& index_id = std::nullopt,
                                 const std::optional<std::string>& checkpoint_id = std::nullopt);
    SessionRecord get_session(const std::string& id) const;
    SessionRecord post_utterance(const std::string& session_id, const std::string& speaker_id, const std::string& text);
    // Appends a sticker-only turn. Without a speaker the last speaker is reused.
    SessionRecord commit_sticker(const std::string& session_id, const std::string& sticker_id,
                                 const std::optional<std::string>& speaker_id = std::nullopt);
    SuggestionResponse suggest(const std::string& session_id, std::size_t k) const;

    // Raw image bytes and a MIME type.
    std::pair<std::string, std::string> sticker_image(const std::string& sticker_id) const;
    // Caption, attribute descriptions and relation scores under the default checkpoint.
    nlohmann::json sticker_details(const std::string& sticker_id) const;

    nlohmann::json health() const;
    const Corpus& corpus() const { return corpus_; }

private:
    std::shared_ptr<const Retriever> retriever_for(const std::string& index_id, const std::string& checkpoint_id) const;
    std::shared_ptr<std::mutex> session_lock(const std::string& id) const;
    SessionRecord load(const std::string& id) const;
    SessionRecord append(const std::string& session_id, Utterance u);

    Corpus corpus_;
    Backends backends_;
    std::shared_ptr<SessionStore> store_;
    std::map<std::string, Checkpoint> checkpoints_;
    std::map<std::string, StickerIndex> indexes_;
    std::string default_checkpoint_;
    std::string default_index_;

    mutable std::mutex mu_;  // guards the maps below
    mutable std::map<std::pair<std::string, std::string>, std::shared_ptr<const Retriever>> retrievers_;
    mutable std::map<std::string, std::shared_ptr<std::mutex>> session_locks_;
    mutable std::once_flag assets_once_;
    mutable std::vector<StickerAsset> assets_;
};

}  // namespace stickersel::app
