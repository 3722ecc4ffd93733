#pragma once
// Conversation corpora and sticker sets.
//
// On-disk layout of a dataset directory:
//
//   manifest.json        {"name", "format", "taxonomy": [...], "stickers": "stickers.jsonl",
//                         "sticker_dir": "stickers",
//                         "conversations": "conversations.jsonl"  -- or --
//                         "splits": {"train": "...", "valid": "...", "test": "..."}}
//   conversations.jsonl  one Conversation per line
//   stickers.jsonl       {"id", "file", "verbal_text"?} per line
//   stickers/            image assets
//
// A corpus is immutable after load_corpus() returns.

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace stickersel {

enum class Scenario { SR, DR };
enum class Split { Train, Valid, Test };
enum class CorpusFormat { StickerInt, Mod };

std::string to_string(Scenario s);
std::string to_string(Split s);
Scenario parse_scenario(const std::string& s);
Split parse_split(const std::string& s);
CorpusFormat parse_corpus_format(const std::string& s);

struct Utterance {
    int index = 0;
    std::string speaker_id;
    std::string text;
    std::optional<std::string> sticker_id;

    bool operator==(const Utterance&) const = default;
};

struct Conversation {
    std::string id;
    std::vector<Utterance> utterances;
    std::string target_speaker;
    std::string gold_sticker_id;  // empty for live (unlabelled) conversations
    std::string intention_label;  // empty for live conversations
    Scenario scenario = Scenario::SR;
    Split split = Split::Train;

    bool operator==(const Conversation&) const = default;
};

struct Sticker {
    std::string id;
    std::filesystem::path image_ref;
    std::optional<std::string> verbal_text;

    bool operator==(const Sticker&) const = default;
};

struct Corpus {
    std::string name;
    std::vector<std::string> taxonomy;
    std::map<std::string, Sticker> stickers;
    std::vector<Conversation> conversations;

    const Sticker& sticker(const std::string& id) const;
    std::vector<const Conversation*> split(Split s) const;
    std::optional<std::size_t> label_index(const std::string& label) const;

    bool operator==(const Corpus&) const = default;
};

// Throws ValidationError describing the first broken invariant.
void validate_utterance(const Utterance& u);
bool is_anonymized_speaker(const std::string& speaker_id);

// Checks record-level invariants of a labelled conversation (non-empty, index
// order, SR/DR reply-turn rule). The reply turn is the final utterance and
// belongs to target_speaker.
void validate_conversation(const Conversation& c);

// Full corpus check: taxonomy membership (TaxonomyError), sticker references
// (IntegrityError listing every offending conversation id), unique ids.
void validate_corpus(const Corpus& corpus);

Corpus load_corpus(const std::filesystem::path& dir, CorpusFormat format = CorpusFormat::StickerInt);

// Writes manifest.json, conversations.jsonl, stickers.jsonl and copies the
// image assets into dir/stickers/.
void save_corpus(const Corpus& corpus, const std::filesystem::path& dir);

// Conversation <-> JSON line. Used by the CLI for --conversation files too.
std::string conversation_to_json(const Conversation& c);
Conversation conversation_from_json(const std::string& json_text);

// For each sticker, the intention labels of the conversations that use it as
// gold. Drives both negative sampling and the relevance rule.
using StickerLabels = std::map<std::string, std::set<std::string>>;
StickerLabels sticker_labels(const Corpus& corpus);

struct SplitStats {
    std::size_t conversations = 0;
    std::size_t sr = 0;
    std::size_t dr = 0;
    std::size_t utterances = 0;
    std::size_t tokens = 0;
    std::size_t stickers = 0;
    std::size_t users = 0;
    double avg_utterances = 0.0;
    double avg_users = 0.0;
    double avg_tokens = 0.0;
};

struct StatsReport {
    std::map<std::string, SplitStats> splits;  // "train", "valid", "test", "all"
    std::size_t captioned_stickers = 0;
};

StatsReport corpus_stats(const Corpus& corpus);
SplitStats stats_for(const std::vector<const Conversation*>& conversations);

}  // namespace stickersel
