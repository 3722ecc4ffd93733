#include "stickersel/dataset.hpp"

#include "stickersel/error.hpp"
#include "stickersel/text.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <regex>
#include <sstream>

namespace stickersel {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(Scenario s) { return s == Scenario::SR ? "SR" : "DR"; }

std::string to_string(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Valid: return "valid";
        case Split::Test: return "test";
    }
    return "train";
}

Scenario parse_scenario(const std::string& s) {
    if (s == "SR") return Scenario::SR;
    if (s == "DR") return Scenario::DR;
    throw ValidationError("unknown scenario '" + s + "' (expected SR or DR)");
}

Split parse_split(const std::string& s) {
    if (s == "train") return Split::Train;
    if (s == "valid" || s == "validation" || s == "dev") return Split::Valid;
    if (s == "test") return Split::Test;
    throw ValidationError("unknown split '" + s + "'");
}

CorpusFormat parse_corpus_format(const std::string& s) {
    if (s == "stickerint") return CorpusFormat::StickerInt;
    if (s == "mod") return CorpusFormat::Mod;
    throw ConfigError("unknown corpus format '" + s + "' (expected stickerint or mod)");
}

const Sticker& Corpus::sticker(const std::string& id) const {
    auto it = stickers.find(id);
    if (it == stickers.end()) throw NotFoundError("unknown sticker '" + id + "'");
    return it->second;
}

std::vector<const Conversation*> Corpus::split(Split s) const {
    std::vector<const Conversation*> out;
    for (const auto& c : conversations) {
        if (c.split == s) out.push_back(&c);
    }
    return out;
}

std::optional<std::size_t> Corpus::label_index(const std::string& label) const {
    auto it = std::find(taxonomy.begin(), taxonomy.end(), label);
    if (it == taxonomy.end()) return std::nullopt;
    return static_cast<std::size_t>(it - taxonomy.begin());
}

bool is_anonymized_speaker(const std::string& speaker_id) {
    static const std::regex kPattern("^User_[0-9]+$");
    return std::regex_match(speaker_id, kPattern);
}

void validate_utterance(const Utterance& u) {
    if (!is_anonymized_speaker(u.speaker_id)) {
        throw ValidationError("speaker id '" + u.speaker_id + "' is not anonymized (expected User_<k>)");
    }
    const bool has_text = !is_blank(u.text);
    const bool has_sticker = u.sticker_id.has_value() && !u.sticker_id->empty();
    if (!has_text && !has_sticker) {
        throw ValidationError("utterance " + std::to_string(u.index) + " carries neither text nor a sticker");
    }
}

void validate_conversation(const Conversation& c) {
    if (c.id.empty()) throw ValidationError("conversation without id");
    if (c.utterances.empty()) throw ValidationError("conversation '" + c.id + "' has no utterances");
    for (std::size_t i = 0; i < c.utterances.size(); ++i) {
        const auto& u = c.utterances[i];
        try {
            validate_utterance(u);
        } catch (const ValidationError& e) {
            throw ValidationError("conversation '" + c.id + "': " + e.what());
        }
        if (i > 0 && u.index <= c.utterances[i - 1].index) {
            throw ValidationError("conversation '" + c.id + "': utterance indices not strictly increasing");
        }
    }
    if (c.gold_sticker_id.empty()) throw ValidationError("conversation '" + c.id + "' has no gold sticker");
    if (c.intention_label.empty()) throw ValidationError("conversation '" + c.id + "' has no intention label");
    const auto& reply = c.utterances.back();
    if (!c.target_speaker.empty() && reply.speaker_id != c.target_speaker) {
        throw ValidationError("conversation '" + c.id + "': reply turn is not spoken by the target speaker");
    }
    const bool reply_has_text = !is_blank(reply.text);
    if (c.scenario == Scenario::DR && reply_has_text) {
        throw ValidationError("conversation '" + c.id + "': DR reply turn must carry no text");
    }
    if (c.scenario == Scenario::SR && !reply_has_text) {
        throw ValidationError("conversation '" + c.id + "': SR reply turn must carry text");
    }
}

void validate_corpus(const Corpus& corpus) {
    std::set<std::string> labels(corpus.taxonomy.begin(), corpus.taxonomy.end());
    if (labels.size() != corpus.taxonomy.size()) throw TaxonomyError("taxonomy contains duplicate labels");

    std::set<std::string> ids;
    std::vector<std::string> dangling;
    for (const auto& c : corpus.conversations) {
        validate_conversation(c);
        if (!ids.insert(c.id).second) throw ValidationError("duplicate conversation id '" + c.id + "'");
        if (!labels.count(c.intention_label)) {
            throw TaxonomyError("conversation '" + c.id + "' has label '" + c.intention_label +
                                "' which is not in the taxonomy");
        }
        bool bad = !corpus.stickers.count(c.gold_sticker_id);
        for (const auto& u : c.utterances) {
            if (u.sticker_id && !corpus.stickers.count(*u.sticker_id)) bad = true;
        }
        if (bad) dangling.push_back(c.id);
    }
    if (!dangling.empty()) {
        std::string msg = "dangling sticker references in conversations:";
        for (const auto& id : dangling) msg += " " + id;
        throw IntegrityError(msg);
    }
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

namespace {

json utterance_json(const Utterance& u) {
    json j = {{"index", u.index}, {"speaker_id", u.speaker_id}, {"text", u.text}};
    if (u.sticker_id) j["sticker_id"] = *u.sticker_id;
    return j;
}

Utterance utterance_from(const json& j) {
    Utterance u;
    u.index = j.at("index").get<int>();
    u.speaker_id = j.at("speaker_id").get<std::string>();
    u.text = j.value("text", std::string{});
    if (j.contains("sticker_id") && !j["sticker_id"].is_null()) u.sticker_id = j["sticker_id"].get<std::string>();
    return u;
}

json conversation_json(const Conversation& c) {
    json utts = json::array();
    for (const auto& u : c.utterances) utts.push_back(utterance_json(u));
    return {{"id", c.id},
            {"utterances", utts},
            {"target_speaker", c.target_speaker},
            {"gold_sticker_id", c.gold_sticker_id},
            {"intention_label", c.intention_label},
            {"scenario", to_string(c.scenario)},
            {"split", to_string(c.split)}};
}

Conversation conversation_from(const json& j) {
    Conversation c;
    c.id = j.at("id").get<std::string>();
    for (const auto& u : j.at("utterances")) c.utterances.push_back(utterance_from(u));
    c.target_speaker = j.value("target_speaker", std::string{});
    c.gold_sticker_id = j.value("gold_sticker_id", std::string{});
    c.intention_label = j.value("intention_label", std::string{});
    c.scenario = parse_scenario(j.value("scenario", std::string{"SR"}));
    c.split = parse_split(j.value("split", std::string{"train"}));
    return c;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw LoadError("cannot read file: " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json parse_json_file(const fs::path& p) {
    try {
        return json::parse(read_file(p));
    } catch (const json::exception& e) {
        throw LoadError("malformed JSON in " + p.string() + ": " + e.what());
    }
}

template <typename Fn>
void for_each_jsonl(const fs::path& p, Fn&& fn) {
    std::ifstream in(p);
    if (!in) throw LoadError("cannot read file: " + p.string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (is_blank(line)) continue;
        try {
            fn(json::parse(line));
        } catch (const json::exception& e) {
            throw LoadError(p.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

void load_stickers(Corpus& corpus, const fs::path& root, const json& manifest) {
    const fs::path sticker_file = root / manifest.value("stickers", std::string{"stickers.jsonl"});
    const fs::path sticker_dir = root / manifest.value("sticker_dir", std::string{"stickers"});
    if (!fs::exists(sticker_file)) throw LoadError("missing sticker manifest: " + sticker_file.string());
    if (!fs::is_directory(sticker_dir)) throw LoadError("missing sticker asset directory: " + sticker_dir.string());
    for_each_jsonl(sticker_file, [&](const json& j) {
        Sticker s;
        s.id = j.at("id").get<std::string>();
        fs::path file = j.at("file").get<std::string>();
        s.image_ref = file.is_absolute() ? file : sticker_dir / file;
        if (j.contains("verbal_text") && !j["verbal_text"].is_null()) {
            s.verbal_text = j["verbal_text"].get<std::string>();
        }
        if (!fs::is_regular_file(s.image_ref)) {
            throw LoadError("sticker '" + s.id + "' image not found: " + s.image_ref.string());
        }
        if (!corpus.stickers.emplace(s.id, s).second) {
            throw ValidationError("duplicate sticker id '" + s.id + "'");
        }
    });
}

void load_stickerint_conversations(Corpus& corpus, const fs::path& root, const json& manifest) {
    auto load_file = [&](const fs::path& p, std::optional<Split> forced) {
        if (!fs::exists(p)) throw LoadError("missing conversations file: " + p.string());
        for_each_jsonl(p, [&](const json& j) {
            Conversation c = conversation_from(j);
            if (forced) {
                if (j.contains("split") && c.split != *forced) {
                    throw ValidationError("conversation '" + c.id + "' split disagrees with its file " + p.string());
                }
                c.split = *forced;
            }
            corpus.conversations.push_back(std::move(c));
        });
    };
    if (manifest.contains("splits")) {
        // Fixed split order keeps loading deterministic regardless of JSON key order.
        for (Split s : {Split::Train, Split::Valid, Split::Test}) {
            const auto key = to_string(s);
            if (manifest["splits"].contains(key)) load_file(root / manifest["splits"][key].get<std::string>(), s);
        }
    } else {
        load_file(root / manifest.value("conversations", std::string{"conversations.jsonl"}), std::nullopt);
    }
}

// MOD dialogue files: {"<dialog id>": [{"speaker_id", "txt", "img_id"?, "emotion_id"?}, ...]}.
// Every turn that carries img_id (other than turn 0) yields one conversation
// ending at that turn.
void load_mod_conversations(Corpus& corpus, const fs::path& root, const json& manifest) {
    if (!manifest.contains("splits")) throw LoadError("MOD manifest needs a 'splits' map");
    for (Split s : {Split::Train, Split::Valid, Split::Test}) {
        const auto key = to_string(s);
        if (!manifest["splits"].contains(key)) continue;
        const fs::path p = root / manifest["splits"][key].get<std::string>();
        if (!fs::exists(p)) throw LoadError("missing conversations file: " + p.string());
        const json dialogs = parse_json_file(p);
        std::vector<std::string> dialog_ids;
        for (auto it = dialogs.begin(); it != dialogs.end(); ++it) dialog_ids.push_back(it.key());
        std::sort(dialog_ids.begin(), dialog_ids.end());
        for (const auto& did : dialog_ids) {
            const json& turns = dialogs.at(did);
            std::map<std::string, std::string> speakers;
            std::vector<Utterance> so_far;
            for (std::size_t t = 0; t < turns.size(); ++t) {
                const json& turn = turns[t];
                const auto raw = turn.value("speaker_id", std::string{"[speaker1]"});
                auto [sp, fresh] = speakers.emplace(raw, "User_" + std::to_string(speakers.size() + 1));
                (void)fresh;
                Utterance u;
                u.index = static_cast<int>(t);
                u.speaker_id = sp->second;
                u.text = turn.value("txt", std::string{});
                if (turn.contains("img_id") && !turn["img_id"].is_null()) {
                    u.sticker_id = turn["img_id"].is_string() ? turn["img_id"].get<std::string>()
                                                              : std::to_string(turn["img_id"].get<long long>());
                }
                so_far.push_back(u);
                if (!u.sticker_id || t == 0) continue;
                Conversation c;
                c.id = did + "#" + std::to_string(t);
                c.utterances = so_far;
                c.target_speaker = u.speaker_id;
                c.gold_sticker_id = *u.sticker_id;
                const auto emotion = turn.value("emotion_id", 0);
                if (emotion < 0 || static_cast<std::size_t>(emotion) >= corpus.taxonomy.size()) {
                    throw TaxonomyError("dialog '" + did + "' turn " + std::to_string(t) + ": emotion_id " +
                                        std::to_string(emotion) + " outside taxonomy");
                }
                c.intention_label = corpus.taxonomy[static_cast<std::size_t>(emotion)];
                c.scenario = is_blank(u.text) ? Scenario::DR : Scenario::SR;
                c.split = s;
                corpus.conversations.push_back(std::move(c));
            }
        }
    }
}

}  // namespace

std::string conversation_to_json(const Conversation& c) { return conversation_json(c).dump(); }

Conversation conversation_from_json(const std::string& json_text) {
    try {
        return conversation_from(json::parse(json_text));
    } catch (const json::exception& e) {
        throw LoadError(std::string("malformed conversation JSON: ") + e.what());
    }
}

Corpus load_corpus(const fs::path& dir, CorpusFormat format) {
    const fs::path manifest_path = dir / "manifest.json";
    if (!fs::exists(manifest_path)) throw LoadError("missing manifest: " + manifest_path.string());
    const json manifest = parse_json_file(manifest_path);

    Corpus corpus;
    corpus.name = manifest.value("name", dir.filename().string());
    if (!manifest.contains("taxonomy")) throw LoadError(manifest_path.string() + ": no taxonomy list");
    corpus.taxonomy = manifest["taxonomy"].get<std::vector<std::string>>();

    load_stickers(corpus, dir, manifest);
    if (format == CorpusFormat::Mod) {
        load_mod_conversations(corpus, dir, manifest);
    } else {
        load_stickerint_conversations(corpus, dir, manifest);
    }
    validate_corpus(corpus);
    return corpus;
}

void save_corpus(const Corpus& corpus, const fs::path& dir) {
    fs::create_directories(dir / "stickers");
    json manifest = {{"name", corpus.name},
                     {"format", "stickerint"},
                     {"taxonomy", corpus.taxonomy},
                     {"stickers", "stickers.jsonl"},
                     {"sticker_dir", "stickers"},
                     {"conversations", "conversations.jsonl"}};
    std::ofstream(dir / "manifest.json") << manifest.dump(2) << "\n";

    std::ofstream st(dir / "stickers.jsonl");
    for (const auto& [id, s] : corpus.stickers) {
        const fs::path target = dir / "stickers" / s.image_ref.filename();
        if (fs::absolute(s.image_ref) != fs::absolute(target)) {
            fs::copy_file(s.image_ref, target, fs::copy_options::overwrite_existing);
        }
        json j = {{"id", id}, {"file", s.image_ref.filename().string()}};
        if (s.verbal_text) j["verbal_text"] = *s.verbal_text;
        st << j.dump() << "\n";
    }
    std::ofstream cv(dir / "conversations.jsonl");
    for (const auto& c : corpus.conversations) cv << conversation_json(c).dump() << "\n";
}

StickerLabels sticker_labels(const Corpus& corpus) {
    StickerLabels out;
    for (const auto& [id, s] : corpus.stickers) out[id];
    for (const auto& c : corpus.conversations) out[c.gold_sticker_id].insert(c.intention_label);
    return out;
}

// ---------------------------------------------------------------------------
// Statistics
// ---------------------------------------------------------------------------

SplitStats stats_for(const std::vector<const Conversation*>& conversations) {
    SplitStats st;
    std::set<std::string> stickers;
    std::set<std::string> users;
    std::size_t users_per_conv = 0;
    for (const auto* c : conversations) {
        ++st.conversations;
        (c->scenario == Scenario::SR ? st.sr : st.dr) += 1;
        std::set<std::string> conv_users;
        for (const auto& u : c->utterances) {
            ++st.utterances;
            st.tokens += count_tokens(u.text);
            conv_users.insert(u.speaker_id);
            if (u.sticker_id) stickers.insert(*u.sticker_id);
        }
        if (!c->gold_sticker_id.empty()) stickers.insert(c->gold_sticker_id);
        users_per_conv += conv_users.size();
        users.insert(conv_users.begin(), conv_users.end());
    }
    st.stickers = stickers.size();
    st.users = users.size();
    if (st.conversations > 0) {
        st.avg_utterances = static_cast<double>(st.utterances) / static_cast<double>(st.conversations);
        st.avg_users = static_cast<double>(users_per_conv) / static_cast<double>(st.conversations);
    }
    if (st.utterances > 0) st.avg_tokens = static_cast<double>(st.tokens) / static_cast<double>(st.utterances);
    return st;
}

StatsReport corpus_stats(const Corpus& corpus) {
    StatsReport report;
    std::vector<const Conversation*> all;
    for (const auto& c : corpus.conversations) all.push_back(&c);
    for (Split s : {Split::Train, Split::Valid, Split::Test}) report.splits[to_string(s)] = stats_for(corpus.split(s));
    report.splits["all"] = stats_for(all);
    for (const auto& [id, s] : corpus.stickers) {
        if (s.verbal_text && !is_blank(*s.verbal_text)) ++report.captioned_stickers;
    }
    return report;
}

}  // namespace stickersel
