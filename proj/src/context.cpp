#include "stickersel/context.hpp"

#include "stickersel/text.hpp"

namespace stickersel {

CaptionLookup captions_from(const Corpus& corpus) {
    return [&corpus](const std::string& id) -> std::optional<std::string> {
        auto it = corpus.stickers.find(id);
        if (it == corpus.stickers.end()) return std::nullopt;
        return it->second.verbal_text;
    };
}

namespace {

std::optional<std::string> render_turn(const Utterance& u, bool hide_sticker, const CaptionLookup& captions) {
    std::string content;
    if (!is_blank(u.text)) content = u.text;
    if (u.sticker_id && !hide_sticker) {
        if (!content.empty()) content += ' ';
        content += kStickerToken;
        if (captions) {
            if (auto cap = captions(*u.sticker_id); cap && !is_blank(*cap)) content += ' ' + *cap;
        }
    }
    if (content.empty()) return std::nullopt;
    return u.speaker_id + ": " + content;
}

}  // namespace

std::vector<std::string> context_lines(const Conversation& conversation, const CaptionLookup& captions,
                                       std::size_t window) {
    std::vector<std::string> lines;
    const auto& utts = conversation.utterances;
    for (std::size_t i = 0; i < utts.size(); ++i) {
        const bool is_reply = i + 1 == utts.size();
        const bool hide = is_reply && !conversation.gold_sticker_id.empty() && utts[i].sticker_id &&
                          *utts[i].sticker_id == conversation.gold_sticker_id;
        if (auto line = render_turn(utts[i], hide, captions)) lines.push_back(std::move(*line));
    }
    if (window > 0 && lines.size() > window) {
        lines.erase(lines.begin(), lines.end() - static_cast<std::ptrdiff_t>(window));
    }
    return lines;
}

std::string render_context(const Conversation& conversation, const CaptionLookup& captions, std::size_t window) {
    std::string out;
    for (const auto& line : context_lines(conversation, captions, window)) {
        if (!out.empty()) out += '\n';
        out += line;
    }
    return out;
}

std::size_t context_length(const Conversation& conversation) {
    return context_lines(conversation, CaptionLookup{}, 0).size();
}

}  // namespace stickersel
