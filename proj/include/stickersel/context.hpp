#pragma once
// Turning a conversation into the text the encoders see.

#include "stickersel/dataset.hpp"

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace stickersel {

inline constexpr std::string_view kNoneText = "<none>";
inline constexpr std::string_view kStickerToken = "<sticker>";
inline constexpr std::string_view kContextSeparator = " [SEP] ";

// Caption lookup for sticker turns; nullopt when the sticker has no text.
using CaptionLookup = std::function<std::optional<std::string>(const std::string& sticker_id)>;

CaptionLookup captions_from(const Corpus& corpus);

// One "speaker: content" line per turn, keeping only the `window` most recent
// turns (window 0 keeps everything). Sticker turns render as
// "<sticker> caption". When the conversation carries a gold sticker, the
// reply turn's reference to it is the retrieval target and is not rendered;
// a reply turn left empty by that is dropped.
std::vector<std::string> context_lines(const Conversation& conversation, const CaptionLookup& captions,
                                       std::size_t window = 0);

std::string render_context(const Conversation& conversation, const CaptionLookup& captions,
                           std::size_t window = 0);

// Number of turns that context_lines() renders with no window.
std::size_t context_length(const Conversation& conversation);

}  // namespace stickersel
