#pragma once
// Token rule used for corpus statistics and by the stub text encoder.
//
// Every CJK character (Han, kana, Hangul syllables) is one token; a maximal
// run of ASCII letters/digits (or other non-CJK letters) is one token.
// Whitespace, punctuation and symbols separate tokens and are not counted.

#include <string>
#include <string_view>
#include <vector>

namespace stickersel {

// Decodes UTF-8; malformed bytes decode to U+FFFD.
std::u32string utf8_decode(std::string_view s);
std::string utf8_encode(std::u32string_view s);

bool is_cjk(char32_t cp);

// Latin runs are lower-cased.
std::vector<std::string> tokenize(std::string_view text);
std::size_t count_tokens(std::string_view text);

bool is_blank(std::string_view text);

}  // namespace stickersel
