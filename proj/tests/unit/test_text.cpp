#include <doctest.h>

#include "stickersel/text.hpp"

using namespace stickersel;

TEST_SUITE("text") {

TEST_CASE("latin runs are one token and lowercased") {
    const auto t = tokenize("Hello, World 42!");
    REQUIRE(t.size() == 3);
    CHECK(t[0] == "hello");
    CHECK(t[1] == "world");
    CHECK(t[2] == "42");
}

TEST_CASE("each CJK character is its own token") {
    CHECK(count_tokens("\xE4\xBD\xA0\xE5\xA5\xBD") == 2);        // two ideographs
    CHECK(count_tokens("ok\xE4\xBD\xA0\xE5\xA5\xBD" "abc") == 4);  // run, 2 chars, run
}

TEST_CASE("punctuation and emoji separate tokens and are not counted") {
    CHECK(count_tokens("a\xE3\x80\x82" "b") == 2);          // ideographic full stop
    CHECK(count_tokens("hi \xF0\x9F\x98\x80 there") == 2);  // emoji
    CHECK(count_tokens("...") == 0);
    CHECK(count_tokens("") == 0);
}

TEST_CASE("utf8 round trip") {
    const std::string s = "caf\xC3\xA9 \xE4\xBD\xA0 \xF0\x9F\x98\x80";
    CHECK(utf8_encode(utf8_decode(s)) == s);
}

TEST_CASE("malformed utf8 becomes replacement characters, never throws") {
    const std::string bad = "a\xFF" "b\xC3";
    const auto cps = utf8_decode(bad);
    CHECK(cps.size() == 4);
    CHECK(cps[1] == 0xFFFD);
    CHECK(count_tokens(bad) == 2);
}

TEST_CASE("blank detection") {
    CHECK(is_blank(""));
    CHECK(is_blank(" \t\n"));
    CHECK_FALSE(is_blank(" x "));
}

}
