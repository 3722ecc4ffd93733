#include <doctest.h>

#include "support.hpp"
#include "stickersel/app/session_store.hpp"

using namespace stickersel;
using namespace stickersel::app;

namespace {

SessionRecord record(const std::string& id) {
    SessionRecord r;
    r.id = id;
    r.index_id = "idx";
    r.checkpoint_id = "ck";
    r.conversation.id = id;
    r.conversation.utterances.push_back({0, "User_1", "hello there", std::nullopt});
    r.conversation.utterances.push_back({1, "User_2", "", std::string("joy_0")});
    r.created_at = 1000;
    r.updated_at = 2000;
    return r;
}

}  // namespace

TEST_SUITE("session_store") {

TEST_CASE("insert and find round-trip every field") {
    SqliteSessionStore store;
    const auto r = record("s1");
    store.insert(r);
    const auto back = store.find("s1");
    REQUIRE(back);
    CHECK(back->id == r.id);
    CHECK(back->index_id == r.index_id);
    CHECK(back->checkpoint_id == r.checkpoint_id);
    CHECK(back->conversation.utterances == r.conversation.utterances);
    CHECK(back->created_at == 1000);
    CHECK(back->updated_at == 2000);
    CHECK_FALSE(store.find("missing"));
}

TEST_CASE("update replaces the conversation") {
    SqliteSessionStore store;
    auto r = record("s1");
    store.insert(r);
    r.conversation.utterances.push_back({2, "User_1", "thanks", std::nullopt});
    r.updated_at = 3000;
    store.update(r);
    const auto back = store.find("s1");
    REQUIRE(back);
    CHECK(back->conversation.utterances.size() == 3);
    CHECK(back->updated_at == 3000);
}

TEST_CASE("ids lists every session") {
    SqliteSessionStore store;
    store.insert(record("a"));
    store.insert(record("b"));
    auto ids = store.ids();
    std::sort(ids.begin(), ids.end());
    CHECK(ids == std::vector<std::string>{"a", "b"});
}

TEST_CASE("a file-backed store survives reopening") {
    testsupport::TempDir dir("store");
    {
        SqliteSessionStore store(dir / "sessions.db");
        store.insert(record("persist"));
    }
    SqliteSessionStore again(dir / "sessions.db");
    const auto back = again.find("persist");
    REQUIRE(back);
    CHECK(back->conversation.utterances.size() == 2);
}

}
