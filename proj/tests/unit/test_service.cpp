#include <doctest.h>

#include "pipeline.hpp"
#include "stickersel/app/service.hpp"
#include "stickersel/error.hpp"

#include <random>

using namespace stickersel;
using namespace stickersel::app;

namespace {

struct ServiceFixture {
    const Corpus& corpus = testsupport::planted_corpus();
    testsupport::Pipeline pipeline = testsupport::make_pipeline(corpus);
    RetrievalService service{corpus, pipeline.backends, std::make_shared<SqliteSessionStore>()};

    ServiceFixture() {
        service.add_checkpoint("ck", pipeline.checkpoint);
        service.add_index("idx", pipeline.index);
    }
};

}  // namespace

TEST_SUITE("service") {

TEST_CASE("create, post and suggest") {
    ServiceFixture f;
    const auto s = f.service.create_session();
    CHECK(s.index_id == "idx");
    CHECK(s.checkpoint_id == "ck");
    CHECK(s.conversation.utterances.empty());
    f.service.post_utterance(s.id, "User_1", "what a happy sunny day");
    const auto r = f.service.suggest(s.id, 3);
    CHECK(r.session_id == s.id);
    CHECK(r.context_version == 1);
    CHECK(r.suggestions.size() == 3);
    CHECK_FALSE(r.clamped);
    CHECK(r.context_text.find("User_1: what a happy sunny day") != std::string::npos);
    for (std::size_t i = 1; i < r.suggestions.size(); ++i) {
        CHECK(r.suggestions[i - 1].score >= r.suggestions[i].score);
    }
    CHECK(r.suggestions[0].image_url == "/stickers/" + r.suggestions[0].sticker_id + "/image");
}

TEST_CASE("suggestions match the retriever directly") {
    ServiceFixture f;
    const auto s = f.service.create_session();
    f.service.post_utterance(s.id, "User_1", "I am so angry right now");
    f.service.post_utterance(s.id, "User_2", "why is that");
    const auto r = f.service.suggest(s.id, 10);
    const auto retriever = testsupport::make_retriever(f.pipeline, f.corpus);
    const auto direct = retriever.retrieve(f.service.get_session(s.id).conversation, 10);
    REQUIRE(direct.entries.size() == r.suggestions.size());
    for (std::size_t i = 0; i < direct.entries.size(); ++i) {
        CHECK(direct.entries[i].sticker_id == r.suggestions[i].sticker_id);
        CHECK(direct.entries[i].score == r.suggestions[i].score);
    }
}

TEST_CASE("commit appends a sticker turn") {
    ServiceFixture f;
    const auto s = f.service.create_session();
    f.service.post_utterance(s.id, "User_2", "hello");
    const auto after = f.service.commit_sticker(s.id, "joy_0");
    REQUIRE(after.conversation.utterances.size() == 2);
    const auto& u = after.conversation.utterances.back();
    CHECK(u.sticker_id == std::optional<std::string>("joy_0"));
    CHECK(u.speaker_id == "User_2");
    CHECK(u.index == 1);
    const auto explicit_speaker = f.service.commit_sticker(s.id, "joy_1", std::string("User_1"));
    CHECK(explicit_speaker.conversation.utterances.back().speaker_id == "User_1");
    CHECK(f.service.suggest(s.id, 2).context_version == 3);
}

TEST_CASE("a sticker commit into an empty session defaults to User_1") {
    ServiceFixture f;
    const auto s = f.service.create_session();
    CHECK(f.service.commit_sticker(s.id, "anger_0").conversation.utterances.back().speaker_id == "User_1");
}

TEST_CASE("unknown ids are not found") {
    ServiceFixture f;
    CHECK_THROWS_AS(f.service.get_session("nope"), NotFoundError);
    CHECK_THROWS_AS(f.service.suggest("nope", 3), NotFoundError);
    CHECK_THROWS_AS(f.service.post_utterance("nope", "User_1", "hi"), NotFoundError);
    CHECK_THROWS_AS(f.service.create_session(std::string("other")), NotFoundError);
    CHECK_THROWS_AS(f.service.create_session(std::nullopt, std::string("other")), NotFoundError);
    const auto s = f.service.create_session();
    CHECK_THROWS_AS(f.service.commit_sticker(s.id, "no_such_sticker"), NotFoundError);
    CHECK_THROWS_AS(f.service.sticker_image("no_such_sticker"), NotFoundError);
    CHECK_THROWS_AS(f.service.sticker_details("no_such_sticker"), NotFoundError);
}

TEST_CASE("a session without utterances has no suggestions") {
    ServiceFixture f;
    const auto s = f.service.create_session();
    CHECK_THROWS_AS(f.service.suggest(s.id, 3), PreconditionError);
}

TEST_CASE("invalid utterances are rejected") {
    ServiceFixture f;
    const auto s = f.service.create_session();
    CHECK_THROWS_AS(f.service.post_utterance(s.id, "alice", "hi"), ValidationError);
    CHECK_THROWS_AS(f.service.post_utterance(s.id, "User_1", "   "), ValidationError);
    CHECK(f.service.get_session(s.id).conversation.utterances.empty());
}

TEST_CASE("k beyond the index size is clamped") {
    ServiceFixture f;
    const auto s = f.service.create_session();
    f.service.post_utterance(s.id, "User_1", "thank you so much");
    const auto r = f.service.suggest(s.id, 50);
    CHECK(r.clamped);
    CHECK(r.suggestions.size() == f.corpus.stickers.size());
}

TEST_CASE("suggestions are deterministic") {
    ServiceFixture f;
    const auto s = f.service.create_session();
    f.service.post_utterance(s.id, "User_1", "wow I did not expect that");
    CHECK(to_json(f.service.suggest(s.id, 5)) == to_json(f.service.suggest(s.id, 5)));
}

TEST_CASE("sessions are isolated from each other") {
    ServiceFixture f;
    std::mt19937_64 rng(5);
    const std::vector<std::string> words{"happy", "sad", "angry", "thanks", "wow", "day", "rain", "gift"};
    std::vector<std::string> ids;
    std::vector<std::size_t> lengths;
    for (int i = 0; i < 6; ++i) {
        ids.push_back(f.service.create_session().id);
        lengths.push_back(0);
    }
    for (int step = 0; step < 40; ++step) {
        const auto which = rng() % ids.size();
        std::string text = words[rng() % words.size()] + " " + words[rng() % words.size()];
        f.service.post_utterance(ids[which], "User_" + std::to_string(1 + rng() % 2), text);
        ++lengths[which];
    }
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const auto s = f.service.get_session(ids[i]);
        CHECK(s.conversation.utterances.size() == lengths[i]);
        CHECK(s.conversation.id == ids[i]);
        if (lengths[i] > 0) {
            const auto alone = testsupport::make_retriever(f.pipeline, f.corpus).retrieve(s.conversation, 5);
            const auto via = f.service.suggest(ids[i], 5);
            for (std::size_t j = 0; j < alone.entries.size(); ++j) {
                CHECK(alone.entries[j].sticker_id == via.suggestions[j].sticker_id);
            }
        }
    }
}

TEST_CASE("sticker details and images") {
    ServiceFixture f;
    const auto [bytes, mime] = f.service.sticker_image("joy_0");
    CHECK(mime == "image/png");
    CHECK(bytes.size() > 8);
    const auto d = f.service.sticker_details("joy_0");
    CHECK(d["sticker_id"] == "joy_0");
    CHECK(d["descriptions"].size() == 4);
    CHECK(d.contains("relation_score"));
    CHECK(f.service.health()["stickers"] == f.corpus.stickers.size());
}

}
