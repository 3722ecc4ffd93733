#include <doctest.h>

#include "pipeline.hpp"
#include "stickersel/image.hpp"
#include "stickersel/synthetic.hpp"

using namespace stickersel;

TEST_SUITE("synthetic") {

TEST_CASE("planted corpus shape") {
    const auto& corpus = testsupport::planted_corpus();
    CHECK(corpus.taxonomy.size() == 5);
    CHECK(corpus.stickers.size() == 10);
    CHECK(corpus.split(Split::Train).size() == 20);
    CHECK(corpus.split(Split::Valid).size() == 10);
    CHECK(corpus.split(Split::Test).size() == 10);
    CHECK_NOTHROW(validate_corpus(corpus));
    bool sr = false, dr = false;
    for (const auto& c : corpus.conversations) (c.scenario == Scenario::SR ? sr : dr) = true;
    CHECK(sr);
    CHECK(dr);
}

TEST_CASE("every sticker is gold for exactly one label") {
    const auto labels = sticker_labels(testsupport::planted_corpus());
    for (const auto& [id, set] : labels) CHECK(set.size() == 1);
}

TEST_CASE("generation is deterministic in the seed") {
    testsupport::TempDir a("syn"), b("syn"), c("syn");
    SyntheticOptions o;
    o.seed = 11;
    const auto x = make_planted_corpus(a.path(), o);
    const auto y = make_planted_corpus(b.path(), o);
    CHECK(x.conversations == y.conversations);
    for (const auto& [id, s] : x.stickers) {
        CHECK(read_bytes(s.image_ref) == read_bytes(y.stickers.at(id).image_ref));
    }
    o.seed = 12;
    CHECK(make_planted_corpus(c.path(), o).conversations != x.conversations);
}

TEST_CASE("the hand-built solution is perfect on every split") {
    const auto& corpus = testsupport::planted_corpus();
    testsupport::Workbench wb(corpus, PipelineConfig{});
    const auto params = planted_solution(wb.data, wb.encoder, wb.initial());
    CHECK(wb.p_at_1(wb.data.train, params) == 1.0);
    CHECK(wb.p_at_1(wb.data.valid, params) == 1.0);
    CHECK(wb.p_at_1(wb.test, params) == 1.0);
}

}
