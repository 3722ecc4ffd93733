#include <doctest.h>

#include "fixtures.hpp"
#include "stickersel/error.hpp"
#include "stickersel/encoders.hpp"
#include "stickersel/intention.hpp"
#include "stickersel/scoring.hpp"

#include <cmath>

using namespace stickersel;

namespace {

double cosine(const Embedding& a, const Embedding& b) {
    double ab = 0, aa = 0, bb = 0;
    for (std::size_t i = 0; i < a.dim(); ++i) {
        ab += double(a.values[i]) * b.values[i];
        aa += double(a.values[i]) * a.values[i];
        bb += double(b.values[i]) * b.values[i];
    }
    return ab / std::sqrt(aa * bb);
}

class FlakyDescriber final : public AttributeDescriber {
public:
    std::string describe(const Sticker&, std::string_view, Attribute a, std::string_view) const override {
        if (a == Attribute::FacialExpression) throw std::runtime_error("timeout");
        return "fine";
    }
    std::string id() const override { return "flaky"; }
};

}  // namespace

TEST_SUITE("encoders") {

TEST_CASE("stub text encoder is deterministic") {
    StubTextEncoder enc;
    CHECK(enc.encode("hello").embedding == enc.encode("hello").embedding);
}

TEST_CASE("distinct words are far from parallel") {
    StubTextEncoder enc;
    CHECK(cosine(enc.encode("hello").embedding, enc.encode("world").embedding) < 0.999);
    CHECK(cosine(enc.encode("joy").embedding, enc.encode("gratitude").embedding) < 0.999);
}

TEST_CASE("shape contract on text") {
    StubTextEncoder enc(32, 3);
    for (const char* s : {"", "!!!", "a very ordinary sentence", "\xE4\xBD\xA0\xE5\xA5\xBD"}) {
        const auto e = encode_text(s, enc);
        CHECK(e.embedding.dim() == 32);
        for (float v : e.embedding.values) CHECK(std::isfinite(v));
    }
}

TEST_CASE("over-long text is truncated and reported") {
    StubTextEncoder enc(16, 1, 4);
    const auto e = enc.encode("one two three four five six");
    CHECK(e.truncated);
    CHECK(e.tokens_used == 4);
    CHECK(e.embedding == enc.encode("one two three four").embedding);
    CHECK_FALSE(enc.encode("one two").truncated);
}

TEST_CASE("stub visual encoder: 4 regions of dim 64, deterministic") {
    StubVisualEncoder enc;
    const auto img = fixtures::png_bytes(1);
    const auto r = enc.encode(img);
    CHECK(r.count() == 4);
    CHECK(r.dim() == 64);
    CHECK(r == enc.encode(img));
}

TEST_CASE("different images differ in some region") {
    StubVisualEncoder enc;
    const auto a = enc.encode(fixtures::png_bytes(1));
    const auto b = enc.encode(fixtures::png_bytes(2));
    double lowest = 1.0;
    for (const auto& ra : a.regions) {
        for (const auto& rb : b.regions) lowest = std::min(lowest, cosine(ra, rb));
    }
    CHECK(lowest < 0.999);
}

TEST_CASE("undecodable image is an asset error") {
    StubVisualEncoder enc;
    CHECK_THROWS_AS(enc.encode("GIF89a-but-not-really"), AssetError);
}

TEST_CASE("stub describer: four deterministic strings, caption echoed") {
    StubDescriber d;
    Sticker s{"s", "s.png", std::string("see you tomorrow")};
    testsupport::TempDir dir("enc");
    fixtures::write_file(dir / "s.png", fixtures::png_bytes(4));
    s.image_ref = dir / "s.png";
    const auto a = describe_attributes(s, d);
    const auto b = describe_attributes(s, d);
    CHECK(a == b);
    for (auto attr : kAttributes) CHECK_FALSE(a[attr].empty());
    CHECK(a[Attribute::Verbal].find("see you tomorrow") != std::string::npos);
    s.verbal_text.reset();
    CHECK(describe_attributes(s, d)[Attribute::Verbal] == "<none>");
}

TEST_CASE("describer failure names the facial expression prompt") {
    FlakyDescriber d;
    testsupport::TempDir dir("enc");
    fixtures::write_file(dir / "s.png", fixtures::png_bytes(4));
    Sticker s{"s", dir / "s.png", std::nullopt};
    try {
        describe_attributes(s, d);
        FAIL("expected BackendError");
    } catch (const BackendError& e) {
        CHECK(std::string(e.what()).find("facial expression") != std::string::npos);
    }
}

TEST_CASE("cached encoders reproduce direct encodes after reload") {
    testsupport::TempDir dir("enc");
    auto text = std::make_shared<StubTextEncoder>();
    auto vis = std::make_shared<StubVisualEncoder>();
    const auto img = fixtures::png_bytes(6);
    Embedding t1;
    RegionEmbeddings v1;
    {
        auto cache = std::make_shared<EmbeddingCache>(dir / "embeddings.cache");
        CachedTextEncoder ct(text, cache);
        CachedVisualEncoder cv(vis, cache);
        t1 = ct.encode("the cache should be exact").embedding;
        v1 = cv.encode(img);
    }
    auto cache = std::make_shared<EmbeddingCache>(dir / "embeddings.cache");
    CachedTextEncoder ct(text, cache);
    CachedVisualEncoder cv(vis, cache);
    CHECK(ct.encode("the cache should be exact").embedding == t1);
    CHECK(cv.encode(img) == v1);
    CHECK(cache->counters().misses == 0);
    CHECK(t1 == text->encode("the cache should be exact").embedding);
    CHECK(v1 == vis->encode(img));
}

TEST_CASE("knowledge strings differing in one character use different cache keys") {
    auto cache = std::make_shared<EmbeddingCache>();
    CachedTextEncoder ct(std::make_shared<StubTextEncoder>(), cache);
    ct.encode("User_1: hi [SEP] xIntent: to relax");
    ct.encode("User_1: hi [SEP] xIntent: to relay");
    CHECK(cache->size() == 2);
}

TEST_CASE("attribute prompt substitution and codes") {
    CHECK(attribute_prompt(kDefaultAttributePrompt, Attribute::FacialExpression).find("facial expression") !=
          std::string::npos);
    CHECK_THROWS_AS(attribute_prompt("no placeholder", Attribute::Gesture), ConfigError);
    for (auto a : kAttributes) CHECK(parse_attribute_code(attribute_code(a)) == a);
    CHECK_THROWS_AS(parse_attribute_code('X'), ConfigError);
}

TEST_CASE("embedding checks") {
    Embedding e;
    CHECK_THROWS_AS(check_embedding(e), ShapeError);
    e.values = {1.0f, std::nanf("")};
    CHECK_THROWS_AS(check_embedding(e), ValidationError);
}

}
