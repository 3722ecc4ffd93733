#include <doctest.h>

#include "stickersel/error.hpp"
#include "stickersel/knowledge.hpp"

using namespace stickersel;

namespace {

class FailingGenerator final : public CommonsenseGenerator {
public:
    std::string generate(std::string_view, RelationType r) const override {
        if (r == RelationType::XWant) throw std::runtime_error("model offline");
        return "ok";
    }
    std::string id() const override { return "failing"; }
};

class CountingGenerator final : public CommonsenseGenerator {
public:
    mutable int calls = 0;
    std::string generate(std::string_view text, RelationType) const override {
        ++calls;
        return "seen " + std::string(text);
    }
    std::string id() const override { return "counting"; }
};

}  // namespace

TEST_SUITE("knowledge") {

TEST_CASE("stub generator is deterministic and seed dependent") {
    StubGenerator g(7);
    const auto a = g.generate("User_1: I failed my driving test", RelationType::XIntent);
    CHECK_FALSE(a.empty());
    CHECK(a == g.generate("User_1: I failed my driving test", RelationType::XIntent));
    CHECK(StubGenerator(7).id() != StubGenerator(8).id());
}

TEST_CASE("blank context gives <none> without calling the backend") {
    CountingGenerator g;
    CHECK(infer_relation("   ", RelationType::XReact, g) == "<none>");
    CHECK(g.calls == 0);
    Conversation empty;
    CHECK(infer_relation(empty, RelationType::XNeed, g) == "<none>");
}

TEST_CASE("assembly uses canonical order") {
    std::map<RelationType, std::string> m{{RelationType::XReact, "e"},
                                          {RelationType::XEffect, "d"},
                                          {RelationType::XIntent, "a"},
                                          {RelationType::XWant, "c"},
                                          {RelationType::XNeed, "b"}};
    CHECK(assemble_knowledge(m) == "xIntent: a; xNeed: b; xWant: c; xEffect: d; xReact: e");
}

TEST_CASE("four relations is an arity error") {
    std::map<RelationType, std::string> m{
        {RelationType::XIntent, "a"}, {RelationType::XNeed, "b"}, {RelationType::XWant, "c"}, {RelationType::XEffect, "d"}};
    CHECK_THROWS_AS(assemble_knowledge(m), ArityError);
}

TEST_CASE("backend failure names the relation") {
    FailingGenerator g;
    try {
        infer_knowledge("User_1: hi", g);
        FAIL("expected BackendError");
    } catch (const BackendError& e) {
        CHECK(std::string(e.what()).find("xWant") != std::string::npos);
    }
}

TEST_CASE("cached generator calls the backend once per key") {
    auto inner = std::make_shared<CountingGenerator>();
    auto cache = std::make_shared<StringCache>();
    CachedGenerator g(inner, cache);
    const auto a = g.generate("ctx", RelationType::XIntent);
    const auto b = g.generate("ctx", RelationType::XIntent);
    CHECK(a == b);
    CHECK(inner->calls == 1);
    g.generate("ctx", RelationType::XNeed);
    g.generate("ctx!", RelationType::XIntent);
    CHECK(inner->calls == 3);
    CHECK(cache->size() == 3);
}

TEST_CASE("relation names round trip") {
    for (auto r : kRelations) CHECK(parse_relation(relation_name(r)) == r);
    CHECK_THROWS_AS(parse_relation("xFeel"), ValidationError);
}

}
