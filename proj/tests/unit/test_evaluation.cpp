#include <doctest.h>

#include "pipeline.hpp"
#include "stickersel/error.hpp"
#include "stickersel/evaluation.hpp"
#include "stickersel/synthetic.hpp"

using namespace stickersel;

namespace {

Checkpoint planted_checkpoint(const Corpus& corpus, const testsupport::Workbench& wb) {
    Checkpoint c;
    c.config = wb.config;
    c.taxonomy = corpus.taxonomy;
    c.backends = wb.backends.identities();
    c.params = planted_solution(wb.data, wb.encoder, wb.initial());
    return c;
}

}  // namespace

TEST_SUITE("evaluation") {

TEST_CASE("planted solution scores perfectly end to end") {
    const auto& corpus = testsupport::planted_corpus();
    testsupport::Workbench wb(corpus, PipelineConfig{});
    const auto ckpt = planted_checkpoint(corpus, wb);
    EvaluationRequest req;
    const auto r = evaluate_corpus(corpus, ckpt, wb.backends, req, &wb.assets);
    CHECK(r.overall.queries == corpus.split(Split::Test).size());
    CHECK(r.overall.map == 1.0);
    CHECK(r.overall.precision.at(1) == 1.0);
    for (const auto& q : r.queries) CHECK(q.predicted_label == q.gold_label);
}

TEST_CASE("config echo records the evaluation settings") {
    const auto& corpus = testsupport::planted_corpus();
    testsupport::Workbench wb(corpus, PipelineConfig{});
    const auto ckpt = planted_checkpoint(corpus, wb);
    EvaluationRequest req;
    req.split = Split::Valid;
    req.window = 3;
    const auto r = evaluate_corpus(corpus, ckpt, wb.backends, req, &wb.assets);
    CHECK(r.config["evaluation"]["split"] == "valid");
    CHECK(r.config["evaluation"]["context_window"] == 3);
    CHECK(r.config["evaluation"]["model_version"] == ckpt.model_version());
    CHECK(r.config["model"]["attributes"] == "GPFV");
    req.window = 0;
    const auto d = evaluate_corpus(corpus, ckpt, wb.backends, req, &wb.assets);
    CHECK(d.config["evaluation"]["context_window"] == 6);
}

TEST_CASE("P@N never decreases in N and values stay in [0, 1]") {
    const auto& corpus = testsupport::planted_corpus();
    testsupport::Workbench wb(corpus, PipelineConfig{});
    EvaluationOptions o;
    o.ns = {1, 2, 3, 5, 10};
    const auto index = build_index(wb.initial(), wb.data.stickers, model_options(wb.config), "x");
    const auto r = evaluate_queries(wb.test, wb.initial(), wb.encoder, index, wb.data.labels, o);
    double prev = 0.0;
    for (const auto& [n, v] : r.overall.precision) {
        CHECK(v >= prev);
        CHECK(v <= 1.0);
        prev = v;
    }
    CHECK(r.overall.map >= 0.0);
    CHECK(r.overall.map <= 1.0);
    CHECK(r.by_scenario.at("SR").queries + r.by_scenario.at("DR").queries == r.overall.queries);
}

TEST_CASE("recall over the full pool matches the gold rank") {
    const auto& corpus = testsupport::planted_corpus();
    testsupport::Workbench wb(corpus, PipelineConfig{});
    EvaluationOptions o;
    o.recall_candidates = 10;
    o.recall_ks = {1, 5};
    const auto index = build_index(wb.initial(), wb.data.stickers, model_options(wb.config), "x");
    const auto r = evaluate_queries(wb.test, wb.initial(), wb.encoder, index, wb.data.labels, o);
    double at1 = 0, at5 = 0;
    for (const auto& q : r.queries) {
        at1 += q.gold_rank <= 1;
        at5 += q.gold_rank <= 5;
    }
    const auto n = static_cast<double>(r.queries.size());
    CHECK(r.recall.at("R10@1") == doctest::Approx(at1 / n));
    CHECK(r.recall.at("R10@5") == doctest::Approx(at5 / n));
}

TEST_CASE("smaller candidate pools are seeded and reproducible") {
    const auto& corpus = testsupport::planted_corpus();
    testsupport::Workbench wb(corpus, PipelineConfig{});
    EvaluationOptions o;
    o.recall_candidates = 4;
    o.recall_ks = {1, 4};
    const auto index = build_index(wb.initial(), wb.data.stickers, model_options(wb.config), "x");
    const auto a = evaluate_queries(wb.test, wb.initial(), wb.encoder, index, wb.data.labels, o);
    const auto b = evaluate_queries(wb.test, wb.initial(), wb.encoder, index, wb.data.labels, o);
    CHECK(a.recall == b.recall);
    CHECK(a.recall.at("R4@4") == 1.0);
}

TEST_CASE("an empty split is an evaluation error") {
    const auto& corpus = testsupport::planted_corpus();
    testsupport::Workbench wb(corpus, PipelineConfig{});
    auto trimmed = corpus;
    std::erase_if(trimmed.conversations, [](const Conversation& c) { return c.split == Split::Test; });
    CHECK_THROWS_AS(evaluate_corpus(trimmed, planted_checkpoint(corpus, wb), wb.backends, EvaluationRequest{},
                                    &wb.assets),
                    EvaluationError);
}

}
