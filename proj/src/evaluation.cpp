#include "stickersel/evaluation.hpp"

#include "stickersel/error.hpp"
#include "stickersel/hashing.hpp"

#include <algorithm>
#include <random>

namespace stickersel {

std::vector<EvalQuery> prepare_queries(const QueryEncoder& encoder, std::span<const Conversation* const> conversations,
                                       std::size_t window) {
    std::vector<EvalQuery> out;
    out.reserve(conversations.size());
    for (const auto* c : conversations) out.push_back({c, encoder.context_embedding(*c, window)});
    return out;
}

MetricsReport evaluate_queries(std::span<const EvalQuery> queries, const ModelParameters& params,
                               const QueryEncoder& encoder, const StickerIndex& index, const StickerLabels& labels,
                               const EvaluationOptions& options) {
    MetricsReport report;
    std::map<std::string, std::size_t> recall_hits;
    for (const auto& q : queries) {
        const auto& conv = *q.conversation;
        const auto pred = predict_intention(q.context, params.intention);
        const auto label = intention_for_embedding(pred, std::nullopt, IntentionMode::Inference);
        const auto ranked = rank(encoder.query_for(q.context, label), index, index.size(), conv.id);
        const auto judgment = make_judgment(conv, labels);

        QueryTrace t;
        t.query_id = conv.id;
        t.scenario = conv.scenario;
        t.gold_sticker_id = conv.gold_sticker_id;
        t.gold_label = conv.intention_label;
        t.predicted_label = encoder.taxonomy()[label];
        t.average_precision = average_precision(ranked.entries, judgment);
        for (auto n : options.ns) {
            bool clamped = false;
            t.hits[n] = precision_at_n(ranked.entries, judgment, n, &clamped);
            report.clamped = report.clamped || clamped;
        }
        for (std::size_t i = 0; i < ranked.entries.size(); ++i) {
            if (ranked.entries[i].sticker_id == conv.gold_sticker_id) t.gold_rank = i + 1;
        }
        if (t.gold_rank == 0) throw EvaluationError("gold sticker of '" + conv.id + "' is not in the index");
        const auto top = std::min(options.trace_top, ranked.entries.size());
        t.top.assign(ranked.entries.begin(), ranked.entries.begin() + static_cast<std::ptrdiff_t>(top));

        if (options.recall_candidates > 0) {
            const auto n = std::min(options.recall_candidates, index.size());
            std::vector<std::string> pool;
            for (const auto& id : index.ids) {
                if (id != conv.gold_sticker_id) pool.push_back(id);
            }
            std::mt19937_64 rng(stable_hash64(KeyBuilder().add(options.seed).add(conv.id).bytes()));
            std::shuffle(pool.begin(), pool.end(), rng);
            pool.resize(n - 1);
            pool.push_back(conv.gold_sticker_id);
            std::sort(pool.begin(), pool.end());
            std::vector<std::string> candidates;
            for (const auto& e : ranked.entries) {
                if (std::binary_search(pool.begin(), pool.end(), e.sticker_id)) candidates.push_back(e.sticker_id);
            }
            for (auto k : options.recall_ks) {
                recall_hits["R" + std::to_string(n) + "@" + std::to_string(k)] +=
                    static_cast<std::size_t>(recall_k_of_n(candidates, conv.gold_sticker_id, k));
            }
        }
        report.queries.push_back(std::move(t));
    }

    report.overall = summarize(report.queries, options.ns);
    for (auto s : {Scenario::SR, Scenario::DR}) {
        std::vector<QueryTrace> group;
        for (const auto& t : report.queries) {
            if (t.scenario == s) group.push_back(t);
        }
        report.by_scenario[to_string(s)] = summarize(group, options.ns);
    }
    for (const auto& [key, hits] : recall_hits) {
        report.recall[key] = static_cast<double>(hits) / static_cast<double>(queries.size());
    }
    return report;
}

MetricsReport evaluate_corpus(const Corpus& corpus, const Checkpoint& checkpoint, const Backends& backends,
                              const EvaluationRequest& request, const std::vector<StickerAsset>* assets) {
    std::vector<StickerAsset> own;
    if (!assets) {
        own = featurize_stickers(corpus.stickers, backends);
        assets = &own;
    }
    const auto features = features_of(*assets);
    const auto options = model_options(checkpoint.config);
    const auto index = build_index(checkpoint.params, features, options, checkpoint.model_version());
    const QueryEncoder encoder(checkpoint.config, backends, checkpoint.taxonomy, captions_from(corpus));
    const auto convs = corpus.split(request.split);
    if (convs.empty()) throw EvaluationError("split " + to_string(request.split) + " has no conversations");
    const auto queries = prepare_queries(encoder, convs, request.window);
    auto report = evaluate_queries(queries, checkpoint.params, encoder, index, sticker_labels(corpus), request.options);
    report.config = to_json(checkpoint.config);
    report.config["evaluation"] = {
        {"split", to_string(request.split)},
        {"context_window", request.window == 0 ? checkpoint.config.training.context_window : request.window},
        {"model_version", checkpoint.model_version()},
    };
    return report;
}

}  // namespace stickersel
