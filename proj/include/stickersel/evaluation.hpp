#pragma once
// Runs the retrieval pipeline over annotated conversations and scores it.

#include "stickersel/checkpoint.hpp"
#include "stickersel/matcher.hpp"
#include "stickersel/metrics.hpp"

#include <span>
#include <vector>

namespace stickersel {

// A conversation with its frozen context embedding.
struct EvalQuery {
    const Conversation* conversation = nullptr;
    Eigen::VectorXd context;
};

// window 0 uses the encoder's configured context window.
std::vector<EvalQuery> prepare_queries(const QueryEncoder& encoder, std::span<const Conversation* const> conversations,
                                       std::size_t window = 0);

struct EvaluationOptions {
    std::vector<std::size_t> ns{1, 3, 5};
    // Candidate pool size for Rn@k (0 disables). Each query draws n - 1
    // distractors from the index, seeded by `seed` and the query id.
    std::size_t recall_candidates = 0;
    std::vector<std::size_t> recall_ks{1, 2, 5};
    std::uint64_t seed = 0;
    std::size_t trace_top = 5;
};

// Scores queries with the intention head in inference mode.
MetricsReport evaluate_queries(std::span<const EvalQuery> queries, const ModelParameters& params,
                               const QueryEncoder& encoder, const StickerIndex& index, const StickerLabels& labels,
                               const EvaluationOptions& options = {});

struct EvaluationRequest {
    Split split = Split::Test;
    std::size_t window = 0;
    EvaluationOptions options;
};

// End to end: featurize (or reuse `assets`), build the index, encode the
// split and score it. The config echo records the effective configuration.
MetricsReport evaluate_corpus(const Corpus& corpus, const Checkpoint& checkpoint, const Backends& backends,
                              const EvaluationRequest& request, const std::vector<StickerAsset>* assets = nullptr);

}  // namespace stickersel
