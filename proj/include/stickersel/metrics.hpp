#pragma once
// Retrieval metrics and reports.
//
// A retrieved sticker counts as correct when it shares the gold sticker's
// intention label; the gold sticker itself is always relevant.

#include "stickersel/dataset.hpp"
#include "stickersel/matcher.hpp"

#include <json.hpp>

#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace stickersel {

inline constexpr std::string_view kRelevanceRule =
    "relevant = stickers annotated with the gold intention label in any split, plus the gold sticker";

struct RelevanceJudgment {
    std::string query_id;
    std::string gold_sticker_id;
    std::string gold_label;
    std::set<std::string> relevant;  // always contains the gold sticker
};

RelevanceJudgment make_judgment(const Conversation& c, const StickerLabels& labels);

// 1 when any of the top n ids is relevant. n past the ranking length is
// evaluated at full length and reported through `clamped`.
int precision_at_n(std::span<const RankedEntry> ranking, const RelevanceJudgment& judgment, std::size_t n,
                   bool* clamped = nullptr);

// Mean over relevant items r_i (in rank order) of i / rank(r_i), divided by
// the size of the relevant set.
double average_precision(std::span<const RankedEntry> ranking, const RelevanceJudgment& judgment);

// Mean AP; throws EvaluationError naming a query without a judgment.
double mean_average_precision(std::span<const RankedResult> rankings,
                              const std::map<std::string, RelevanceJudgment>& judgments);

// 1 when `gold` sits in the top k of the candidate ranking.
int recall_k_of_n(std::span<const std::string> ranking, const std::string& gold, std::size_t k);

struct TTestResult {
    double t = 0.0;
    double p = 1.0;
    std::size_t df = 0;
};

// Two-tailed paired t-test. Identical lists give t = 0, p = 1; any other
// zero-variance difference vector throws DegenerateError.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

struct QueryTrace {
    std::string query_id;
    Scenario scenario = Scenario::SR;
    std::string gold_sticker_id;
    std::string gold_label;
    std::string predicted_label;
    std::size_t gold_rank = 0;  // 1-based
    double average_precision = 0.0;
    std::map<std::size_t, int> hits;  // n -> P@n indicator
    std::vector<RankedEntry> top;
};

struct MetricsSummary {
    std::size_t queries = 0;
    double map = 0.0;
    std::map<std::size_t, double> precision;  // n -> P@n
};

struct MetricsReport {
    MetricsSummary overall;
    std::map<std::string, MetricsSummary> by_scenario;  // "SR", "DR"
    std::map<std::string, double> recall;               // "R10@1" -> value
    std::vector<QueryTrace> queries;
    bool clamped = false;
    nlohmann::json config = nlohmann::json::object();
};

MetricsSummary summarize(std::span<const QueryTrace> traces, std::span<const std::size_t> ns);

nlohmann::json report_to_json(const MetricsReport& r);
// One row per group (all, SR, DR): group,queries,mAP,P@n...
std::string report_to_csv(const MetricsReport& r);

}  // namespace stickersel
