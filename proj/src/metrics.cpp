#include "stickersel/metrics.hpp"

#include "stickersel/error.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <sstream>

namespace stickersel {

using nlohmann::json;

RelevanceJudgment make_judgment(const Conversation& c, const StickerLabels& labels) {
    if (c.gold_sticker_id.empty() || c.intention_label.empty()) {
        throw EvaluationError("conversation '" + c.id + "' has no gold annotation");
    }
    RelevanceJudgment j;
    j.query_id = c.id;
    j.gold_sticker_id = c.gold_sticker_id;
    j.gold_label = c.intention_label;
    j.relevant.insert(c.gold_sticker_id);
    for (const auto& [sticker, ls] : labels) {
        if (ls.count(c.intention_label)) j.relevant.insert(sticker);
    }
    return j;
}

int precision_at_n(std::span<const RankedEntry> ranking, const RelevanceJudgment& judgment, std::size_t n,
                   bool* clamped) {
    if (n == 0) throw RangeError("P@N needs N >= 1");
    if (clamped) *clamped = n > ranking.size();
    const auto m = std::min(n, ranking.size());
    for (std::size_t i = 0; i < m; ++i) {
        if (judgment.relevant.count(ranking[i].sticker_id)) return 1;
    }
    return 0;
}

double average_precision(std::span<const RankedEntry> ranking, const RelevanceJudgment& judgment) {
    if (judgment.relevant.empty()) throw EvaluationError("query '" + judgment.query_id + "' has no relevant items");
    double sum = 0.0;
    std::size_t found = 0;
    for (std::size_t r = 0; r < ranking.size(); ++r) {
        if (judgment.relevant.count(ranking[r].sticker_id)) {
            ++found;
            sum += static_cast<double>(found) / static_cast<double>(r + 1);
        }
    }
    return sum / static_cast<double>(judgment.relevant.size());
}

double mean_average_precision(std::span<const RankedResult> rankings,
                              const std::map<std::string, RelevanceJudgment>& judgments) {
    if (rankings.empty()) throw EvaluationError("mAP over zero queries");
    double sum = 0.0;
    for (const auto& r : rankings) {
        auto it = judgments.find(r.query_id);
        if (it == judgments.end()) throw EvaluationError("no relevance judgment for query '" + r.query_id + "'");
        sum += average_precision(r.entries, it->second);
    }
    return sum / static_cast<double>(rankings.size());
}

int recall_k_of_n(std::span<const std::string> ranking, const std::string& gold, std::size_t k) {
    for (std::size_t i = 0; i < ranking.size(); ++i) {
        if (ranking[i] == gold) return i < k ? 1 : 0;
    }
    throw EvaluationError("positive '" + gold + "' is not among the candidates");
}

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ArityError("paired t-test needs equal-length score lists");
    const auto n = a.size();
    if (n < 2) throw ArityError("paired t-test needs at least 2 pairs");
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i] - mean;
        ss += d * d;
    }
    TTestResult r;
    r.df = n - 1;
    if (ss == 0.0) {
        if (mean == 0.0) return r;
        throw DegenerateError("differences have zero variance; p-value undefined");
    }
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    r.t = mean / (sd / std::sqrt(static_cast<double>(n)));
    boost::math::students_t dist(static_cast<double>(r.df));
    r.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(r.t)));
    return r;
}

MetricsSummary summarize(std::span<const QueryTrace> traces, std::span<const std::size_t> ns) {
    MetricsSummary s;
    s.queries = traces.size();
    for (auto n : ns) s.precision[n] = 0.0;
    if (traces.empty()) return s;
    for (const auto& t : traces) {
        s.map += t.average_precision;
        for (auto n : ns) s.precision[n] += t.hits.at(n);
    }
    const auto q = static_cast<double>(traces.size());
    s.map /= q;
    for (auto& [n, v] : s.precision) v /= q;
    return s;
}

namespace {

json summary_json(const MetricsSummary& s) {
    json p = json::object();
    for (const auto& [n, v] : s.precision) p["P@" + std::to_string(n)] = v;
    return {{"queries", s.queries}, {"mAP", s.map}, {"precision", p}};
}

}  // namespace

json report_to_json(const MetricsReport& r) {
    json by = json::object();
    for (const auto& [k, s] : r.by_scenario) by[k] = summary_json(s);
    json queries = json::array();
    for (const auto& q : r.queries) {
        json hits = json::object();
        for (const auto& [n, h] : q.hits) hits["P@" + std::to_string(n)] = h;
        json top = json::array();
        for (const auto& e : q.top) top.push_back({{"sticker_id", e.sticker_id}, {"score", e.score}});
        queries.push_back({{"query_id", q.query_id},
                           {"scenario", to_string(q.scenario)},
                           {"gold_sticker_id", q.gold_sticker_id},
                           {"gold_label", q.gold_label},
                           {"predicted_label", q.predicted_label},
                           {"gold_rank", q.gold_rank},
                           {"average_precision", q.average_precision},
                           {"hits", hits},
                           {"top", top}});
    }
    return {{"overall", summary_json(r.overall)},
            {"by_scenario", by},
            {"recall", r.recall},
            {"relevance_rule", kRelevanceRule},
            {"clamped", r.clamped},
            {"config", r.config},
            {"queries", queries}};
}

std::string report_to_csv(const MetricsReport& r) {
    std::ostringstream out;
    out << "group,queries,mAP";
    for (const auto& [n, v] : r.overall.precision) out << ",P@" << n;
    out << '\n';
    auto row = [&](const std::string& name, const MetricsSummary& s) {
        out << name << ',' << s.queries << ',' << s.map;
        for (const auto& [n, v] : s.precision) out << ',' << v;
        out << '\n';
    };
    row("all", r.overall);
    for (const auto& [k, s] : r.by_scenario) row(k, s);
    return out.str();
}

}  // namespace stickersel
