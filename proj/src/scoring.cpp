#include "stickersel/scoring.hpp"

#include "stickersel/error.hpp"

#include <algorithm>

namespace stickersel {

MatchScore match_score(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size()) {
        throw ShapeError("cosine over dims " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
    }
    const double na = a.norm();
    const double nb = b.norm();
    if (na == 0.0 || nb == 0.0) return {0.0, true};
    return {a.dot(b) / (na * nb), false};
}

Eigen::VectorXd match_score_grad_b(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const double na = a.norm();
    const double nb = b.norm();
    if (na == 0.0 || nb == 0.0) return Eigen::VectorXd::Zero(b.size());
    const double cos = a.dot(b) / (na * nb);
    return a / (na * nb) - cos * b / (nb * nb);
}

std::string to_string(LossForm f) { return f == LossForm::ClampedStandard ? "clamped_standard" : "paper_literal"; }

LossForm parse_loss_form(const std::string& s) {
    if (s == "clamped_standard") return LossForm::ClampedStandard;
    if (s == "paper_literal") return LossForm::PaperLiteral;
    throw ConfigError("unknown loss form '" + s + "' (expected clamped_standard or paper_literal)");
}

RetrievalLoss retrieval_loss(std::span<const double> pos_scores, std::span<const double> neg_scores, double margin,
                             LossForm form) {
    if (pos_scores.empty() || neg_scores.empty()) {
        throw ArityError("retrieval loss needs at least one positive and one negative score");
    }
    RetrievalLoss out;
    out.d_pos.assign(pos_scores.size(), 0.0);
    out.d_neg.assign(neg_scores.size(), 0.0);
    const double pairs = static_cast<double>(pos_scores.size() * neg_scores.size());
    double total = 0.0;
    for (std::size_t i = 0; i < pos_scores.size(); ++i) {
        for (std::size_t j = 0; j < neg_scores.size(); ++j) {
            const double sp = pos_scores[i];
            const double sn = neg_scores[j];
            const double term = form == LossForm::ClampedStandard ? margin + sn - sp : sn - (1.0 - sp) + margin;
            if (term <= 0.0) continue;
            total += term;
            out.d_neg[j] += 1.0 / pairs;
            out.d_pos[i] += (form == LossForm::ClampedStandard ? -1.0 : 1.0) / pairs;
        }
    }
    out.value = total / pairs;
    return out;
}

}  // namespace stickersel
