#pragma once
// Cosine matching and the ranking objective.

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

namespace stickersel {

struct MatchScore {
    double value = 0.0;
    bool degenerate = false;  // a zero vector was involved; value is 0
};

// Cosine similarity; ShapeError on unequal dims.
MatchScore match_score(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// d cos(a, b) / d b. Zero when either vector is zero.
Eigen::VectorXd match_score_grad_b(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

enum class LossForm {
    ClampedStandard,  // max(0, margin + s_neg - s_pos)
    PaperLiteral,     // max(0, s_neg - (1 - s_pos) + margin)
};

std::string to_string(LossForm f);
LossForm parse_loss_form(const std::string& s);

struct RetrievalLoss {
    double value = 0.0;
    std::vector<double> d_pos;  // d value / d pos_scores[i]
    std::vector<double> d_neg;
};

// Mean over all (positive, negative) pairs. ArityError when either list is empty.
RetrievalLoss retrieval_loss(std::span<const double> pos_scores, std::span<const double> neg_scores, double margin,
                             LossForm form);

inline double joint_loss(double l_ret, double l_int, double lambda_ret, double lambda_int) {
    return lambda_ret * l_ret + lambda_int * l_int;
}

}  // namespace stickersel
