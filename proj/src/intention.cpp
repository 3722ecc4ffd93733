#include "stickersel/intention.hpp"

#include "stickersel/error.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace stickersel {

Eigen::VectorXd to_vector(const Embedding& e) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(e.values.size()));
    for (std::size_t i = 0; i < e.values.size(); ++i) v[static_cast<Eigen::Index>(i)] = e.values[i];
    return v;
}

IntentionHead make_intention_head(std::size_t labels, std::size_t dim) {
    IntentionHead h;
    h.weight = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(labels), static_cast<Eigen::Index>(dim));
    h.bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(labels));
    return h;
}

IntentionHead init_intention_head(std::size_t labels, std::size_t dim, std::uint64_t seed) {
    auto h = make_intention_head(labels, dim);
    std::mt19937_64 rng(seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (Eigen::Index i = 0; i < h.weight.size(); ++i) h.weight.data()[i] = u(rng);
    return h;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
    const double m = logits.maxCoeff();
    Eigen::VectorXd e = (logits.array() - m).exp();
    return e / e.sum();
}

std::size_t argmax_lowest(const Eigen::VectorXd& v) {
    std::size_t best = 0;
    for (Eigen::Index i = 1; i < v.size(); ++i) {
        if (v[i] > v[static_cast<Eigen::Index>(best)]) best = static_cast<std::size_t>(i);
    }
    return best;
}

IntentionPrediction predict_intention(const Eigen::VectorXd& h_t, const IntentionHead& head) {
    if (static_cast<std::size_t>(h_t.size()) != head.dim()) {
        throw ShapeError("intention head expects dim " + std::to_string(head.dim()) + ", got " +
                         std::to_string(h_t.size()));
    }
    IntentionPrediction p;
    p.class_probs = softmax(head.weight * h_t + head.bias);
    p.label = argmax_lowest(p.class_probs);
    return p;
}

double intention_loss(const Eigen::VectorXd& class_probs, std::size_t gold) {
    if (gold >= static_cast<std::size_t>(class_probs.size())) {
        throw RangeError("gold label " + std::to_string(gold) + " outside [0, " +
                         std::to_string(class_probs.size()) + ")");
    }
    return -std::log(class_probs[static_cast<Eigen::Index>(gold)]);
}

double intention_loss(std::span<const Eigen::VectorXd> class_probs, std::span<const std::size_t> gold) {
    if (class_probs.size() != gold.size()) throw ArityError("probability and label counts differ");
    if (class_probs.empty()) return 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < gold.size(); ++i) total += intention_loss(class_probs[i], gold[i]);
    return total / static_cast<double>(gold.size());
}

void intention_backward(const Eigen::VectorXd& h_t, const Eigen::VectorXd& class_probs, std::size_t gold,
                        double scale, IntentionHead& grad) {
    Eigen::VectorXd d_logits = class_probs;
    d_logits[static_cast<Eigen::Index>(gold)] -= 1.0;
    d_logits *= scale;
    grad.weight.noalias() += d_logits * h_t.transpose();
    grad.bias += d_logits;
}

std::string context_input_text(const Conversation& conversation, const std::string& knowledge,
                               const CaptionLookup& captions, std::size_t window) {
    return render_context(conversation, captions, window) + std::string(kContextSeparator) + knowledge;
}

TextEncoding encode_context(const Conversation& conversation, const std::string& knowledge,
                            const TextEncoder& encoder, const CaptionLookup& captions, std::size_t window) {
    return encode_text(context_input_text(conversation, knowledge, captions, window), encoder);
}

Embedding encode_intention(const std::string& label, std::span<const std::string> taxonomy,
                           const TextEncoder& encoder) {
    if (std::find(taxonomy.begin(), taxonomy.end(), label) == taxonomy.end()) {
        throw TaxonomyError("intention label '" + label + "' is not in the taxonomy");
    }
    return encode_text(label, encoder).embedding;
}

std::size_t intention_for_embedding(const IntentionPrediction& prediction, std::optional<std::size_t> gold,
                                    IntentionMode mode) {
    if (mode == IntentionMode::Inference) return prediction.label;
    if (!gold) throw PreconditionError("teacher forcing needs the gold intention label");
    return *gold;
}

}  // namespace stickersel
