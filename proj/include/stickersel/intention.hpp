#pragma once
// Knowledge-enhanced intention predictor.
//
// The context (plus assembled commonsense) is encoded once by the frozen text
// encoder; a softmax classifier over the taxonomy predicts the intention, and
// the predicted label's surface string is re-encoded as the intention
// embedding that the selector matches against stickers.

#include "stickersel/context.hpp"
#include "stickersel/encoders.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <optional>
#include <string>
#include <vector>

namespace stickersel {

Eigen::VectorXd to_vector(const Embedding& e);

struct IntentionHead {
    Eigen::MatrixXd weight;  // labels x dim
    Eigen::VectorXd bias;    // labels

    std::size_t labels() const { return static_cast<std::size_t>(weight.rows()); }
    std::size_t dim() const { return static_cast<std::size_t>(weight.cols()); }
};

IntentionHead make_intention_head(std::size_t labels, std::size_t dim);  // zeros
IntentionHead init_intention_head(std::size_t labels, std::size_t dim, std::uint64_t seed);

struct IntentionPrediction {
    Eigen::VectorXd class_probs;
    std::size_t label = 0;
};

// Max-shifted softmax.
Eigen::VectorXd softmax(const Eigen::VectorXd& logits);
// Ties go to the lowest index.
std::size_t argmax_lowest(const Eigen::VectorXd& v);

// Throws ShapeError when dim(h_t) != head.dim().
IntentionPrediction predict_intention(const Eigen::VectorXd& h_t, const IntentionHead& head);

// -log(probs[gold]); RangeError when gold is outside [0, K).
double intention_loss(const Eigen::VectorXd& class_probs, std::size_t gold);
// Mean over samples.
double intention_loss(std::span<const Eigen::VectorXd> class_probs, std::span<const std::size_t> gold);

// Accumulates scale * d(-log softmax(W h + b)[gold]) / d(W, b) into grad.
void intention_backward(const Eigen::VectorXd& h_t, const Eigen::VectorXd& class_probs, std::size_t gold,
                        double scale, IntentionHead& grad);

// "speaker: utterance" lines, then the separator, then the knowledge string.
std::string context_input_text(const Conversation& conversation, const std::string& knowledge,
                               const CaptionLookup& captions = {}, std::size_t window = 0);

TextEncoding encode_context(const Conversation& conversation, const std::string& knowledge,
                            const TextEncoder& encoder, const CaptionLookup& captions = {},
                            std::size_t window = 0);

// Encodes the label's surface string; TaxonomyError for unknown labels.
Embedding encode_intention(const std::string& label, std::span<const std::string> taxonomy,
                           const TextEncoder& encoder);

// Which label feeds the intention embedding. Training uses the gold label;
// inference must use the prediction.
enum class IntentionMode { Inference, TeacherForcing };

// Returns the label index to embed. Throws PreconditionError if
// TeacherForcing is requested without a gold label.
std::size_t intention_for_embedding(const IntentionPrediction& prediction, std::optional<std::size_t> gold,
                                    IntentionMode mode);

}  // namespace stickersel
