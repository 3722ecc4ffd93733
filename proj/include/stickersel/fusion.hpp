#pragma once
// Attribute-aware sticker representation.
//
// Visual regions and attribute-description embeddings are projected to a
// shared dimension d. Each attribute description queries the regions through
// multi-head scaled dot-product attention; the attention weights are
// max-pooled (over heads, then attributes) into a per-region relation score,
// and the projected regions are pooled with those weights into the
// relation-aware visual representation.

#include "stickersel/encoders.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <span>
#include <vector>

namespace stickersel {

// y = W x + b
struct AffineMap {
    Eigen::MatrixXd weight;  // out x in
    Eigen::VectorXd bias;    // out

    std::size_t in_dim() const { return static_cast<std::size_t>(weight.cols()); }
    std::size_t out_dim() const { return static_cast<std::size_t>(weight.rows()); }
};

struct FusionParameters {
    AffineMap vis;          // region dim -> d
    AffineMap des;          // text dim -> d
    Eigen::MatrixXd query;  // d x d; head m uses columns [m*dk, (m+1)*dk)
    Eigen::MatrixXd key;
    Eigen::MatrixXd value;
    std::size_t heads = 1;

    std::size_t d() const { return static_cast<std::size_t>(query.rows()); }
    std::size_t head_dim() const { return d() / heads; }
};

// Throws ConfigError when d is not divisible by heads, ShapeError when the
// maps disagree on d, ValidationError on non-finite entries.
void validate(const FusionParameters& p);

// Zero-mean uniform entries in [-1/sqrt(d), 1/sqrt(d)], zero biases.
FusionParameters init_fusion(std::size_t vis_in, std::size_t text_in, std::size_t d, std::size_t heads,
                             std::uint64_t seed);

// Row i of `rows` is one vector; result row i is W row_i + b.
Eigen::MatrixXd project(const Eigen::MatrixXd& rows, const AffineMap& map);
Eigen::VectorXd project(const Eigen::VectorXd& v, const AffineMap& map);

struct AttentionResult {
    std::vector<Eigen::VectorXd> weights;  // per head, one weight per region, sums to 1
    std::vector<Eigen::VectorXd> outputs;  // per head, convex combination of value rows (dim dk)
};

// query: projected attribute embedding (d); regions: projected regions (n x d).
AttentionResult cross_attention(const Eigen::VectorXd& query, const Eigen::MatrixXd& regions,
                                const FusionParameters& params);

struct RelationScore {
    Eigen::VectorXd per_region;  // max over attributes and heads
    double pooled = 0.0;         // max over regions
};

// Throws ArityError when any attribute in `required` has no attention map.
RelationScore relation_score(const std::map<Attribute, AttentionResult>& maps,
                             std::span<const Attribute> required = kAttributes);

enum class FuseMode { LiteralScalar, PerRegionWeighted };

std::string to_string(FuseMode m);
FuseMode parse_fuse_mode(const std::string& s);

struct FuseResult {
    Eigen::VectorXd representation;
    bool uniform_fallback = false;  // weights summed to zero
};

// LiteralScalar: pooled * mean(regions).
// PerRegionWeighted: regions pooled with per_region / sum(per_region).
FuseResult fuse(const RelationScore& score, const Eigen::MatrixXd& regions, FuseMode mode);

}  // namespace stickersel
