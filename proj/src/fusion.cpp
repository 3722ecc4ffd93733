#include "stickersel/fusion.hpp"

#include "stickersel/error.hpp"
#include "stickersel/intention.hpp"

#include <cmath>
#include <random>

namespace stickersel {

void validate(const FusionParameters& p) {
    const auto d = p.query.rows();
    if (p.heads == 0 || d % static_cast<Eigen::Index>(p.heads) != 0) {
        throw ConfigError("model dim " + std::to_string(d) + " is not divisible by " + std::to_string(p.heads) +
                          " heads");
    }
    auto square = [d](const Eigen::MatrixXd& m) { return m.rows() == d && m.cols() == d; };
    if (!square(p.query) || !square(p.key) || !square(p.value)) throw ShapeError("attention maps must be d x d");
    if (p.vis.weight.rows() != d || p.des.weight.rows() != d || p.vis.bias.size() != d || p.des.bias.size() != d) {
        throw ShapeError("projections must map to the model dim");
    }
    for (const Eigen::MatrixXd* m : {&p.query, &p.key, &p.value, &p.vis.weight, &p.des.weight}) {
        if (!m->allFinite()) throw ValidationError("non-finite fusion parameter");
    }
    if (!p.vis.bias.allFinite() || !p.des.bias.allFinite()) throw ValidationError("non-finite fusion parameter");
}

FusionParameters init_fusion(std::size_t vis_in, std::size_t text_in, std::size_t d, std::size_t heads,
                             std::uint64_t seed) {
    if (heads == 0 || d % heads != 0) {
        throw ConfigError("model dim " + std::to_string(d) + " is not divisible by " + std::to_string(heads) +
                          " heads");
    }
    std::mt19937_64 rng(seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(d));
    std::uniform_real_distribution<double> u(-bound, bound);
    auto fill = [&](Eigen::Index rows, Eigen::Index cols) {
        Eigen::MatrixXd m(rows, cols);
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
        return m;
    };
    const auto di = static_cast<Eigen::Index>(d);
    FusionParameters p;
    p.heads = heads;
    p.vis.weight = fill(di, static_cast<Eigen::Index>(vis_in));
    p.vis.bias = Eigen::VectorXd::Zero(di);
    p.des.weight = fill(di, static_cast<Eigen::Index>(text_in));
    p.des.bias = Eigen::VectorXd::Zero(di);
    p.query = fill(di, di);
    p.key = fill(di, di);
    p.value = fill(di, di);
    return p;
}

Eigen::MatrixXd project(const Eigen::MatrixXd& rows, const AffineMap& map) {
    if (rows.cols() != map.weight.cols()) {
        throw ShapeError("projection expects input dim " + std::to_string(map.weight.cols()) + ", got " +
                         std::to_string(rows.cols()));
    }
    Eigen::MatrixXd out = rows * map.weight.transpose();
    out.rowwise() += map.bias.transpose();
    return out;
}

Eigen::VectorXd project(const Eigen::VectorXd& v, const AffineMap& map) {
    if (v.size() != map.weight.cols()) {
        throw ShapeError("projection expects input dim " + std::to_string(map.weight.cols()) + ", got " +
                         std::to_string(v.size()));
    }
    return map.weight * v + map.bias;
}

AttentionResult cross_attention(const Eigen::VectorXd& query, const Eigen::MatrixXd& regions,
                                const FusionParameters& params) {
    const auto d = static_cast<Eigen::Index>(params.d());
    if (params.heads == 0 || d % static_cast<Eigen::Index>(params.heads) != 0) {
        throw ConfigError("model dim is not divisible by the head count");
    }
    if (query.size() != d || regions.cols() != d) throw ShapeError("attention inputs must be at the model dim");
    if (regions.rows() == 0) throw ShapeError("attention over zero regions");

    const auto dk = static_cast<Eigen::Index>(params.head_dim());
    const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
    const Eigen::VectorXd q = params.query.transpose() * query;  // row-vector convention: h W^Q
    const Eigen::MatrixXd k = regions * params.key;
    const Eigen::MatrixXd v = regions * params.value;

    AttentionResult out;
    for (std::size_t m = 0; m < params.heads; ++m) {
        const auto off = static_cast<Eigen::Index>(m) * dk;
        const Eigen::VectorXd scores = k.middleCols(off, dk) * q.segment(off, dk) * scale;
        Eigen::VectorXd w = softmax(scores);
        out.outputs.push_back(v.middleCols(off, dk).transpose() * w);
        out.weights.push_back(std::move(w));
    }
    return out;
}

RelationScore relation_score(const std::map<Attribute, AttentionResult>& maps, std::span<const Attribute> required) {
    if (required.empty()) throw ArityError("relation score needs at least one attribute");
    RelationScore s;
    bool first = true;
    for (auto a : required) {
        auto it = maps.find(a);
        if (it == maps.end()) {
            throw ArityError("missing attention map for attribute \"" + std::string(attribute_name(a)) + "\"");
        }
        if (it->second.weights.empty()) throw ArityError("attention map without heads");
        // Max over heads first, then fold into the running max over attributes.
        Eigen::VectorXd over_heads = it->second.weights.front();
        for (std::size_t m = 1; m < it->second.weights.size(); ++m) {
            over_heads = over_heads.cwiseMax(it->second.weights[m]);
        }
        if (first) {
            s.per_region = over_heads;
            first = false;
        } else {
            if (over_heads.size() != s.per_region.size()) throw ShapeError("attention maps over different regions");
            s.per_region = s.per_region.cwiseMax(over_heads);
        }
    }
    s.pooled = s.per_region.maxCoeff();
    return s;
}

std::string to_string(FuseMode m) {
    return m == FuseMode::LiteralScalar ? "literal_scalar" : "per_region_weighted";
}

FuseMode parse_fuse_mode(const std::string& s) {
    if (s == "literal_scalar") return FuseMode::LiteralScalar;
    if (s == "per_region_weighted") return FuseMode::PerRegionWeighted;
    throw ConfigError("unknown fuse mode '" + s + "'");
}

FuseResult fuse(const RelationScore& score, const Eigen::MatrixXd& regions, FuseMode mode) {
    if (regions.rows() == 0) throw ShapeError("fuse over zero regions");
    if (score.per_region.size() != regions.rows()) throw ShapeError("relation score and regions are misaligned");
    FuseResult out;
    const auto n = static_cast<double>(regions.rows());
    if (mode == FuseMode::LiteralScalar) {
        out.representation = score.pooled * (regions.colwise().sum().transpose() / n);
        return out;
    }
    const double total = score.per_region.sum();
    if (!(total > 0.0)) {
        out.uniform_fallback = true;
        out.representation = regions.colwise().sum().transpose() / n;
        return out;
    }
    const Eigen::VectorXd w = score.per_region / total;
    out.representation = regions.transpose() * w;
    return out;
}

}  // namespace stickersel
