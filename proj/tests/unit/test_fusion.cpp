#include <doctest.h>

#include "support.hpp"
#include "stickersel/error.hpp"
#include "stickersel/fusion.hpp"

#include <cmath>

using namespace stickersel;

namespace {

FusionParameters identity_params(Eigen::Index d, std::size_t heads) {
    FusionParameters p;
    p.heads = heads;
    p.query = p.key = p.value = Eigen::MatrixXd::Identity(d, d);
    p.vis = {Eigen::MatrixXd::Identity(d, d), Eigen::VectorXd::Zero(d)};
    p.des = p.vis;
    return p;
}

AttentionResult single_head(std::initializer_list<double> w) {
    AttentionResult r;
    Eigen::VectorXd v(static_cast<Eigen::Index>(w.size()));
    Eigen::Index i = 0;
    for (double x : w) v[i++] = x;
    r.weights.push_back(v);
    return r;
}

}  // namespace

TEST_SUITE("fusion") {

TEST_CASE("affine projections") {
    AffineMap id{Eigen::Matrix2d::Identity(), Eigen::Vector2d::Zero()};
    CHECK(project(Eigen::VectorXd(Eigen::Vector2d(3, -4)), id) == Eigen::VectorXd(Eigen::Vector2d(3, -4)));
    AffineMap zero{Eigen::Matrix2d::Zero(), Eigen::Vector2d(5, 6)};
    const Eigen::MatrixXd rows = Eigen::MatrixXd::Random(3, 2);
    const auto out = project(rows, zero);
    for (Eigen::Index i = 0; i < 3; ++i) CHECK(out.row(i) == Eigen::RowVector2d(5, 6));
    Eigen::Matrix2d w;
    w << 2, 0, 0, 3;
    CHECK(project(Eigen::VectorXd(Eigen::Vector2d(1, 1)), AffineMap{w, Eigen::Vector2d::Zero()}) ==
          Eigen::VectorXd(Eigen::Vector2d(2, 3)));
    CHECK_THROWS_AS(project(Eigen::VectorXd(Eigen::Vector3d(1, 1, 1)), id), ShapeError);
}

TEST_CASE("attention over a single region returns it with weight 1") {
    const auto p = identity_params(3, 1);
    const Eigen::MatrixXd r = Eigen::RowVector3d(0.2, -1.0, 4.0);
    const auto a = cross_attention(Eigen::Vector3d(1, 2, 3), r, p);
    CHECK(a.weights[0][0] == 1.0);
    CHECK(a.outputs[0] == r.row(0).transpose());
}

TEST_CASE("two-region attention equals softmax(1/sqrt2, 0)") {
    const auto p = identity_params(2, 1);
    const Eigen::MatrixXd regions = Eigen::Matrix2d::Identity();
    const auto a = cross_attention(Eigen::Vector2d(1, 0), regions, p);
    const double w0 = 1.0 / (1.0 + std::exp(-1.0 / std::sqrt(2.0)));
    CHECK(std::abs(a.weights[0][0] - w0) < 1e-12);
    CHECK(std::abs(a.weights[0][1] - (1.0 - w0)) < 1e-12);
    CHECK(std::abs(a.weights[0][0] - 0.6698) < 5e-5);
    CHECK(std::abs(a.outputs[0][0] - w0) < 1e-12);
    CHECK(std::abs(a.outputs[0][1] - (1.0 - w0)) < 1e-12);
}

TEST_CASE("attention weights are a distribution per head") {
    std::mt19937_64 rng(1);
    auto p = identity_params(8, 2);
    p.query = testsupport::random_matrix(rng, 8, 8);
    p.key = testsupport::random_matrix(rng, 8, 8);
    const auto a = cross_attention(testsupport::random_vector(rng, 8), testsupport::random_matrix(rng, 5, 8), p);
    REQUIRE(a.weights.size() == 2);
    for (const auto& w : a.weights) {
        CHECK(w.minCoeff() >= 0.0);
        CHECK(std::abs(w.sum() - 1.0) < 1e-12);
    }
}

TEST_CASE("head count must divide the model dim") {
    auto p = identity_params(6, 4);
    CHECK_THROWS_AS(validate(p), ConfigError);
    CHECK_THROWS_AS(cross_attention(Eigen::VectorXd::Zero(6), Eigen::MatrixXd::Zero(2, 6), p), ConfigError);
    CHECK_THROWS_AS(init_fusion(4, 4, 6, 4, 1), ConfigError);
    CHECK_NOTHROW(validate(identity_params(6, 3)));
}

TEST_CASE("init is bounded by 1/sqrt(d) with zero biases") {
    const auto p = init_fusion(5, 7, 16, 4, 9);
    CHECK_NOTHROW(validate(p));
    CHECK(p.query.cwiseAbs().maxCoeff() <= 0.25);
    CHECK(p.vis.weight.cols() == 5);
    CHECK(p.des.weight.cols() == 7);
    CHECK(p.vis.bias.isZero(0.0));
}

TEST_CASE("pooled score is the max attribute scalar on one region") {
    std::map<Attribute, AttentionResult> maps{{Attribute::Gesture, single_head({0.2})},
                                              {Attribute::Posture, single_head({0.5})},
                                              {Attribute::FacialExpression, single_head({0.1})},
                                              {Attribute::Verbal, single_head({0.4})}};
    const auto s = relation_score(maps);
    CHECK(s.pooled == 0.5);
}

TEST_CASE("uniform weights over four regions give 0.25 everywhere") {
    std::map<Attribute, AttentionResult> maps;
    for (auto a : kAttributes) maps[a] = single_head({0.25, 0.25, 0.25, 0.25});
    const auto s = relation_score(maps);
    CHECK(s.per_region == Eigen::Vector4d::Constant(0.25));
    CHECK(s.pooled == 0.25);
}

TEST_CASE("element-wise max keeps every attribute's peak") {
    std::map<Attribute, AttentionResult> maps{{Attribute::Gesture, single_head({0.1, 0.7, 0.1, 0.1})},
                                              {Attribute::Posture, single_head({0.25, 0.25, 0.25, 0.25})},
                                              {Attribute::FacialExpression, single_head({0.1, 0.1, 0.1, 0.7})},
                                              {Attribute::Verbal, single_head({0.25, 0.25, 0.25, 0.25})}};
    const auto s = relation_score(maps);
    CHECK(s.per_region[1] == 0.7);
    CHECK(s.per_region[3] == 0.7);
    CHECK(s.per_region[0] == 0.25);
}

TEST_CASE("max over heads precedes max over attributes") {
    AttentionResult two;
    two.weights = {Eigen::Vector2d(0.9, 0.1), Eigen::Vector2d(0.2, 0.8)};
    std::map<Attribute, AttentionResult> maps{{Attribute::Gesture, two}};
    const std::array<Attribute, 1> only{Attribute::Gesture};
    const auto s = relation_score(maps, only);
    CHECK(s.per_region == Eigen::Vector2d(0.9, 0.8));
}

TEST_CASE("missing attribute map is an arity error") {
    std::map<Attribute, AttentionResult> maps{{Attribute::Gesture, single_head({1.0})}};
    CHECK_THROWS_AS(relation_score(maps), ArityError);
}

TEST_CASE("literal fuse scales the mean region") {
    RelationScore s{Eigen::Vector2d(0.5, 0.3), 0.5};
    Eigen::MatrixXd regions(2, 2);
    regions << 1, 3, 3, 5;  // mean [2, 4]
    CHECK(fuse(s, regions, FuseMode::LiteralScalar).representation == Eigen::VectorXd(Eigen::Vector2d(1, 2)));
}

TEST_CASE("weighted fuse") {
    Eigen::MatrixXd unit = Eigen::Matrix2d::Identity();
    CHECK(fuse(RelationScore{Eigen::Vector2d(1, 0), 1}, unit, FuseMode::PerRegionWeighted).representation ==
          Eigen::VectorXd(Eigen::Vector2d(1, 0)));
    Eigen::MatrixXd twos = 2.0 * Eigen::Matrix2d::Identity();
    CHECK(fuse(RelationScore{Eigen::Vector2d(0.3, 0.3), 0.3}, twos, FuseMode::PerRegionWeighted).representation ==
          Eigen::VectorXd(Eigen::Vector2d(1, 1)));
}

TEST_CASE("zero total weight falls back to the uniform mean and says so") {
    Eigen::MatrixXd twos = 2.0 * Eigen::Matrix2d::Identity();
    const auto r = fuse(RelationScore{Eigen::Vector2d(0, 0), 0}, twos, FuseMode::PerRegionWeighted);
    CHECK(r.uniform_fallback);
    CHECK(r.representation == Eigen::VectorXd(Eigen::Vector2d(1, 1)));
}

TEST_CASE("weighted fuse is permutation equivariant") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::MatrixXd regions = testsupport::random_matrix(rng, 5, 6);
        const Eigen::VectorXd w = testsupport::random_vector(rng, 5).cwiseAbs();
        Eigen::PermutationMatrix<Eigen::Dynamic> perm(5);
        perm.setIdentity();
        std::shuffle(perm.indices().data(), perm.indices().data() + 5, rng);
        const auto a = fuse(RelationScore{w, w.maxCoeff()}, regions, FuseMode::PerRegionWeighted).representation;
        const Eigen::MatrixXd pr = perm * regions;
        const Eigen::VectorXd pw = perm * w;
        const auto b = fuse(RelationScore{pw, pw.maxCoeff()}, pr, FuseMode::PerRegionWeighted).representation;
        CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("misaligned score and regions is a shape error") {
    CHECK_THROWS_AS(fuse(RelationScore{Eigen::Vector3d(1, 1, 1), 1}, Eigen::MatrixXd::Zero(2, 2),
                         FuseMode::PerRegionWeighted),
                    ShapeError);
}

TEST_CASE("fuse mode names") {
    CHECK(parse_fuse_mode(to_string(FuseMode::LiteralScalar)) == FuseMode::LiteralScalar);
    CHECK(parse_fuse_mode("per_region_weighted") == FuseMode::PerRegionWeighted);
    CHECK_THROWS_AS(parse_fuse_mode("max"), ConfigError);
}

}
