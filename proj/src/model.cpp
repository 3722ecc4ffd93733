#include "stickersel/model.hpp"

#include "stickersel/error.hpp"

#include <cmath>

namespace stickersel {

// ---------------------------------------------------------------------------
// ModelParameters
// ---------------------------------------------------------------------------

namespace {

template <typename Params, typename Fn>
void visit(Params& p, Fn&& fn) {
    fn("intention.weight", p.intention.weight.data(), static_cast<std::size_t>(p.intention.weight.size()));
    fn("intention.bias", p.intention.bias.data(), static_cast<std::size_t>(p.intention.bias.size()));
    fn("fusion.vis.weight", p.fusion.vis.weight.data(), static_cast<std::size_t>(p.fusion.vis.weight.size()));
    fn("fusion.vis.bias", p.fusion.vis.bias.data(), static_cast<std::size_t>(p.fusion.vis.bias.size()));
    fn("fusion.des.weight", p.fusion.des.weight.data(), static_cast<std::size_t>(p.fusion.des.weight.size()));
    fn("fusion.des.bias", p.fusion.des.bias.data(), static_cast<std::size_t>(p.fusion.des.bias.size()));
    fn("fusion.query", p.fusion.query.data(), static_cast<std::size_t>(p.fusion.query.size()));
    fn("fusion.key", p.fusion.key.data(), static_cast<std::size_t>(p.fusion.key.size()));
    fn("fusion.value", p.fusion.value.data(), static_cast<std::size_t>(p.fusion.value.size()));
}

}  // namespace

void ModelParameters::for_each(const std::function<void(const std::string&, double*, std::size_t)>& fn) {
    visit(*this, fn);
}

void ModelParameters::for_each(
    const std::function<void(const std::string&, const double*, std::size_t)>& fn) const {
    visit(*this, fn);
}

std::size_t ModelParameters::parameter_count() const {
    std::size_t n = 0;
    for_each([&](const std::string&, const double*, std::size_t size) { n += size; });
    return n;
}

ModelParameters ModelParameters::zeros_like() const {
    ModelParameters z = *this;
    z.for_each([](const std::string&, double* data, std::size_t size) { std::fill(data, data + size, 0.0); });
    return z;
}

void ModelParameters::add_scaled(const ModelParameters& other, double scale) {
    std::vector<std::pair<const double*, std::size_t>> src;
    other.for_each([&](const std::string&, const double* data, std::size_t size) { src.emplace_back(data, size); });
    std::size_t t = 0;
    for_each([&](const std::string& name, double* data, std::size_t size) {
        if (src[t].second != size) throw ShapeError("parameter shape mismatch at " + name);
        for (std::size_t i = 0; i < size; ++i) data[i] += scale * src[t].first[i];
        ++t;
    });
}

StickerFeatures make_features(std::string id, const RegionEmbeddings& regions,
                              const std::array<Embedding, 4>& attribute_embeddings) {
    if (regions.count() == 0) throw ShapeError("sticker '" + id + "' has no regions");
    StickerFeatures f;
    f.id = std::move(id);
    f.regions.resize(static_cast<Eigen::Index>(regions.count()), static_cast<Eigen::Index>(regions.dim()));
    for (std::size_t i = 0; i < regions.count(); ++i) {
        if (regions.regions[i].dim() != regions.dim()) throw ShapeError("regions of unequal dim");
        f.regions.row(static_cast<Eigen::Index>(i)) = to_vector(regions.regions[i]).transpose();
    }
    const auto text_dim = attribute_embeddings[0].dim();
    f.attributes.resize(4, static_cast<Eigen::Index>(text_dim));
    for (std::size_t a = 0; a < 4; ++a) {
        if (attribute_embeddings[a].dim() != text_dim) throw ShapeError("attribute embeddings of unequal dim");
        f.attributes.row(static_cast<Eigen::Index>(a)) = to_vector(attribute_embeddings[a]).transpose();
    }
    return f;
}

// ---------------------------------------------------------------------------
// Forward
// ---------------------------------------------------------------------------

StickerForward sticker_forward(const ModelParameters& params, const StickerFeatures& features,
                               const ModelOptions& options) {
    StickerForward fwd;
    fwd.projected = project(features.regions, params.fusion.vis);
    const auto n = fwd.projected.rows();
    if (options.attributes.empty()) {
        fwd.score.per_region = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
        fwd.score.pooled = 1.0 / static_cast<double>(n);
        fwd.fused.representation = fwd.projected.colwise().sum().transpose() / static_cast<double>(n);
        return fwd;
    }
    for (auto a : options.attributes) {
        const Eigen::VectorXd raw = features.attributes.row(static_cast<Eigen::Index>(a)).transpose();
        Eigen::VectorXd h = project(raw, params.fusion.des);
        fwd.attention[a] = cross_attention(h, fwd.projected, params.fusion);
        fwd.projected_attributes[a] = std::move(h);
    }
    fwd.score = relation_score(fwd.attention, options.attributes);
    fwd.fused = fuse(fwd.score, fwd.projected, options.fuse_mode);
    return fwd;
}

// ---------------------------------------------------------------------------
// Backward
// ---------------------------------------------------------------------------

void sticker_backward(const ModelParameters& params, const StickerFeatures& features, const StickerForward& fwd,
                      const Eigen::VectorXd& d_rep, const ModelOptions& options, ModelParameters& grads) {
    const auto& P = fwd.projected;
    const auto n = P.rows();
    const double inv_n = 1.0 / static_cast<double>(n);
    Eigen::MatrixXd dP = Eigen::MatrixXd::Zero(n, P.cols());
    Eigen::VectorXd d_per_region = Eigen::VectorXd::Zero(n);

    if (options.attributes.empty() || (options.fuse_mode == FuseMode::PerRegionWeighted && fwd.fused.uniform_fallback)) {
        dP.rowwise() += inv_n * d_rep.transpose();
    } else if (options.fuse_mode == FuseMode::PerRegionWeighted) {
        const double total = fwd.score.per_region.sum();
        const Eigen::VectorXd w = fwd.score.per_region / total;
        dP.noalias() += w * d_rep.transpose();
        const Eigen::VectorXd dw = P * d_rep;
        d_per_region = (dw.array() - w.dot(dw)) / total;
    } else {
        const Eigen::VectorXd mean = P.colwise().sum().transpose() * inv_n;
        dP.rowwise() += (fwd.score.pooled * inv_n) * d_rep.transpose();
        Eigen::Index best = 0;
        for (Eigen::Index i = 1; i < n; ++i) {
            if (fwd.score.per_region[i] > fwd.score.per_region[best]) best = i;
        }
        d_per_region[best] = d_rep.dot(mean);
    }

    if (!options.attributes.empty()) {
        const auto& fp = params.fusion;
        auto& gf = grads.fusion;
        const auto dk = static_cast<Eigen::Index>(fp.head_dim());
        const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
        const Eigen::MatrixXd K = P * fp.key;

        // Route each region's gradient to the (attribute, head) that won the max,
        // scanning in forward order so ties resolve the same way every time.
        std::map<Attribute, std::vector<Eigen::VectorXd>> d_weights;
        for (auto a : options.attributes) {
            d_weights[a].assign(fp.heads, Eigen::VectorXd::Zero(n));
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            if (d_per_region[i] == 0.0) continue;
            const double target = fwd.score.per_region[i];
            bool done = false;
            for (auto a : options.attributes) {
                const auto& ws = fwd.attention.at(a).weights;
                for (std::size_t m = 0; m < ws.size() && !done; ++m) {
                    if (ws[m][i] == target) {
                        d_weights[a][m][i] += d_per_region[i];
                        done = true;
                    }
                }
                if (done) break;
            }
        }

        for (auto a : options.attributes) {
            const auto& att = fwd.attention.at(a);
            const auto& hA = fwd.projected_attributes.at(a);
            const Eigen::VectorXd q = fp.query.transpose() * hA;
            Eigen::VectorXd d_hA = Eigen::VectorXd::Zero(hA.size());
            bool touched = false;
            for (std::size_t m = 0; m < fp.heads; ++m) {
                const Eigen::VectorXd& da = d_weights[a][m];
                if (da.isZero(0.0)) continue;
                touched = true;
                const Eigen::VectorXd& w = att.weights[m];
                const Eigen::VectorXd ds = w.array() * (da.array() - w.dot(da));
                const auto off = static_cast<Eigen::Index>(m) * dk;
                const Eigen::VectorXd dq = scale * (K.middleCols(off, dk).transpose() * ds);
                const Eigen::MatrixXd dK = scale * (ds * q.segment(off, dk).transpose());
                gf.query.middleCols(off, dk).noalias() += hA * dq.transpose();
                d_hA.noalias() += fp.query.middleCols(off, dk) * dq;
                gf.key.middleCols(off, dk).noalias() += P.transpose() * dK;
                dP.noalias() += dK * fp.key.middleCols(off, dk).transpose();
            }
            if (!touched) continue;
            const Eigen::VectorXd raw = features.attributes.row(static_cast<Eigen::Index>(a)).transpose();
            gf.des.weight.noalias() += d_hA * raw.transpose();
            gf.des.bias += d_hA;
        }
    }

    grads.fusion.vis.weight.noalias() += dP.transpose() * features.regions;
    grads.fusion.vis.bias += dP.colwise().sum().transpose();
}

// ---------------------------------------------------------------------------
// Sample / batch
// ---------------------------------------------------------------------------

SampleLoss sample_loss(const ModelParameters& params, const TrainingSample& sample, const ModelOptions& options,
                       ModelParameters* grads, double scale) {
    SampleLoss out;
    if (options.use_intention) {
        const auto pred = predict_intention(sample.context, params.intention);
        out.intention = intention_loss(pred.class_probs, sample.gold_label);
        if (grads && options.lambda_int != 0.0) {
            intention_backward(sample.context, pred.class_probs, sample.gold_label, scale * options.lambda_int,
                               grads->intention);
        }
    }

    if (sample.positive && !sample.negatives.empty()) {
        std::vector<const StickerFeatures*> stickers{sample.positive};
        stickers.insert(stickers.end(), sample.negatives.begin(), sample.negatives.end());
        std::vector<StickerForward> fwds;
        fwds.reserve(stickers.size());
        std::vector<double> scores;
        for (const auto* s : stickers) {
            fwds.push_back(sticker_forward(params, *s, options));
            scores.push_back(match_score(sample.query, fwds.back().fused.representation).value);
        }
        const std::span<const double> all(scores);
        const auto rl = retrieval_loss(all.first(1), all.subspan(1), options.margin, options.loss_form);
        out.retrieval = rl.value;
        if (grads && options.lambda_ret != 0.0) {
            for (std::size_t k = 0; k < stickers.size(); ++k) {
                const double ds = k == 0 ? rl.d_pos[0] : rl.d_neg[k - 1];
                if (ds == 0.0) continue;
                const Eigen::VectorXd d_rep = (scale * options.lambda_ret * ds) *
                                              match_score_grad_b(sample.query, fwds[k].fused.representation);
                sticker_backward(params, *stickers[k], fwds[k], d_rep, options, *grads);
            }
        }
    }
    out.joint = joint_loss(out.retrieval, out.intention, options.lambda_ret, options.lambda_int);
    return out;
}

SampleLoss batch_loss(const ModelParameters& params, std::span<const TrainingSample> batch,
                      const ModelOptions& options, ModelParameters* grads) {
    SampleLoss total;
    if (batch.empty()) return total;
    const double scale = 1.0 / static_cast<double>(batch.size());
    // Per-sample buffers summed in sample order; the parallel kernel does the
    // same so both paths agree bit for bit.
    ModelParameters buffer;
    if (grads) buffer = params.zeros_like();
    for (const auto& s : batch) {
        if (grads) buffer = params.zeros_like();
        const auto l = sample_loss(params, s, options, grads ? &buffer : nullptr, 1.0);
        total.retrieval += l.retrieval * scale;
        total.intention += l.intention * scale;
        total.joint += l.joint * scale;
        if (grads) grads->add_scaled(buffer, scale);
    }
    return total;
}

}  // namespace stickersel
