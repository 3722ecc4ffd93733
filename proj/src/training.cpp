#include "stickersel/training.hpp"

#include "stickersel/error.hpp"
#include "stickersel/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace stickersel {

namespace {

struct Adam {
    double lr, beta1, beta2, eps;
    ModelParameters m, v;
    std::size_t step = 0;

    Adam(const ModelParameters& like, const TrainingConfig& c)
        : lr(c.learning_rate), beta1(c.adam_beta1), beta2(c.adam_beta2), eps(c.adam_epsilon),
          m(like.zeros_like()), v(like.zeros_like()) {}

    void update(ModelParameters& params, const ModelParameters& grads) {
        ++step;
        const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
        const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
        std::vector<const double*> g;
        grads.for_each([&](const std::string&, const double* data, std::size_t) { g.push_back(data); });
        std::vector<double*> ms, vs;
        m.for_each([&](const std::string&, double* data, std::size_t) { ms.push_back(data); });
        v.for_each([&](const std::string&, double* data, std::size_t) { vs.push_back(data); });
        std::size_t t = 0;
        params.for_each([&](const std::string&, double* p, std::size_t size) {
            for (std::size_t i = 0; i < size; ++i) {
                const double gi = g[t][i];
                ms[t][i] = beta1 * ms[t][i] + (1.0 - beta1) * gi;
                vs[t][i] = beta2 * vs[t][i] + (1.0 - beta2) * gi * gi;
                p[i] -= lr * (ms[t][i] / c1) / (std::sqrt(vs[t][i] / c2) + eps);
            }
            ++t;
        });
    }
};

bool all_finite(const ModelParameters& p) {
    bool ok = true;
    p.for_each([&](const std::string&, const double* data, std::size_t size) {
        for (std::size_t i = 0; i < size && ok; ++i) ok = std::isfinite(data[i]);
    });
    return ok;
}

}  // namespace

TrainingData prepare_training(const Corpus& corpus, const QueryEncoder& encoder,
                              const std::vector<StickerAsset>& assets) {
    TrainingData data;
    data.labels = sticker_labels(corpus);
    data.stickers = features_of(assets);
    std::sort(data.stickers.begin(), data.stickers.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    for (const auto& s : data.stickers) {
        auto it = data.labels.find(s.id);
        data.sticker_label_sets.push_back(it == data.labels.end() ? std::set<std::string>{} : it->second);
    }
    const auto train = corpus.split(Split::Train);
    if (train.empty()) throw TrainingError("corpus has no training conversations");
    data.train = prepare_queries(encoder, train);
    for (const auto* c : train) {
        const auto label = corpus.label_index(c->intention_label);
        if (!label) throw TaxonomyError("conversation '" + c->id + "' has unknown label '" + c->intention_label + "'");
        data.train_labels.push_back(*label);
        auto it = std::lower_bound(data.stickers.begin(), data.stickers.end(), c->gold_sticker_id,
                                   [](const StickerFeatures& f, const std::string& id) { return f.id < id; });
        if (it == data.stickers.end() || it->id != c->gold_sticker_id) {
            throw IntegrityError("gold sticker '" + c->gold_sticker_id + "' has no features");
        }
        data.train_stickers.push_back(static_cast<std::size_t>(it - data.stickers.begin()));
    }
    data.valid = prepare_queries(encoder, corpus.split(Split::Valid));
    return data;
}

std::vector<std::size_t> sample_negatives(const TrainingData& data, std::size_t gold_sticker,
                                          const std::string& gold_label, std::size_t count, std::mt19937_64& rng) {
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < data.stickers.size(); ++i) {
        if (i != gold_sticker && !data.sticker_label_sets[i].count(gold_label)) pool.push_back(i);
    }
    if (pool.size() < count) {
        pool.clear();
        for (std::size_t i = 0; i < data.stickers.size(); ++i) {
            if (i != gold_sticker) pool.push_back(i);
        }
    }
    std::shuffle(pool.begin(), pool.end(), rng);
    if (pool.size() > count) pool.resize(count);
    return pool;
}

TrainingRun train_model(const TrainingData& data, const QueryEncoder& encoder, const PipelineConfig& config,
                        ModelParameters init, const EpochCallback& on_epoch) {
    validate(config);
    const auto options = model_options(config);
    const auto& tc = config.training;
    const auto& taxonomy = encoder.taxonomy();
    std::mt19937_64 rng(tc.seed);
    ModelParameters params = std::move(init);
    Adam adam(params, tc);

    TrainingRun run;
    run.best = params;
    double best_map = -1.0;
    std::vector<std::size_t> order(data.train.size());
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 1; epoch <= tc.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        EpochLog log;
        log.epoch = epoch;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += tc.batch_size) {
            const auto end = std::min(order.size(), start + tc.batch_size);
            std::vector<TrainingSample> batch;
            std::vector<std::vector<std::size_t>> negatives;
            for (std::size_t b = start; b < end; ++b) {
                const auto i = order[b];
                negatives.push_back(sample_negatives(data, data.train_stickers[i], taxonomy[data.train_labels[i]],
                                                     tc.negatives_per_positive, rng));
            }
            for (std::size_t b = start; b < end; ++b) {
                const auto i = order[b];
                TrainingSample s;
                s.context = data.train[i].context;
                s.gold_label = data.train_labels[i];
                // Teacher forcing: H^Y comes from the gold label during training.
                s.query = encoder.query_for(s.context, s.gold_label);
                s.positive = &data.stickers[data.train_stickers[i]];
                for (auto n : negatives[b - start]) s.negatives.push_back(&data.stickers[n]);
                batch.push_back(std::move(s));
            }
            ModelParameters grads = params.zeros_like();
            const auto loss = kernels::omp::batch_gradients(params, batch, options, grads);
            if (!std::isfinite(loss.joint) || !all_finite(grads)) {
                std::string ids;
                for (std::size_t b = start; b < end; ++b) ids += (ids.empty() ? "" : ", ") + data.train[order[b]].conversation->id;
                throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                    std::to_string(batches + 1) + " (retrieval " + std::to_string(loss.retrieval) +
                                    ", intention " + std::to_string(loss.intention) + "; conversations " + ids + ")");
            }
            adam.update(params, grads);
            log.retrieval += loss.retrieval;
            log.intention += loss.intention;
            log.joint += loss.joint;
            ++batches;
        }
        log.retrieval /= static_cast<double>(batches);
        log.intention /= static_cast<double>(batches);
        log.joint /= static_cast<double>(batches);

        if (!data.valid.empty()) {
            const auto index = build_index(params, data.stickers, options, "training");
            const auto report = evaluate_queries(data.valid, params, encoder, index, data.labels);
            log.valid_map = report.overall.map;
            log.valid_p1 = report.overall.precision.at(1);
            if (*log.valid_map >= best_map) {
                best_map = *log.valid_map;
                run.best = params;
                run.best_epoch = epoch;
            }
        } else {
            run.best = params;
            run.best_epoch = epoch;
        }
        run.log.push_back(log);
        if (on_epoch) on_epoch(log);
    }
    if (tc.epochs == 0) run.best = params;
    return run;
}

TrainingResult train(const Corpus& corpus, const PipelineConfig& config, const Backends& backends,
                     const EpochCallback& on_epoch, const std::vector<StickerAsset>* assets) {
    validate(config);
    std::vector<std::string> taxonomy = corpus.taxonomy;
    std::vector<StickerAsset> own;
    if (!assets) {
        own = featurize_stickers(corpus.stickers, backends);
        assets = &own;
    }
    if (assets->empty()) throw TrainingError("corpus has no stickers");
    const QueryEncoder encoder(config, backends, taxonomy, captions_from(corpus));
    const auto data = prepare_training(corpus, encoder, *assets);
    const auto text_dim = static_cast<std::size_t>(data.train.front().context.size());
    const auto region_dim = static_cast<std::size_t>(data.stickers.front().regions.cols());
    auto init = init_parameters(config, taxonomy.size(), text_dim, region_dim);
    auto run = train_model(data, encoder, config, std::move(init), on_epoch);

    TrainingResult result;
    result.checkpoint.params = std::move(run.best);
    result.checkpoint.config = config;
    result.checkpoint.taxonomy = std::move(taxonomy);
    result.checkpoint.backends = backends.identities();
    result.log = std::move(run.log);
    result.best_epoch = run.best_epoch;
    return result;
}

nlohmann::json log_to_json(const std::vector<EpochLog>& log) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& e : log) {
        nlohmann::json row = {{"epoch", e.epoch}, {"retrieval", e.retrieval}, {"intention", e.intention}, {"joint", e.joint}};
        row["valid_map"] = e.valid_map ? nlohmann::json(*e.valid_map) : nlohmann::json(nullptr);
        row["valid_p1"] = e.valid_p1 ? nlohmann::json(*e.valid_p1) : nlohmann::json(nullptr);
        out.push_back(row);
    }
    return out;
}

}  // namespace stickersel
