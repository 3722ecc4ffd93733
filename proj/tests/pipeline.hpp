#pragma once
// An untrained but complete pipeline over a corpus: backends, featurized
// stickers, a checkpoint and its index.

#include "support.hpp"
#include "stickersel/checkpoint.hpp"
#include "stickersel/evaluation.hpp"
#include "stickersel/matcher.hpp"
#include "stickersel/training.hpp"

#include <optional>

namespace testsupport {

struct Pipeline {
    stickersel::PipelineConfig config;
    stickersel::Backends backends;
    std::vector<stickersel::StickerAsset> assets;
    stickersel::Checkpoint checkpoint;
    stickersel::StickerIndex index;
};

inline Pipeline make_pipeline(const stickersel::Corpus& corpus, stickersel::PipelineConfig config = {},
                              std::optional<stickersel::ModelParameters> params = std::nullopt) {
    using namespace stickersel;
    Pipeline p;
    p.config = config;
    p.backends = make_backends(config.encoders);
    p.assets = featurize_stickers(corpus.stickers, p.backends);
    p.checkpoint.config = config;
    p.checkpoint.taxonomy = corpus.taxonomy;
    p.checkpoint.backends = p.backends.identities();
    p.checkpoint.params = params ? *params
                                 : init_parameters(config, corpus.taxonomy.size(), config.encoders.text.dim,
                                                   config.encoders.visual.dim);
    const auto features = features_of(p.assets);
    p.index = build_index(p.checkpoint.params, features, model_options(config), p.checkpoint.model_version());
    return p;
}

inline stickersel::Retriever make_retriever(const Pipeline& p, const stickersel::Corpus& corpus) {
    return stickersel::Retriever(p.checkpoint, p.index, p.backends, stickersel::captions_from(corpus));
}

// Everything needed to train and score on a corpus without the CLI.
struct Workbench {
    stickersel::PipelineConfig config;
    stickersel::Backends backends;
    std::vector<stickersel::StickerAsset> assets;
    stickersel::QueryEncoder encoder;
    stickersel::TrainingData data;
    std::vector<stickersel::EvalQuery> test;

    Workbench(const stickersel::Corpus& corpus, const stickersel::PipelineConfig& cfg)
        : config(cfg),
          backends(stickersel::make_backends(cfg.encoders)),
          assets(stickersel::featurize_stickers(corpus.stickers, backends)),
          encoder(cfg, backends, corpus.taxonomy, stickersel::captions_from(corpus)),
          data(stickersel::prepare_training(corpus, encoder, assets)) {
        const auto split = corpus.split(stickersel::Split::Test);
        test = stickersel::prepare_queries(encoder, split);
    }

    stickersel::ModelParameters initial() const {
        return stickersel::init_parameters(config, encoder.taxonomy().size(), config.encoders.text.dim,
                                           config.encoders.visual.dim);
    }

    stickersel::MetricsReport score(const std::vector<stickersel::EvalQuery>& queries,
                                    const stickersel::ModelParameters& params) const {
        const auto index =
            stickersel::build_index(params, data.stickers, stickersel::model_options(config), "bench");
        return stickersel::evaluate_queries(queries, params, encoder, index, data.labels);
    }

    double p_at_1(const std::vector<stickersel::EvalQuery>& queries, const stickersel::ModelParameters& params) const {
        return score(queries, params).overall.precision.at(1);
    }
};

}  // namespace testsupport
