#pragma once
// Adam training of the intention head and fusion stack against frozen
// encoder features.

#include "stickersel/checkpoint.hpp"
#include "stickersel/evaluation.hpp"
#include "stickersel/matcher.hpp"

#include <functional>
#include <random>
#include <set>
#include <optional>
#include <vector>

namespace stickersel {

struct TrainingData {
    std::vector<StickerFeatures> stickers;  // sorted by id
    std::vector<std::set<std::string>> sticker_label_sets;  // aligned with stickers
    std::vector<EvalQuery> train;
    std::vector<std::size_t> train_labels;   // gold label index per train query
    std::vector<std::size_t> train_stickers; // gold sticker position per train query
    std::vector<EvalQuery> valid;
    StickerLabels labels;
};

TrainingData prepare_training(const Corpus& corpus, const QueryEncoder& encoder,
                              const std::vector<StickerAsset>& assets);

struct EpochLog {
    std::size_t epoch = 0;  // 1-based
    double retrieval = 0.0;
    double intention = 0.0;
    double joint = 0.0;
    std::optional<double> valid_map;
    std::optional<double> valid_p1;
};

struct TrainingRun {
    ModelParameters best;
    std::size_t best_epoch = 0;
    std::vector<EpochLog> log;
};

// Negatives for one positive: `count` stickers drawn without replacement from
// those not sharing the gold label, or from all but the gold when too few.
std::vector<std::size_t> sample_negatives(const TrainingData& data, std::size_t gold_sticker,
                                          const std::string& gold_label, std::size_t count, std::mt19937_64& rng);

using EpochCallback = std::function<void(const EpochLog&)>;

// Runs config.training.epochs epochs of Adam from `init`. The best epoch by
// validation mAP is kept; ties go to the later epoch.
TrainingRun train_model(const TrainingData& data, const QueryEncoder& encoder, const PipelineConfig& config,
                        ModelParameters init, const EpochCallback& on_epoch = {});

struct TrainingResult {
    Checkpoint checkpoint;
    std::vector<EpochLog> log;
    std::size_t best_epoch = 0;
};

TrainingResult train(const Corpus& corpus, const PipelineConfig& config, const Backends& backends,
                     const EpochCallback& on_epoch = {}, const std::vector<StickerAsset>* assets = nullptr);

nlohmann::json log_to_json(const std::vector<EpochLog>& log);

}  // namespace stickersel
