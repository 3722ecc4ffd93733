#pragma once
// Pipeline configuration and backend construction.
//
// Config files are JSON objects mirroring PipelineConfig, or flat
// "dotted.key = value" lines (e.g. "training.margin = 0.3"); both forms
// overlay the defaults below.

#include "stickersel/encoders.hpp"
#include "stickersel/fusion.hpp"
#include "stickersel/knowledge.hpp"
#include "stickersel/model.hpp"
#include "stickersel/scoring.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace stickersel {

struct BackendSpec {
    std::string kind = "stub";  // "stub" or "remote"
    std::string url;            // remote endpoint
    std::string model_id;       // remote model identity, enters cache keys
    std::size_t dim = 64;
    std::size_t max_length = 256;
    std::size_t regions = 4;
    std::uint64_t seed = 0;
};

inline BackendSpec stub_backend(std::uint64_t seed) {
    BackendSpec b;
    b.seed = seed;
    return b;
}

struct EncoderConfig {
    BackendSpec text = stub_backend(13);
    BackendSpec visual = stub_backend(17);
    BackendSpec describer = stub_backend(19);
    BackendSpec generator = stub_backend(7);
    std::string attribute_prompt{kDefaultAttributePrompt};
    std::string cache_dir;  // empty: in-memory caches
};

struct ModelConfig {
    std::size_t d = 64;
    std::size_t heads = 4;
    FuseMode fuse_mode = FuseMode::PerRegionWeighted;
    std::vector<Attribute> attributes{kAttributes.begin(), kAttributes.end()};
    bool use_intention = true;
    bool use_knowledge = true;
    bool match_with_context = false;  // match against [context ; intention]
    std::uint64_t init_seed = 1;
};

struct TrainingConfig {
    double margin = 0.2;
    double lambda_ret = 1.0;
    double lambda_int = 1.0;
    double learning_rate = 1e-4;
    std::size_t batch_size = 4;
    std::size_t epochs = 10;
    std::uint64_t seed = 42;
    std::size_t negatives_per_positive = 5;
    std::size_t context_window = 6;
    LossForm loss_form = LossForm::ClampedStandard;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
};

struct PipelineConfig {
    EncoderConfig encoders;
    ModelConfig model;
    TrainingConfig training;
    std::string taxonomy_path;  // optional override of the corpus taxonomy
};

nlohmann::json to_json(const PipelineConfig& c);
PipelineConfig config_from_json(const nlohmann::json& j, PipelineConfig base = {});
PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base = {});

// Applies "dotted.key=value"; the value is parsed as JSON when possible, as a
// string otherwise.
void apply_override(nlohmann::json& config, const std::string& assignment);

// Dimension of the matching query implied by the config.
std::size_t query_dim(const PipelineConfig& c);

// Throws ConfigError on out-of-range values or inconsistent dimensions.
void validate(const PipelineConfig& c);

ModelOptions model_options(const PipelineConfig& c);

std::string attributes_code(const std::vector<Attribute>& attrs);  // e.g. "GPFV"
std::vector<Attribute> parse_attributes_code(const std::string& code);

struct Backends {
    std::shared_ptr<const CommonsenseGenerator> generator;
    std::shared_ptr<const TextEncoder> text;
    std::shared_ptr<const VisualEncoder> visual;
    std::shared_ptr<const AttributeDescriber> describer;
    std::shared_ptr<StringCache> describe_cache;
    std::string attribute_prompt{kDefaultAttributePrompt};

    nlohmann::json identities() const;
};

// Builds stub or remote backends behind cache wrappers. With a cache_dir the
// caches persist as knowledge.cache, embeddings.cache and descriptions.cache.
Backends make_backends(const EncoderConfig& c);

}  // namespace stickersel
