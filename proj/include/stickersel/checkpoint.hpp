#pragma once
// Model checkpoints.
//
// A checkpoint is a JSON document holding every trainable tensor together
// with the config snapshot, the taxonomy and the identities of the frozen
// backends it was trained against. Its model version is a content hash, so
// indexes built from it can be checked for staleness.

#include "stickersel/config.hpp"
#include "stickersel/model.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace stickersel {

inline constexpr std::string_view kCheckpointFormat = "stickersel-checkpoint";
inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
    ModelParameters params;
    PipelineConfig config;
    std::vector<std::string> taxonomy;
    nlohmann::json backends = nlohmann::json::object();  // Backends::identities()

    // Hex digest over tensors, config, taxonomy and backend identities.
    std::string model_version() const;
};

// Fresh, randomly initialized parameters for the given config and input dims.
ModelParameters init_parameters(const PipelineConfig& config, std::size_t labels, std::size_t text_dim,
                                std::size_t region_dim);

nlohmann::json checkpoint_to_json(const Checkpoint& c);
Checkpoint checkpoint_from_json(const nlohmann::json& j);

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Throws VersionError when the checkpoint was trained against other backends.
void check_backends(const Checkpoint& c, const nlohmann::json& identities);

}  // namespace stickersel
