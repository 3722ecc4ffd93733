#pragma once
// A small planted corpus for smoke tests and learnability checks.
//
// Each conversation repeats keywords of its intention label, so the stub text
// encoder places contexts of one label near each other. Every sticker is gold
// for exactly one label.

#include "stickersel/dataset.hpp"
#include "stickersel/training.hpp"

#include <filesystem>

namespace stickersel {

struct SyntheticOptions {
    std::size_t train = 20;
    std::size_t valid = 10;
    std::size_t test = 10;
    std::size_t stickers_per_label = 2;
    std::uint64_t seed = 5;
};

// Writes the corpus (PNG stickers and manifest) under dir and loads it back.
Corpus make_planted_corpus(const std::filesystem::path& dir, const SyntheticOptions& options = {});

// Parameters that solve the planted task without training: class-centroid
// intention head, query projection zeroed so attention is uniform, and a
// least-squares visual projection sending each sticker's mean region to the
// embedding of its label. `base` supplies the remaining tensors.
ModelParameters planted_solution(const TrainingData& data, const QueryEncoder& encoder, ModelParameters base);

}  // namespace stickersel
