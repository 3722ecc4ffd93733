#pragma once
// Central-difference check of the joint-loss gradient, tensor by tensor.

#include "support.hpp"
#include "stickersel/model.hpp"

#include <cmath>
#include <deque>
#include <string>
#include <vector>

namespace testsupport {

struct GradInstance {
    stickersel::ModelParameters params;
    std::deque<stickersel::StickerFeatures> stickers;  // stable addresses
    std::vector<stickersel::TrainingSample> samples;
};

// K labels, d model dim, h heads, `regions` regions per sticker; text and
// region inputs get their own dims so shape mix-ups cannot cancel out.
inline GradInstance random_instance(std::mt19937_64& rng, std::size_t K, std::size_t d, std::size_t h,
                                    std::size_t regions, std::size_t samples = 2, std::size_t negatives = 3) {
    const std::size_t t = d - 2, r = d + 1;
    GradInstance g;
    g.params = random_model(rng, K, t, r, d, h, 0.6);
    for (std::size_t s = 0; s < samples * (1 + negatives); ++s) {
        g.stickers.push_back(random_features(rng, "s" + std::to_string(s), regions, r, t));
    }
    std::uniform_int_distribution<std::size_t> label(0, K - 1);
    std::size_t next = 0;
    for (std::size_t s = 0; s < samples; ++s) {
        stickersel::TrainingSample sample;
        sample.context = random_vector(rng, static_cast<Eigen::Index>(t));
        sample.gold_label = label(rng);
        sample.query = random_vector(rng, static_cast<Eigen::Index>(d));
        sample.positive = &g.stickers[next++];
        for (std::size_t n = 0; n < negatives; ++n) sample.negatives.push_back(&g.stickers[next++]);
        g.samples.push_back(std::move(sample));
    }
    return g;
}

inline constexpr double kNoiseFloor = 1e-8;

struct TensorError {
    std::string name;
    double relative = 0.0;  // ||analytic - numeric|| / max(||analytic||, ||numeric||)
    double analytic_norm = 0.0;
    double numeric_norm = 0.0;
};

inline std::vector<TensorError> gradient_errors(const stickersel::ModelParameters& params,
                                                const std::vector<stickersel::TrainingSample>& samples,
                                                const stickersel::ModelOptions& options, double eps = 1e-5) {
    using stickersel::ModelParameters;
    ModelParameters grads = params.zeros_like();
    stickersel::batch_loss(params, samples, options, &grads);

    std::vector<std::pair<std::string, std::vector<double>>> analytic;
    grads.for_each([&](const std::string& name, const double* data, std::size_t size) {
        analytic.emplace_back(name, std::vector<double>(data, data + size));
    });

    ModelParameters work = params;
    std::vector<std::pair<double*, std::size_t>> slots;
    work.for_each([&](const std::string&, double* data, std::size_t size) { slots.emplace_back(data, size); });

    auto loss = [&] { return stickersel::batch_loss(work, samples, options, nullptr).joint; };
    std::vector<TensorError> out;
    for (std::size_t t = 0; t < slots.size(); ++t) {
        double diff = 0.0, an = 0.0, nn = 0.0;
        for (std::size_t i = 0; i < slots[t].second; ++i) {
            double& x = slots[t].first[i];
            const double orig = x;
            x = orig + eps;
            const double up = loss();
            x = orig - eps;
            const double down = loss();
            x = orig;
            const double numeric = (up - down) / (2.0 * eps);
            const double a = analytic[t].second[i];
            diff += (a - numeric) * (a - numeric);
            an += a * a;
            nn += numeric * numeric;
        }
        TensorError e;
        e.name = analytic[t].first;
        e.analytic_norm = std::sqrt(an);
        e.numeric_norm = std::sqrt(nn);
        const double scale = std::max(e.analytic_norm, e.numeric_norm);
        // Below the roundoff of a central difference (~1e-16 / eps per entry)
        // the tensor's gradient is zero to measurement precision.
        e.relative = scale < kNoiseFloor ? std::sqrt(diff) : std::sqrt(diff) / scale;
        out.push_back(e);
    }
    return out;
}

}  // namespace testsupport
