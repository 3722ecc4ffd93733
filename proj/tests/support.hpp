#pragma once
// Shared fixtures for the unit and acceptance tests.

#include "stickersel/config.hpp"
#include "stickersel/dataset.hpp"
#include "stickersel/model.hpp"
#include "stickersel/synthetic.hpp"

#include <Eigen/Dense>

#include <atomic>
#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

namespace testsupport {

// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "t") {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("stickersel-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
    std::normal_distribution<double> n(0.0, scale);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
    return m;
}

inline Eigen::VectorXd random_vector(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0) {
    return random_matrix(rng, n, 1, scale).col(0);
}

// Random small model: K labels, text dim t, region dim r, shared dim d, h heads.
inline stickersel::ModelParameters random_model(std::mt19937_64& rng, std::size_t K, std::size_t t, std::size_t r,
                                                std::size_t d, std::size_t h, double scale = 0.5) {
    using namespace stickersel;
    ModelParameters p;
    const auto ei = [](std::size_t v) { return static_cast<Eigen::Index>(v); };
    p.intention.weight = random_matrix(rng, ei(K), ei(t), scale);
    p.intention.bias = random_vector(rng, ei(K), scale);
    p.fusion.vis.weight = random_matrix(rng, ei(d), ei(r), scale);
    p.fusion.vis.bias = random_vector(rng, ei(d), scale);
    p.fusion.des.weight = random_matrix(rng, ei(d), ei(t), scale);
    p.fusion.des.bias = random_vector(rng, ei(d), scale);
    p.fusion.query = random_matrix(rng, ei(d), ei(d), scale);
    p.fusion.key = random_matrix(rng, ei(d), ei(d), scale);
    p.fusion.value = random_matrix(rng, ei(d), ei(d), scale);
    p.fusion.heads = h;
    return p;
}

inline stickersel::StickerFeatures random_features(std::mt19937_64& rng, const std::string& id, std::size_t regions,
                                                   std::size_t r, std::size_t t) {
    stickersel::StickerFeatures f;
    f.id = id;
    f.regions = random_matrix(rng, static_cast<Eigen::Index>(regions), static_cast<Eigen::Index>(r));
    f.attributes = random_matrix(rng, 4, static_cast<Eigen::Index>(t));
    return f;
}

// The planted corpus, written once per process.
inline const stickersel::Corpus& planted_corpus() {
    static TempDir dir("planted");
    static const stickersel::Corpus corpus = stickersel::make_planted_corpus(dir.path());
    return corpus;
}

}  // namespace testsupport
