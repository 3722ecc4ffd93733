#pragma once
// Grayscale raster handling and structural similarity.

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace stickersel {

// Row-major grayscale image with intensities in [0, 255].
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<double> pixels;

    double at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)]; }
};

inline constexpr int kSsimSide = 128;

// Decodes any raster format the image codec understands, converts to
// grayscale and resizes to side x side (area interpolation).
// Throws AssetError when the bytes are not a decodable image.
GrayImage decode_gray(std::string_view bytes, int side = kSsimSide);
GrayImage load_gray(const std::filesystem::path& path, int side = kSsimSide);

std::string read_bytes(const std::filesystem::path& path);

// Local statistics for SSIM under an 11x11 Gaussian window (sigma 1.5),
// evaluated on the valid region only.
struct SsimPrepared {
    int width = 0;   // of the valid map
    int height = 0;
    GrayImage image;
    std::vector<double> mu;
    std::vector<double> sigma_sq;
};

SsimPrepared prepare_ssim(const GrayImage& image);

// Mean SSIM with K1 = 0.01, K2 = 0.03, L = 255, clamped to [0, 1].
// Symmetric and exactly 1 for identical inputs.
double ssim(const SsimPrepared& a, const SsimPrepared& b);
double ssim(const GrayImage& a, const GrayImage& b);

struct SimilarityReport {
    std::size_t pairs = 0;
    double mean = 0.0;
    std::vector<double> bin_edges;    // bins + 1 edges over [0, 1]
    std::vector<std::size_t> counts;  // last bin is closed on the right
};

// Pairwise SSIM over all C(n,2) pairs. Throws DomainError when n < 2.
SimilarityReport similarity_report(const std::vector<GrayImage>& images, std::size_t bins = 10);
SimilarityReport histogram_of(const std::vector<double>& pair_scores, std::size_t bins = 10);

}  // namespace stickersel
