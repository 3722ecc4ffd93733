#include "stickersel/image.hpp"

#include "stickersel/error.hpp"
#include "stickersel/kernels.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace stickersel {

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = (0.01 * 255.0) * (0.01 * 255.0);
constexpr double kC2 = (0.03 * 255.0) * (0.03 * 255.0);

const std::array<double, kWindow>& gaussian_taps() {
    static const std::array<double, kWindow> taps = [] {
        std::array<double, kWindow> t{};
        double sum = 0.0;
        for (int i = 0; i < kWindow; ++i) {
            const double x = i - kWindow / 2;
            t[static_cast<std::size_t>(i)] = std::exp(-(x * x) / (2.0 * kSigma * kSigma));
            sum += t[static_cast<std::size_t>(i)];
        }
        for (auto& v : t) v /= sum;
        return t;
    }();
    return taps;
}

// Separable Gaussian filter, 'valid' boundary handling.
std::vector<double> filter_valid(const std::vector<double>& src, int w, int h) {
    const auto& taps = gaussian_taps();
    const int ow = w - kWindow + 1;
    const int oh = h - kWindow + 1;
    std::vector<double> rows(static_cast<std::size_t>(ow) * static_cast<std::size_t>(h));
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int k = 0; k < kWindow; ++k) {
                acc += taps[static_cast<std::size_t>(k)] * src[static_cast<std::size_t>(y * w + x + k)];
            }
            rows[static_cast<std::size_t>(y * ow + x)] = acc;
        }
    }
    std::vector<double> out(static_cast<std::size_t>(ow) * static_cast<std::size_t>(oh));
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int k = 0; k < kWindow; ++k) {
                acc += taps[static_cast<std::size_t>(k)] * rows[static_cast<std::size_t>((y + k) * ow + x)];
            }
            out[static_cast<std::size_t>(y * ow + x)] = acc;
        }
    }
    return out;
}

GrayImage from_mat(const cv::Mat& decoded, int side) {
    cv::Mat gray;
    if (decoded.channels() == 4) {
        // Transparent sticker backgrounds composite onto white.
        std::vector<cv::Mat> ch;
        cv::split(decoded, ch);
        cv::Mat bgr;
        cv::merge(std::vector<cv::Mat>{ch[0], ch[1], ch[2]}, bgr);
        cv::Mat alpha;
        ch[3].convertTo(alpha, CV_64F, 1.0 / 255.0);
        cv::Mat g;
        cv::cvtColor(bgr, g, cv::COLOR_BGR2GRAY);
        g.convertTo(g, CV_64F);
        gray = g.mul(alpha) + (1.0 - alpha) * 255.0;
    } else if (decoded.channels() == 3) {
        cv::cvtColor(decoded, gray, cv::COLOR_BGR2GRAY);
        gray.convertTo(gray, CV_64F);
    } else {
        decoded.convertTo(gray, CV_64F);
    }
    if (decoded.depth() == CV_16U) gray /= 257.0;
    cv::Mat resized;
    cv::resize(gray, resized, cv::Size(side, side), 0, 0, cv::INTER_AREA);
    GrayImage img;
    img.width = side;
    img.height = side;
    img.pixels.resize(static_cast<std::size_t>(side) * static_cast<std::size_t>(side));
    for (int y = 0; y < side; ++y) {
        for (int x = 0; x < side; ++x) {
            img.pixels[static_cast<std::size_t>(y * side + x)] = std::clamp(resized.at<double>(y, x), 0.0, 255.0);
        }
    }
    return img;
}

}  // namespace

std::string read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw AssetError("cannot read asset: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

GrayImage decode_gray(std::string_view bytes, int side) {
    if (side < kWindow) throw ConfigError("image side must be at least " + std::to_string(kWindow));
    std::vector<unsigned char> buf(bytes.begin(), bytes.end());
    cv::Mat decoded;
    if (!buf.empty()) decoded = cv::imdecode(buf, cv::IMREAD_UNCHANGED);
    if (decoded.empty()) throw AssetError("undecodable image data");
    return from_mat(decoded, side);
}

GrayImage load_gray(const std::filesystem::path& path, int side) {
    try {
        return decode_gray(read_bytes(path), side);
    } catch (const AssetError& e) {
        throw AssetError(path.string() + ": " + e.what());
    }
}

SsimPrepared prepare_ssim(const GrayImage& image) {
    if (image.width < kWindow || image.height < kWindow) {
        throw ShapeError("image smaller than the SSIM window");
    }
    SsimPrepared p;
    p.image = image;
    p.width = image.width - kWindow + 1;
    p.height = image.height - kWindow + 1;
    p.mu = filter_valid(image.pixels, image.width, image.height);
    std::vector<double> sq(image.pixels.size());
    for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = image.pixels[i] * image.pixels[i];
    const auto e_sq = filter_valid(sq, image.width, image.height);
    p.sigma_sq.resize(e_sq.size());
    for (std::size_t i = 0; i < e_sq.size(); ++i) p.sigma_sq[i] = e_sq[i] - p.mu[i] * p.mu[i];
    return p;
}

double ssim(const SsimPrepared& a, const SsimPrepared& b) {
    if (a.image.width != b.image.width || a.image.height != b.image.height) {
        throw ShapeError("SSIM inputs differ in size");
    }
    const auto& pa = a.image.pixels;
    const auto& pb = b.image.pixels;
    std::vector<double> prod(pa.size());
    for (std::size_t i = 0; i < prod.size(); ++i) prod[i] = pa[i] * pb[i];
    const auto e_ab = filter_valid(prod, a.image.width, a.image.height);
    double total = 0.0;
    for (std::size_t i = 0; i < e_ab.size(); ++i) {
        const double mu_ab = a.mu[i] * b.mu[i];
        const double cov = e_ab[i] - mu_ab;
        const double num = (2.0 * mu_ab + kC1) * (2.0 * cov + kC2);
        const double den = (a.mu[i] * a.mu[i] + b.mu[i] * b.mu[i] + kC1) * (a.sigma_sq[i] + b.sigma_sq[i] + kC2);
        total += num / den;
    }
    const double mean = total / static_cast<double>(e_ab.size());
    return std::clamp(mean, 0.0, 1.0);
}

double ssim(const GrayImage& a, const GrayImage& b) { return ssim(prepare_ssim(a), prepare_ssim(b)); }

SimilarityReport histogram_of(const std::vector<double>& pair_scores, std::size_t bins) {
    if (bins == 0) throw ConfigError("histogram needs at least one bin");
    SimilarityReport r;
    r.pairs = pair_scores.size();
    r.counts.assign(bins, 0);
    for (std::size_t i = 0; i <= bins; ++i) r.bin_edges.push_back(static_cast<double>(i) / static_cast<double>(bins));
    double sum = 0.0;
    for (double s : pair_scores) {
        sum += s;
        auto bin = static_cast<std::size_t>(s * static_cast<double>(bins));
        r.counts[std::min(bin, bins - 1)] += 1;
    }
    r.mean = pair_scores.empty() ? 0.0 : sum / static_cast<double>(pair_scores.size());
    return r;
}

SimilarityReport similarity_report(const std::vector<GrayImage>& images, std::size_t bins) {
    if (images.size() < 2) throw DomainError("similarity report needs at least 2 stickers");
    std::vector<SsimPrepared> prepared(images.size());
    for (std::size_t i = 0; i < images.size(); ++i) prepared[i] = prepare_ssim(images[i]);
    return histogram_of(kernels::omp::pairwise_ssim(prepared), bins);
}

}  // namespace stickersel
