#include "stickersel/synthetic.hpp"

#include "stickersel/error.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <array>
#include <random>

namespace stickersel {

namespace {

struct PlantedLabel {
    const char* name;
    std::array<const char*, 4> keywords;
};

constexpr std::array<PlantedLabel, 5> kPlanted = {{
    {"joy", {"happy", "yay", "great", "fun"}},
    {"sadness", {"sad", "cry", "miss", "lonely"}},
    {"anger", {"angry", "mad", "furious", "annoyed"}},
    {"gratitude", {"thanks", "grateful", "appreciate", "kind"}},
    {"surprise", {"wow", "whoa", "unexpected", "shocked"}},
}};

constexpr std::array<const char*, 12> kFiller = {"today", "we",    "the",   "meeting", "lunch", "weekend",
                                                 "really", "just", "so",    "okay",    "maybe", "later"};

void write_sticker_png(const std::filesystem::path& path, std::size_t label, std::size_t variant) {
    cv::Mat img(96, 96, CV_8UC3, cv::Scalar(255, 255, 255));
    const cv::Scalar color(40 + 40 * static_cast<double>(label), 200 - 30 * static_cast<double>(variant),
                           90 + 25 * static_cast<double>(label + variant));
    const cv::Point center(48, 48);
    switch ((label + variant) % 3) {
        case 0: cv::circle(img, center, 30 - 4 * static_cast<int>(variant), color, cv::FILLED); break;
        case 1: cv::rectangle(img, {18, 18}, {78 - 6 * static_cast<int>(variant), 78}, color, cv::FILLED); break;
        default: {
            std::vector<cv::Point> tri = {{48, 12}, {12 + 4 * static_cast<int>(variant), 84}, {84, 84}};
            cv::fillConvexPoly(img, tri, color);
        }
    }
    cv::line(img, {10, 10 + 8 * static_cast<int>(label)}, {86, 86 - 6 * static_cast<int>(variant)}, {0, 0, 0}, 2);
    if (!cv::imwrite(path.string(), img)) throw AssetError("cannot write " + path.string());
}

std::string sentence(std::mt19937_64& rng, const PlantedLabel& label, std::size_t keywords) {
    std::string s;
    auto add = [&](const char* w) { s += (s.empty() ? "" : " ") + std::string(w); };
    add(kFiller[rng() % kFiller.size()]);
    for (std::size_t k = 0; k < keywords; ++k) add(label.keywords[rng() % label.keywords.size()]);
    add(kFiller[rng() % kFiller.size()]);
    return s;
}

}  // namespace

Corpus make_planted_corpus(const std::filesystem::path& dir, const SyntheticOptions& options) {
    namespace fs = std::filesystem;
    const fs::path raw = dir / "raw";
    fs::create_directories(raw);
    std::mt19937_64 rng(options.seed);

    Corpus corpus;
    corpus.name = "planted";
    for (const auto& l : kPlanted) corpus.taxonomy.emplace_back(l.name);

    auto sticker_id = [](std::size_t label, std::size_t v) {
        return std::string(kPlanted[label].name) + "_" + std::to_string(v);
    };
    for (std::size_t l = 0; l < kPlanted.size(); ++l) {
        for (std::size_t v = 0; v < options.stickers_per_label; ++v) {
            Sticker s;
            s.id = sticker_id(l, v);
            s.image_ref = raw / (s.id + ".png");
            write_sticker_png(s.image_ref, l, v);
            // The first variant of each label carries a caption.
            if (v == 0) s.verbal_text = kPlanted[l].keywords[0];
            corpus.stickers[s.id] = s;
        }
    }

    const std::array<std::pair<Split, std::size_t>, 3> splits = {
        {{Split::Train, options.train}, {Split::Valid, options.valid}, {Split::Test, options.test}}};
    std::size_t serial = 0;
    for (const auto& [split, count] : splits) {
        for (std::size_t i = 0; i < count; ++i, ++serial) {
            // Round-robin so every sticker is gold at least once per split when
            // the split is large enough.
            const auto label = i % kPlanted.size();
            const auto variant = (i / kPlanted.size()) % options.stickers_per_label;
            Conversation c;
            c.id = to_string(split) + "-" + std::to_string(i);
            c.split = split;
            c.intention_label = kPlanted[label].name;
            c.gold_sticker_id = sticker_id(label, variant);
            c.target_speaker = "User_2";
            const auto turns = 2 + rng() % 3;
            for (std::size_t t = 0; t < turns; ++t) {
                Utterance u;
                u.index = static_cast<int>(t);
                u.speaker_id = (turns - t) % 2 == 1 ? "User_1" : "User_2";
                u.text = sentence(rng, kPlanted[label], 2 + rng() % 2);
                c.utterances.push_back(u);
            }
            Utterance reply;
            reply.index = static_cast<int>(turns);
            reply.speaker_id = "User_2";
            reply.sticker_id = c.gold_sticker_id;
            c.scenario = serial % 3 == 2 ? Scenario::DR : Scenario::SR;
            if (c.scenario == Scenario::SR) reply.text = sentence(rng, kPlanted[label], 1);
            c.utterances.push_back(reply);
            corpus.conversations.push_back(std::move(c));
        }
    }
    validate_corpus(corpus);
    save_corpus(corpus, dir);
    fs::remove_all(raw);
    return load_corpus(dir);
}

ModelParameters planted_solution(const TrainingData& data, const QueryEncoder& encoder, ModelParameters base) {
    const auto labels = encoder.taxonomy().size();
    const auto text_dim = data.train.front().context.size();
    Eigen::MatrixXd centroids = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(labels), text_dim);
    std::vector<double> counts(labels, 0.0);
    for (std::size_t i = 0; i < data.train.size(); ++i) {
        centroids.row(static_cast<Eigen::Index>(data.train_labels[i])) += data.train[i].context.transpose();
        counts[data.train_labels[i]] += 1.0;
    }
    for (std::size_t k = 0; k < labels; ++k) {
        if (counts[k] > 0) centroids.row(static_cast<Eigen::Index>(k)) /= counts[k];
    }
    base.intention.weight = 20.0 * centroids;
    base.intention.bias = -10.0 * centroids.rowwise().squaredNorm();

    base.fusion.query.setZero();
    const auto n = static_cast<Eigen::Index>(data.stickers.size());
    const auto region_dim = data.stickers.front().regions.cols();
    const auto d = static_cast<Eigen::Index>(base.fusion.d());
    Eigen::MatrixXd means(n, region_dim);
    Eigen::MatrixXd targets = Eigen::MatrixXd::Zero(n, d);
    for (Eigen::Index j = 0; j < n; ++j) {
        const auto& s = data.stickers[static_cast<std::size_t>(j)];
        means.row(j) = s.regions.colwise().mean();
        const auto& ls = data.sticker_label_sets[static_cast<std::size_t>(j)];
        if (ls.size() != 1) continue;
        const auto& tax = encoder.taxonomy();
        const auto k = static_cast<std::size_t>(std::find(tax.begin(), tax.end(), *ls.begin()) - tax.begin());
        const Eigen::VectorXd y = encoder.query_for(Eigen::VectorXd::Zero(text_dim), k);
        if (y.size() != d) throw ShapeError("planted solution needs query dim == d");
        targets.row(j) = y.transpose();
    }
    base.fusion.vis.weight = means.completeOrthogonalDecomposition().solve(targets).transpose();
    base.fusion.vis.bias.setZero();
    return base;
}

}  // namespace stickersel
