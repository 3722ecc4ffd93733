#pragma once
// Small on-disk corpora written directly, independent of the synthetic generator.

#include "support.hpp"

#include <json.hpp>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <fstream>
#include <string>
#include <vector>

namespace fixtures {

inline std::string png_bytes(int seed, int side = 48) {
    cv::Mat img(side, side, CV_8UC3, cv::Scalar(40 * (seed % 6), 255 - 30 * (seed % 8), 90));
    cv::circle(img, {side / 2, side / 2}, 6 + 3 * (seed % 5), cv::Scalar(255, 255, 255), -1);
    cv::rectangle(img, {seed % 10, seed % 7}, {seed % 10 + 10, seed % 7 + 12}, cv::Scalar(0, 0, 0), -1);
    std::vector<unsigned char> buf;
    cv::imencode(".png", img, buf);
    return {buf.begin(), buf.end()};
}

inline void write_file(const std::filesystem::path& p, const std::string& data) {
    std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    out << data;
}

inline nlohmann::json utt(int index, const std::string& speaker, const std::string& text,
                          const std::string& sticker = {}) {
    nlohmann::json j = {{"index", index}, {"speaker_id", speaker}, {"text", text}};
    if (!sticker.empty()) j["sticker_id"] = sticker;
    return j;
}

// Writes a dataset dir with the given stickers (id -> caption, "" for none)
// and conversation JSON objects.
inline void write_dataset(const std::filesystem::path& dir, const std::vector<std::string>& taxonomy,
                          const std::vector<std::pair<std::string, std::string>>& stickers,
                          const std::vector<nlohmann::json>& conversations) {
    nlohmann::json manifest = {{"name", "fixture"},
                               {"format", "stickerint"},
                               {"taxonomy", taxonomy},
                               {"stickers", "stickers.jsonl"},
                               {"sticker_dir", "stickers"},
                               {"conversations", "conversations.jsonl"}};
    write_file(dir / "manifest.json", manifest.dump());
    std::string lines;
    int seed = 0;
    for (const auto& [id, caption] : stickers) {
        write_file(dir / "stickers" / (id + ".png"), png_bytes(seed++));
        nlohmann::json j = {{"id", id}, {"file", id + ".png"}};
        if (!caption.empty()) j["verbal_text"] = caption;
        lines += j.dump() + "\n";
    }
    write_file(dir / "stickers.jsonl", lines);
    std::string conv;
    for (const auto& c : conversations) conv += c.dump() + "\n";
    write_file(dir / "conversations.jsonl", conv);
}

inline nlohmann::json minimal_conversation(const std::string& id = "c1", const std::string& sticker = "s1",
                                           const std::string& label = "joy") {
    return {{"id", id},
            {"utterances", {utt(0, "User_1", "I passed the exam"), utt(1, "User_2", "", sticker)}},
            {"target_speaker", "User_2"},
            {"gold_sticker_id", sticker},
            {"intention_label", label},
            {"scenario", "DR"},
            {"split", "train"}};
}

}  // namespace fixtures
