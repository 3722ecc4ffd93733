#pragma once
// Append-only, content-addressed record stores.
//
// Both stores load every record at open and append on put(). Keys are
// content hashes, so two writers racing on the same key write the same value
// and the last record read wins. All members are safe to call concurrently.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace stickersel {

struct CacheCounters {
    std::size_t hits = 0;
    std::size_t misses = 0;
};

// Text records: one JSON object {"k": key, "v": value} per line.
// An empty path gives an in-memory cache.
class StringCache {
public:
    explicit StringCache(std::filesystem::path path = {});

    std::optional<std::string> get(const std::string& key) const;
    void put(const std::string& key, const std::string& value);
    std::size_t size() const;
    CacheCounters counters() const;

private:
    std::filesystem::path path_;
    mutable std::mutex mu_;
    std::unordered_map<std::string, std::string> records_;
    std::ofstream out_;
    mutable std::atomic<std::size_t> hits_{0};
    mutable std::atomic<std::size_t> misses_{0};
};

// Binary records for float vectors.
//
//   header: "STKEMB" u16 format-version
//   record: u32 key length, key bytes, u32 dim, dim x float32 (little-endian)
//
// Keys carry the encoder id and version, so switching encoders never mixes
// embedding spaces: old entries are simply never looked up.
class EmbeddingCache {
public:
    static constexpr std::uint16_t kFormatVersion = 1;

    explicit EmbeddingCache(std::filesystem::path path = {});

    std::optional<std::vector<float>> get(const std::string& key) const;
    void put(const std::string& key, const std::vector<float>& values);
    std::size_t size() const;
    CacheCounters counters() const;

private:
    std::filesystem::path path_;
    mutable std::mutex mu_;
    std::unordered_map<std::string, std::vector<float>> records_;
    std::ofstream out_;
    mutable std::atomic<std::size_t> hits_{0};
    mutable std::atomic<std::size_t> misses_{0};
};

// Little-endian helpers shared with the index and checkpoint writers.
void write_u16(std::ostream& out, std::uint16_t v);
void write_u32(std::ostream& out, std::uint32_t v);
void write_f32(std::ostream& out, float v);
void write_f64(std::ostream& out, double v);
void write_str(std::ostream& out, const std::string& s);
std::uint16_t read_u16(std::istream& in);
std::uint32_t read_u32(std::istream& in);
float read_f32(std::istream& in);
double read_f64(std::istream& in);
std::string read_str(std::istream& in);

}  // namespace stickersel
