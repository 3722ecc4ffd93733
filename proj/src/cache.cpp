#include "stickersel/cache.hpp"

#include "stickersel/error.hpp"

#include <json.hpp>

#include <bit>
#include <cstring>

namespace stickersel {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// binary helpers
// ---------------------------------------------------------------------------

namespace {

template <typename U>
void write_le(std::ostream& out, U v) {
    char buf[sizeof(U)];
    for (std::size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(buf, sizeof(U));
}

template <typename U>
U read_le(std::istream& in) {
    unsigned char buf[sizeof(U)];
    if (!in.read(reinterpret_cast<char*>(buf), sizeof(U))) throw LoadError("truncated binary record");
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(buf[i]) << (8 * i);
    return v;
}

constexpr char kEmbMagic[6] = {'S', 'T', 'K', 'E', 'M', 'B'};

}  // namespace

void write_u16(std::ostream& out, std::uint16_t v) { write_le(out, v); }
void write_u32(std::ostream& out, std::uint32_t v) { write_le(out, v); }
void write_f32(std::ostream& out, float v) { write_le(out, std::bit_cast<std::uint32_t>(v)); }
void write_f64(std::ostream& out, double v) { write_le(out, std::bit_cast<std::uint64_t>(v)); }
void write_str(std::ostream& out, const std::string& s) {
    write_u32(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}
std::uint16_t read_u16(std::istream& in) { return read_le<std::uint16_t>(in); }
std::uint32_t read_u32(std::istream& in) { return read_le<std::uint32_t>(in); }
float read_f32(std::istream& in) { return std::bit_cast<float>(read_le<std::uint32_t>(in)); }
double read_f64(std::istream& in) { return std::bit_cast<double>(read_le<std::uint64_t>(in)); }
std::string read_str(std::istream& in) {
    const auto n = read_u32(in);
    std::string s(n, '\0');
    if (n > 0 && !in.read(s.data(), n)) throw LoadError("truncated string record");
    return s;
}

// ---------------------------------------------------------------------------
// StringCache
// ---------------------------------------------------------------------------

StringCache::StringCache(fs::path path) : path_(std::move(path)) {
    if (path_.empty()) return;
    if (path_.has_parent_path()) fs::create_directories(path_.parent_path());
    if (fs::exists(path_)) {
        std::ifstream in(path_);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            try {
                auto j = nlohmann::json::parse(line);
                records_[j.at("k").get<std::string>()] = j.at("v").get<std::string>();
            } catch (const nlohmann::json::exception&) {
                // A torn final line from an interrupted writer; earlier records stand.
                break;
            }
        }
    }
    out_.open(path_, std::ios::app);
    if (!out_) throw LoadError("cannot open cache for append: " + path_.string());
}

std::optional<std::string> StringCache::get(const std::string& key) const {
    std::lock_guard lock(mu_);
    auto it = records_.find(key);
    if (it == records_.end()) {
        ++misses_;
        return std::nullopt;
    }
    ++hits_;
    return it->second;
}

void StringCache::put(const std::string& key, const std::string& value) {
    std::lock_guard lock(mu_);
    records_[key] = value;
    if (out_.is_open()) {
        out_ << nlohmann::json{{"k", key}, {"v", value}}.dump() << '\n';
        out_.flush();
    }
}

std::size_t StringCache::size() const {
    std::lock_guard lock(mu_);
    return records_.size();
}

CacheCounters StringCache::counters() const { return {hits_.load(), misses_.load()}; }

// ---------------------------------------------------------------------------
// EmbeddingCache
// ---------------------------------------------------------------------------

EmbeddingCache::EmbeddingCache(fs::path path) : path_(std::move(path)) {
    if (path_.empty()) return;
    if (path_.has_parent_path()) fs::create_directories(path_.parent_path());
    const bool fresh = !fs::exists(path_) || fs::file_size(path_) == 0;
    if (!fresh) {
        std::ifstream in(path_, std::ios::binary);
        char magic[sizeof(kEmbMagic)];
        if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kEmbMagic, sizeof(magic)) != 0) {
            throw VersionError(path_.string() + " is not an embedding cache");
        }
        const auto version = read_u16(in);
        if (version != kFormatVersion) {
            throw VersionError(path_.string() + ": embedding cache format " + std::to_string(version) +
                               ", expected " + std::to_string(kFormatVersion));
        }
        while (in.peek() != std::char_traits<char>::eof()) {
            try {
                auto key = read_str(in);
                const auto dim = read_u32(in);
                std::vector<float> v(dim);
                for (auto& x : v) x = read_f32(in);
                records_[std::move(key)] = std::move(v);
            } catch (const LoadError&) {
                break;  // torn tail
            }
        }
    }
    out_.open(path_, std::ios::binary | std::ios::app);
    if (!out_) throw LoadError("cannot open cache for append: " + path_.string());
    if (fresh) {
        out_.write(kEmbMagic, sizeof(kEmbMagic));
        write_u16(out_, kFormatVersion);
        out_.flush();
    }
}

std::optional<std::vector<float>> EmbeddingCache::get(const std::string& key) const {
    std::lock_guard lock(mu_);
    auto it = records_.find(key);
    if (it == records_.end()) {
        ++misses_;
        return std::nullopt;
    }
    ++hits_;
    return it->second;
}

void EmbeddingCache::put(const std::string& key, const std::vector<float>& values) {
    std::lock_guard lock(mu_);
    records_[key] = values;
    if (out_.is_open()) {
        write_str(out_, key);
        write_u32(out_, static_cast<std::uint32_t>(values.size()));
        for (float v : values) write_f32(out_, v);
        out_.flush();
    }
}

std::size_t EmbeddingCache::size() const {
    std::lock_guard lock(mu_);
    return records_.size();
}

CacheCounters EmbeddingCache::counters() const { return {hits_.load(), misses_.load()}; }

}  // namespace stickersel
