#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace stickersel {

// SHA-256 of the input, lower-case hex.
std::string sha256_hex(std::string_view data);

// First 8 bytes of SHA-256, big-endian. Stable across platforms; used to
// seed the stub backends and to address cache records.
std::uint64_t stable_hash64(std::string_view data);

// Length-prefixed concatenation so ("ab","c") and ("a","bc") hash apart.
class KeyBuilder {
public:
    KeyBuilder& add(std::string_view part);
    KeyBuilder& add(std::uint64_t value);
    const std::string& bytes() const { return buf_; }
    std::string hex() const { return sha256_hex(buf_); }

private:
    std::string buf_;
};

std::string base64_encode(std::string_view data);

}  // namespace stickersel
