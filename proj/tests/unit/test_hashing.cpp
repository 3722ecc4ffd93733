#include <doctest.h>

#include "stickersel/hashing.hpp"

using namespace stickersel;

TEST_SUITE("hashing") {

TEST_CASE("sha256 known vectors") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("base64 known vectors") {
    CHECK(base64_encode("") == "");
    CHECK(base64_encode("f") == "Zg==");
    CHECK(base64_encode("hello") == "aGVsbG8=");
    CHECK(base64_encode(std::string("\0\xff", 2)) == "AP8=");
}

TEST_CASE("stable hash is deterministic and input-sensitive") {
    CHECK(stable_hash64("sticker") == stable_hash64("sticker"));
    CHECK(stable_hash64("sticker") != stable_hash64("sticker "));
}

TEST_CASE("key builder separates parts unambiguously") {
    KeyBuilder a;
    a.add("ab").add("c");
    KeyBuilder b;
    b.add("a").add("bc");
    CHECK(a.hex() != b.hex());
    KeyBuilder c;
    c.add("ab").add("c");
    CHECK(a.hex() == c.hex());
    KeyBuilder n1;
    n1.add(std::uint64_t{1});
    KeyBuilder n2;
    n2.add(std::uint64_t{2});
    CHECK(n1.hex() != n2.hex());
}

}
