#include <doctest.h>

#include "support.hpp"
#include "stickersel/cache.hpp"
#include "stickersel/error.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

using namespace stickersel;

TEST_SUITE("cache") {

TEST_CASE("string cache persists across reopen") {
    testsupport::TempDir dir("cache");
    const auto path = dir / "knowledge.cache";
    {
        StringCache c(path);
        c.put("k1", "first");
        c.put("k2", "line\nbreak \"quoted\"");
        CHECK(c.size() == 2);
    }
    StringCache c(path);
    CHECK(c.size() == 2);
    CHECK(c.get("k1") == std::optional<std::string>("first"));
    CHECK(c.get("k2") == std::optional<std::string>("line\nbreak \"quoted\""));
    CHECK_FALSE(c.get("k3").has_value());
    CHECK(c.counters().hits == 2);
    CHECK(c.counters().misses == 1);
}

TEST_CASE("embedding cache persists exact float bits") {
    testsupport::TempDir dir("cache");
    const auto path = dir / "embeddings.cache";
    const std::vector<float> v{1.0f, -0.0f, 3.14159274f, 1e-38f, -7.5f};
    {
        EmbeddingCache c(path);
        c.put("text|hello", v);
    }
    EmbeddingCache c(path);
    const auto got = c.get("text|hello");
    REQUIRE(got.has_value());
    REQUIRE(got->size() == v.size());
    CHECK(std::memcmp(got->data(), v.data(), v.size() * sizeof(float)) == 0);
}

TEST_CASE("last record for a key wins after reload") {
    testsupport::TempDir dir("cache");
    const auto path = dir / "embeddings.cache";
    {
        EmbeddingCache c(path);
        c.put("k", {1.0f});
        c.put("k", {2.0f});
    }
    EmbeddingCache c(path);
    CHECK(c.get("k")->front() == 2.0f);
}

TEST_CASE("embedding cache with another format version is rejected") {
    testsupport::TempDir dir("cache");
    const auto path = dir / "embeddings.cache";
    {
        std::ofstream out(path, std::ios::binary);
        out.write("STKEMB", 6);
        write_u16(out, EmbeddingCache::kFormatVersion + 1);
    }
    CHECK_THROWS_AS(EmbeddingCache{path}, VersionError);
    {
        std::ofstream out(path, std::ios::binary);
        out << "garbage!";
    }
    CHECK_THROWS_AS(EmbeddingCache{path}, VersionError);
}

TEST_CASE("truncated trailing record is ignored") {
    testsupport::TempDir dir("cache");
    const auto path = dir / "embeddings.cache";
    {
        EmbeddingCache c(path);
        c.put("a", {1.0f, 2.0f});
    }
    {
        std::ofstream out(path, std::ios::binary | std::ios::app);
        write_u32(out, 10);
        out.write("abc", 3);
    }
    EmbeddingCache c(path);
    CHECK(c.size() == 1);
    CHECK(c.get("a").has_value());
}

TEST_CASE("binary helpers are little-endian") {
    std::stringstream ss;
    write_u32(ss, 0x01020304u);
    const auto s = ss.str();
    REQUIRE(s.size() == 4);
    CHECK(static_cast<unsigned char>(s[0]) == 0x04);
    CHECK(static_cast<unsigned char>(s[3]) == 0x01);
    std::stringstream rt;
    write_f64(rt, -2.5);
    write_str(rt, "hi");
    write_u16(rt, 7);
    CHECK(read_f64(rt) == -2.5);
    CHECK(read_str(rt) == "hi");
    CHECK(read_u16(rt) == 7);
    CHECK_THROWS_AS(read_u32(rt), LoadError);
}

}
