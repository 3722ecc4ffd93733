#include <doctest.h>

#include "stickersel/error.hpp"
#include "stickersel/remote.hpp"

#include <httplib.h>
#include <json.hpp>

#include <thread>

using namespace stickersel;
using nlohmann::json;

namespace {

// A stand-in inference server with one canned handler per route.
struct FakeServer {
    httplib::Server server;
    std::thread thread;
    int port = 0;
    json last_request;

    FakeServer() {
        server.Post("/gen", [this](const httplib::Request& req, httplib::Response& res) {
            last_request = json::parse(req.body);
            res.set_content(json{{"inference", "to celebrate"}}.dump(), "application/json");
        });
        server.Post("/text", [this](const httplib::Request& req, httplib::Response& res) {
            last_request = json::parse(req.body);
            res.set_content(json{{"last_hidden_state", {{1.0, 2.0, 3.0}, {9.0, 9.0, 9.0}}}}.dump(), "application/json");
        });
        server.Post("/visual", [this](const httplib::Request& req, httplib::Response& res) {
            last_request = json::parse(req.body);
            if (last_request["image_base64"] == "") {
                res.set_content(json{{"error", "undecodable"}}.dump(), "application/json");
                return;
            }
            res.set_content(json{{"regions", {{0.5, 0.25}, {1.0, -1.0}}}}.dump(), "application/json");
        });
        server.Post("/describe", [this](const httplib::Request& req, httplib::Response& res) {
            last_request = json::parse(req.body);
            res.set_content(json{{"text", "waving hand"}}.dump(), "application/json");
        });
        server.Post("/fail", [](const httplib::Request&, httplib::Response& res) { res.status = 500; });
        server.Post("/garbage", [](const httplib::Request&, httplib::Response& res) {
            res.set_content("not json", "text/plain");
        });
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~FakeServer() {
        server.stop();
        thread.join();
    }
    Endpoint at(const std::string& route) const {
        auto e = Endpoint::parse("http://127.0.0.1:" + std::to_string(port) + route);
        e.timeout_seconds = 5;
        return e;
    }
};

}  // namespace

TEST_SUITE("remote") {

TEST_CASE("endpoint parsing") {
    const auto e = Endpoint::parse("http://host:8000/v1/encode");
    CHECK(e.base == "http://host:8000");
    CHECK(e.path == "/v1/encode");
    CHECK(Endpoint::parse("http://host").path == "/");
    CHECK_THROWS_AS(Endpoint::parse("host:8000/x"), ConfigError);
}

TEST_CASE("text encoder pools the first position") {
    FakeServer s;
    RemoteTextEncoder enc(s.at("/text"), "m", 3, 16);
    const auto out = enc.encode("hello");
    CHECK(out.embedding.values == std::vector<float>{1.0f, 2.0f, 3.0f});
    CHECK(out.tokens_used == 2);
    CHECK(s.last_request["text"] == "hello");
    CHECK(s.last_request["max_length"] == 16);
    CHECK(enc.id() == "remote-text/m");
    RemoteTextEncoder wrong(s.at("/text"), "m", 4, 16);
    CHECK_THROWS_AS(wrong.encode("hello"), BackendError);
}

TEST_CASE("visual encoder reads regions and maps undecodable images") {
    FakeServer s;
    RemoteVisualEncoder enc(s.at("/visual"), "v", 2, 2);
    const auto out = enc.encode("png-bytes");
    REQUIRE(out.count() == 2);
    CHECK(out.regions[1].values == std::vector<float>{1.0f, -1.0f});
    CHECK_THROWS_AS(enc.encode(""), AssetError);
    RemoteVisualEncoder wrong(s.at("/visual"), "v", 2, 3);
    CHECK_THROWS_AS(wrong.encode("png-bytes"), BackendError);
}

TEST_CASE("generator and describer payloads") {
    FakeServer s;
    RemoteGenerator gen(s.at("/gen"), "g");
    CHECK(gen.generate("User_1: yay", RelationType::XWant) == "to celebrate");
    CHECK(s.last_request["relation"] == std::string(relation_name(RelationType::XWant)));
    RemoteDescriber desc(s.at("/describe"), "d");
    Sticker st;
    st.id = "joy_0";
    CHECK(desc.describe(st, "img", Attribute::Gesture, "describe it") == "waving hand");
    CHECK(s.last_request["sticker_id"] == "joy_0");
    CHECK(s.last_request["prompt"] == "describe it");
}

TEST_CASE("transport and protocol failures are backend errors") {
    FakeServer s;
    CHECK_THROWS_AS(RemoteGenerator(s.at("/fail"), "g").generate("x", RelationType::XIntent), BackendError);
    CHECK_THROWS_AS(RemoteGenerator(s.at("/garbage"), "g").generate("x", RelationType::XIntent), BackendError);
    CHECK_THROWS_AS(RemoteGenerator(s.at("/text"), "g").generate("x", RelationType::XIntent), BackendError);
    auto dead = Endpoint::parse("http://127.0.0.1:1/gen");
    dead.timeout_seconds = 1;
    CHECK_THROWS_AS(RemoteGenerator(dead, "g").generate("x", RelationType::XIntent), BackendError);
}

}
