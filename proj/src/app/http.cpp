#include "stickersel/app/http.hpp"

#include "stickersel/error.hpp"

#include <httplib.h>

namespace stickersel::app {

using nlohmann::json;

namespace {

int status_for(const std::exception& e) {
    if (dynamic_cast<const NotFoundError*>(&e)) return 404;
    if (dynamic_cast<const ValidationError*>(&e) || dynamic_cast<const RangeError*>(&e) ||
        dynamic_cast<const LoadError*>(&e) || dynamic_cast<const json::exception*>(&e)) {
        return 400;
    }
    if (dynamic_cast<const PreconditionError*>(&e) || dynamic_cast<const VersionError*>(&e)) return 409;
    return 500;
}

void send_json(httplib::Response& res, const json& body, int status = 200) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    try {
        auto j = json::parse(req.body);
        if (!j.is_object()) throw ValidationError("request body must be a JSON object");
        return j;
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("malformed JSON body: ") + e.what());
    }
}

std::string required_string(const json& body, const char* key) {
    if (!body.contains(key) || !body[key].is_string()) {
        throw ValidationError(std::string("missing string field '") + key + "'");
    }
    return body[key].get<std::string>();
}

std::optional<std::string> optional_string(const json& body, const char* key) {
    if (!body.contains(key) || body[key].is_null()) return std::nullopt;
    if (!body[key].is_string()) throw ValidationError(std::string("field '") + key + "' must be a string");
    return body[key].get<std::string>();
}

template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
    return [fn](const httplib::Request& req, httplib::Response& res) {
        try {
            fn(req, res);
        } catch (const std::exception& e) {
            send_json(res, {{"error", e.what()}}, status_for(e));
        }
    };
}

}  // namespace

struct HttpServer::Impl {
    RetrievalService& service;
    httplib::Server server;

    explicit Impl(RetrievalService& s) : service(s) {
        server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                    {"Access-Control-Allow-Headers", "Content-Type"},
                                    {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
        server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

        server.Get("/healthz", guarded([this](const httplib::Request&, httplib::Response& res) {
                       send_json(res, service.health());
                   }));
        server.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
                        const auto body = parse_body(req);
                        const auto r = service.create_session(optional_string(body, "index_id"),
                                                              optional_string(body, "checkpoint_id"));
                        send_json(res, to_json(r), 201);
                    }));
        server.Get(R"(/sessions/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
                       send_json(res, to_json(service.get_session(req.matches[1])));
                   }));
        server.Post(R"(/sessions/([^/]+)/messages)",
                    guarded([this](const httplib::Request& req, httplib::Response& res) {
                        const auto body = parse_body(req);
                        const auto text = body.contains("text") && body["text"].is_string()
                                              ? body["text"].get<std::string>()
                                              : std::string{};
                        send_json(res, to_json(service.post_utterance(req.matches[1],
                                                                      required_string(body, "speaker_id"), text)));
                    }));
        server.Get(R"(/sessions/([^/]+)/suggestions)",
                   guarded([this](const httplib::Request& req, httplib::Response& res) {
                       std::size_t k = 5;
                       if (req.has_param("k")) {
                           const auto raw = req.get_param_value("k");
                           try {
                               std::size_t used = 0;
                               const long long v = std::stoll(raw, &used);
                               if (used != raw.size() || v < 1) throw RangeError("");
                               k = static_cast<std::size_t>(v);
                           } catch (const std::exception&) {
                               throw RangeError("k must be a positive integer, got '" + raw + "'");
                           }
                       }
                       send_json(res, to_json(service.suggest(req.matches[1], k)));
                   }));
        server.Post(R"(/sessions/([^/]+)/sticker)",
                    guarded([this](const httplib::Request& req, httplib::Response& res) {
                        const auto body = parse_body(req);
                        send_json(res, to_json(service.commit_sticker(req.matches[1],
                                                                      required_string(body, "sticker_id"),
                                                                      optional_string(body, "speaker_id"))));
                    }));
        server.Get(R"(/stickers/([^/]+)/image)", guarded([this](const httplib::Request& req, httplib::Response& res) {
                       auto [bytes, mime] = service.sticker_image(req.matches[1]);
                       res.set_content(std::move(bytes), mime);
                   }));
        server.Get(R"(/stickers/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
                       send_json(res, service.sticker_details(req.matches[1]));
                   }));
    }
};

HttpServer::HttpServer(RetrievalService& service) : impl_(std::make_unique<Impl>(service)) {}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
    if (port == 0) {
        const int bound = impl_->server.bind_to_any_port(host);
        if (bound < 0) throw ConfigError("cannot bind " + host);
        return bound;
    }
    if (!impl_->server.bind_to_port(host, port)) throw ConfigError("cannot bind " + host + ":" + std::to_string(port));
    return port;
}

void HttpServer::run() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
    if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

}  // namespace stickersel::app
