#include "stickersel/remote.hpp"

#include "stickersel/error.hpp"
#include "stickersel/hashing.hpp"
#include "stickersel/text.hpp"

#include <httplib.h>
#include <json.hpp>

namespace stickersel {

using nlohmann::json;

Endpoint Endpoint::parse(const std::string& url) {
    const auto scheme = url.find("://");
    if (scheme == std::string::npos) throw ConfigError("endpoint URL needs a scheme: " + url);
    const auto slash = url.find('/', scheme + 3);
    Endpoint e;
    e.base = url.substr(0, slash);
    e.path = slash == std::string::npos ? "/" : url.substr(slash);
    return e;
}

namespace {

json post_json(const Endpoint& ep, const json& body, std::string_view what) {
    httplib::Client client(ep.base);
    client.set_connection_timeout(ep.timeout_seconds, 0);
    client.set_read_timeout(ep.timeout_seconds, 0);
    auto res = client.Post(ep.path, body.dump(), "application/json");
    if (!res) {
        throw BackendError(std::string(what) + ": no response from " + ep.base + ep.path + " (" +
                           httplib::to_string(res.error()) + ")");
    }
    if (res->status < 200 || res->status >= 300) {
        throw BackendError(std::string(what) + ": HTTP " + std::to_string(res->status) + " from " + ep.base + ep.path);
    }
    try {
        return json::parse(res->body);
    } catch (const json::exception& e) {
        throw BackendError(std::string(what) + ": malformed reply: " + e.what());
    }
}

std::vector<float> as_floats(const json& arr, std::size_t dim, std::string_view what) {
    if (!arr.is_array() || arr.size() != dim) {
        throw BackendError(std::string(what) + ": expected a vector of dim " + std::to_string(dim));
    }
    std::vector<float> out;
    out.reserve(dim);
    for (const auto& v : arr) out.push_back(v.get<float>());
    return out;
}

}  // namespace

RemoteGenerator::RemoteGenerator(Endpoint endpoint, std::string model_id)
    : endpoint_(std::move(endpoint)), model_id_(std::move(model_id)) {}

std::string RemoteGenerator::generate(std::string_view context_text, RelationType relation) const {
    const auto reply = post_json(endpoint_, {{"text", context_text}, {"relation", relation_name(relation)}},
                                 "commonsense generator");
    if (!reply.contains("inference")) throw BackendError("commonsense generator reply lacks 'inference'");
    return reply["inference"].get<std::string>();
}

RemoteTextEncoder::RemoteTextEncoder(Endpoint endpoint, std::string model_id, std::size_t dim,
                                     std::size_t max_length)
    : endpoint_(std::move(endpoint)), model_id_(std::move(model_id)), dim_(dim), max_length_(max_length) {}

TextEncoding RemoteTextEncoder::encode(std::string_view text) const {
    const auto reply = post_json(endpoint_, {{"text", text}, {"max_length", max_length_}}, "text encoder");
    const auto& states = reply.value("last_hidden_state", json::array());
    if (!states.is_array() || states.empty()) throw BackendError("text encoder reply lacks 'last_hidden_state'");
    TextEncoding out;
    out.embedding.values = as_floats(states.front(), dim_, "text encoder");
    out.embedding.source = id();
    out.tokens_used = states.size();
    out.truncated = reply.value("truncated", count_tokens(text) > max_length_);
    return out;
}

RemoteVisualEncoder::RemoteVisualEncoder(Endpoint endpoint, std::string model_id, std::size_t dim,
                                         std::size_t regions)
    : endpoint_(std::move(endpoint)), model_id_(std::move(model_id)), dim_(dim), regions_(regions) {}

RegionEmbeddings RemoteVisualEncoder::encode(std::string_view image_bytes) const {
    const auto reply = post_json(endpoint_, {{"image_base64", base64_encode(image_bytes)}}, "visual encoder");
    if (reply.value("error", std::string{}) == "undecodable") throw AssetError("undecodable image data");
    const auto& regions = reply.value("regions", json::array());
    if (regions.size() != regions_) {
        throw BackendError("visual encoder returned " + std::to_string(regions.size()) + " regions, expected " +
                           std::to_string(regions_));
    }
    RegionEmbeddings out;
    for (const auto& r : regions) out.regions.push_back(Embedding{as_floats(r, dim_, "visual encoder"), id()});
    return out;
}

RemoteDescriber::RemoteDescriber(Endpoint endpoint, std::string model_id)
    : endpoint_(std::move(endpoint)), model_id_(std::move(model_id)) {}

std::string RemoteDescriber::describe(const Sticker& sticker, std::string_view image_bytes, Attribute attribute,
                                      std::string_view prompt) const {
    const auto reply = post_json(endpoint_,
                                 {{"prompt", prompt},
                                  {"attribute", attribute_name(attribute)},
                                  {"sticker_id", sticker.id},
                                  {"image_base64", base64_encode(image_bytes)}},
                                 "attribute describer");
    if (!reply.contains("text")) throw BackendError("attribute describer reply lacks 'text'");
    return reply["text"].get<std::string>();
}

}  // namespace stickersel
