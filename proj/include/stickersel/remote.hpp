#pragma once
// Model-backed clients that talk JSON over HTTP to an inference server.
//
//   generator   POST {"text", "relation"}                  -> {"inference": str}
//   text        POST {"text", "max_length"}                -> {"last_hidden_state": [[f...], ...]}
//   visual      POST {"image_base64"}                      -> {"regions": [[f...], ...]}
//   describer   POST {"prompt", "attribute", "sticker_id", "image_base64"} -> {"text": str}
//
// The text client pools the sequence output by taking position 0 (the
// classifier token). Transport failures and non-2xx replies raise
// BackendError.

#include "stickersel/encoders.hpp"
#include "stickersel/knowledge.hpp"

#include <string>

namespace stickersel {

struct Endpoint {
    std::string base;  // scheme://host:port
    std::string path;  // /route
    int timeout_seconds = 30;

    static Endpoint parse(const std::string& url);
};

class RemoteGenerator final : public CommonsenseGenerator {
public:
    RemoteGenerator(Endpoint endpoint, std::string model_id);
    std::string generate(std::string_view context_text, RelationType relation) const override;
    std::string id() const override { return "remote-commonsense/" + model_id_; }

private:
    Endpoint endpoint_;
    std::string model_id_;
};

class RemoteTextEncoder final : public TextEncoder {
public:
    RemoteTextEncoder(Endpoint endpoint, std::string model_id, std::size_t dim, std::size_t max_length);
    TextEncoding encode(std::string_view text) const override;
    std::size_t dim() const override { return dim_; }
    std::size_t max_length() const override { return max_length_; }
    std::string id() const override { return "remote-text/" + model_id_; }

private:
    Endpoint endpoint_;
    std::string model_id_;
    std::size_t dim_;
    std::size_t max_length_;
};

class RemoteVisualEncoder final : public VisualEncoder {
public:
    RemoteVisualEncoder(Endpoint endpoint, std::string model_id, std::size_t dim, std::size_t regions);
    RegionEmbeddings encode(std::string_view image_bytes) const override;
    std::size_t dim() const override { return dim_; }
    std::size_t regions() const override { return regions_; }
    std::string id() const override { return "remote-visual/" + model_id_; }

private:
    Endpoint endpoint_;
    std::string model_id_;
    std::size_t dim_;
    std::size_t regions_;
};

class RemoteDescriber final : public AttributeDescriber {
public:
    RemoteDescriber(Endpoint endpoint, std::string model_id);
    std::string describe(const Sticker& sticker, std::string_view image_bytes, Attribute attribute,
                         std::string_view prompt) const override;
    std::string id() const override { return "remote-describer/" + model_id_; }

private:
    Endpoint endpoint_;
    std::string model_id_;
};

}  // namespace stickersel
