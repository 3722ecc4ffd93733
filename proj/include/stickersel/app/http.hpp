#pragma once
// JSON-over-HTTP front end for RetrievalService.
//
//   POST /sessions                       {index_id?, checkpoint_id?}
//   GET  /sessions/{id}
//   POST /sessions/{id}/messages         {speaker_id, text}
//   GET  /sessions/{id}/suggestions?k=N
//   POST /sessions/{id}/sticker          {sticker_id, speaker_id?}
//   GET  /stickers/{id}
//   GET  /stickers/{id}/image
//   GET  /healthz

#include "stickersel/app/service.hpp"

#include <memory>
#include <string>

namespace stickersel::app {

class HttpServer {
public:
    explicit HttpServer(RetrievalService& service);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    // Binds to an ephemeral port when port is 0; returns the bound port.
    int bind(const std::string& host, int port);
    // Blocks until stop().
    void run();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace stickersel::app
