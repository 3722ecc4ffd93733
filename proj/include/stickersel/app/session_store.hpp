#pragma once
// Session persistence.

#include "stickersel/dataset.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

struct sqlite3;

namespace stickersel::app {

struct SessionRecord {
    std::string id;
    std::string index_id;
    std::string checkpoint_id;
    Conversation conversation;  // live context; no gold annotation
    std::int64_t created_at = 0;  // unix milliseconds
    std::int64_t updated_at = 0;
};

class SessionStore {
public:
    virtual ~SessionStore() = default;
    virtual void insert(const SessionRecord& record) = 0;
    virtual void update(const SessionRecord& record) = 0;
    virtual std::optional<SessionRecord> find(const std::string& id) const = 0;
    virtual std::vector<std::string> ids() const = 0;
};

// Single-file SQLite store. An empty path keeps the database in memory.
class SqliteSessionStore final : public SessionStore {
public:
    explicit SqliteSessionStore(const std::filesystem::path& path = {});
    ~SqliteSessionStore() override;
    SqliteSessionStore(const SqliteSessionStore&) = delete;
    SqliteSessionStore& operator=(const SqliteSessionStore&) = delete;

    void insert(const SessionRecord& record) override;
    void update(const SessionRecord& record) override;
    std::optional<SessionRecord> find(const std::string& id) const override;
    std::vector<std::string> ids() const override;

private:
    void exec(const char* sql) const;
    sqlite3* db_ = nullptr;
    mutable std::mutex mu_;
};

}  // namespace stickersel::app
