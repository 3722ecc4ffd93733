#include "stickersel/app/session_store.hpp"

#include "stickersel/error.hpp"

#include <sqlite3.h>

namespace stickersel::app {

namespace {

class Statement {
public:
    Statement(sqlite3* db, const char* sql) : db_(db) {
        if (sqlite3_prepare_v2(db, sql, -1, &stmt_, nullptr) != SQLITE_OK) {
            throw LoadError(std::string("session store: ") + sqlite3_errmsg(db));
        }
    }
    ~Statement() { sqlite3_finalize(stmt_); }
    Statement(const Statement&) = delete;
    Statement& operator=(const Statement&) = delete;

    Statement& bind(int i, const std::string& v) {
        sqlite3_bind_text(stmt_, i, v.c_str(), static_cast<int>(v.size()), SQLITE_TRANSIENT);
        return *this;
    }
    Statement& bind(int i, std::int64_t v) {
        sqlite3_bind_int64(stmt_, i, v);
        return *this;
    }
    bool step() {
        const int rc = sqlite3_step(stmt_);
        if (rc == SQLITE_ROW) return true;
        if (rc == SQLITE_DONE) return false;
        throw LoadError(std::string("session store: ") + sqlite3_errmsg(db_));
    }
    std::string text(int col) const {
        const auto* p = reinterpret_cast<const char*>(sqlite3_column_text(stmt_, col));
        return p ? std::string(p, static_cast<std::size_t>(sqlite3_column_bytes(stmt_, col))) : std::string{};
    }
    std::int64_t integer(int col) const { return sqlite3_column_int64(stmt_, col); }

private:
    sqlite3* db_;
    sqlite3_stmt* stmt_ = nullptr;
};

}  // namespace

SqliteSessionStore::SqliteSessionStore(const std::filesystem::path& path) {
    const auto target = path.empty() ? std::string(":memory:") : path.string();
    if (sqlite3_open_v2(target.c_str(), &db_, SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX,
                        nullptr) != SQLITE_OK) {
        const std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
        sqlite3_close(db_);
        throw LoadError("cannot open session store " + target + ": " + msg);
    }
    exec("CREATE TABLE IF NOT EXISTS sessions ("
         " id TEXT PRIMARY KEY, index_id TEXT NOT NULL, checkpoint_id TEXT NOT NULL,"
         " conversation TEXT NOT NULL, created_at INTEGER NOT NULL, updated_at INTEGER NOT NULL)");
}

SqliteSessionStore::~SqliteSessionStore() { sqlite3_close(db_); }

void SqliteSessionStore::exec(const char* sql) const {
    char* err = nullptr;
    if (sqlite3_exec(db_, sql, nullptr, nullptr, &err) != SQLITE_OK) {
        std::string msg = err ? err : "unknown error";
        sqlite3_free(err);
        throw LoadError("session store: " + msg);
    }
}

void SqliteSessionStore::insert(const SessionRecord& r) {
    std::lock_guard lock(mu_);
    Statement st(db_, "INSERT INTO sessions VALUES (?, ?, ?, ?, ?, ?)");
    st.bind(1, r.id).bind(2, r.index_id).bind(3, r.checkpoint_id).bind(4, conversation_to_json(r.conversation));
    st.bind(5, r.created_at).bind(6, r.updated_at).step();
}

void SqliteSessionStore::update(const SessionRecord& r) {
    std::lock_guard lock(mu_);
    Statement st(db_, "UPDATE sessions SET conversation = ?, updated_at = ? WHERE id = ?");
    st.bind(1, conversation_to_json(r.conversation)).bind(2, r.updated_at).bind(3, r.id).step();
    if (sqlite3_changes(db_) == 0) throw NotFoundError("unknown session '" + r.id + "'");
}

std::optional<SessionRecord> SqliteSessionStore::find(const std::string& id) const {
    std::lock_guard lock(mu_);
    Statement st(db_, "SELECT id, index_id, checkpoint_id, conversation, created_at, updated_at"
                      " FROM sessions WHERE id = ?");
    st.bind(1, id);
    if (!st.step()) return std::nullopt;
    SessionRecord r;
    r.id = st.text(0);
    r.index_id = st.text(1);
    r.checkpoint_id = st.text(2);
    r.conversation = conversation_from_json(st.text(3));
    r.created_at = st.integer(4);
    r.updated_at = st.integer(5);
    return r;
}

std::vector<std::string> SqliteSessionStore::ids() const {
    std::lock_guard lock(mu_);
    Statement st(db_, "SELECT id FROM sessions ORDER BY created_at, id");
    std::vector<std::string> out;
    while (st.step()) out.push_back(st.text(0));
    return out;
}

}  // namespace stickersel::app
