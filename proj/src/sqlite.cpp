// SPDX-License-Identifier: Apache-2.0
#include "ca/sqlite.hpp"

#include <sqlite3.h>

#include "ca/error.hpp"

namespace ca {
void Database::Closer::operator()(sqlite3* db) const {
    sqlite3_close_v2(db);
}

void Statement::Finalizer::operator()(sqlite3_stmt* stmt) const {
    sqlite3_finalize(stmt);
}

Database::Database(std::filesystem::path path, sqlite3* db)
    : path_(std::move(path)), db_(db), deadline_(std::make_unique<DeadlineState>()) {}

Database::~Database() = default;

Database Database::open_read_only(const std::filesystem::path& path) {
    if (!std::filesystem::is_regular_file(path)) throw DatabaseError("database file not found: " + path.string());
    sqlite3* raw = nullptr;
    const int rc = sqlite3_open_v2(path.c_str(), &raw, SQLITE_OPEN_READONLY | SQLITE_OPEN_NOMUTEX, nullptr);
    if (rc != SQLITE_OK) {
        std::string msg = raw ? sqlite3_errmsg(raw) : sqlite3_errstr(rc);
        sqlite3_close_v2(raw);
        throw DatabaseError("cannot open " + path.string() + ": " + msg);
    }
    sqlite3_extended_result_codes(raw, 1);
    Database db(path, raw);
    // Touch the schema so corrupt or non-database files fail here.
    db.query("SELECT count(*) FROM sqlite_master");
    return db;
}

void Database::set_deadline(std::optional<std::chrono::steady_clock::time_point> deadline) {
    deadline_->deadline = deadline;
    deadline_->expired = false;
    if (!deadline) {
        sqlite3_progress_handler(db_.get(), 0, nullptr, nullptr);
        return;
    }
    sqlite3_progress_handler(
        db_.get(), 1000,
        [](void* p) -> int {
            auto* st = static_cast<DeadlineState*>(p);
            if (st->deadline && std::chrono::steady_clock::now() >= *st->deadline) {
                st->expired = true;
                return 1;
            }
            return 0;
        },
        deadline_.get());
}

bool Database::deadline_expired() const {
    return deadline_->expired;
}

Statement Database::prepare(std::string_view sql) const {
    sqlite3_stmt* stmt = nullptr;
    const char* tail = nullptr;
    const int rc = sqlite3_prepare_v2(db_.get(), sql.data(), static_cast<int>(sql.size()), &stmt, &tail);
    if (rc != SQLITE_OK) {
        sqlite3_finalize(stmt);
        throw DatabaseError(sqlite3_errmsg(db_.get()));
    }
    if (!stmt) throw DatabaseError("empty statement");
    Statement out(*this, stmt);
    if (!sqlite3_stmt_readonly(stmt)) throw DatabaseError("refusing to run a statement that writes");
    const std::string_view rest(tail, static_cast<std::size_t>(sql.data() + sql.size() - tail));
    if (rest.find_first_not_of(" \t\r\n;") != std::string_view::npos) {
        // Only comments may follow the first statement.
        sqlite3_stmt* extra = nullptr;
        sqlite3_prepare_v2(db_.get(), rest.data(), static_cast<int>(rest.size()), &extra, nullptr);
        const bool has_extra = extra != nullptr;
        sqlite3_finalize(extra);
        if (has_extra) throw DatabaseError("multiple statements are not allowed");
    }
    return out;
}

Rows Database::query(std::string_view sql) const {
    auto stmt = prepare(sql);
    Rows rows;
    while (stmt.step()) rows.push_back(stmt.row());
    return rows;
}

bool Statement::step() {
    const int rc = sqlite3_step(stmt_.get());
    if (rc == SQLITE_ROW) return true;
    if (rc == SQLITE_DONE) return false;
    sqlite3* db = sqlite3_db_handle(stmt_.get());
    if (rc == SQLITE_INTERRUPT && db_->deadline_expired()) throw DatabaseError("interrupted: deadline exceeded");
    throw DatabaseError(sqlite3_errmsg(db));
}

int Statement::column_count() const {
    return sqlite3_column_count(stmt_.get());
}

std::string Statement::column_name(int i) const {
    const char* n = sqlite3_column_name(stmt_.get(), i);
    return n ? n : "";
}

Value Statement::column(int i) const {
    auto* s = stmt_.get();
    switch (sqlite3_column_type(s, i)) {
    case SQLITE_INTEGER:
        return static_cast<std::int64_t>(sqlite3_column_int64(s, i));
    case SQLITE_FLOAT:
        return sqlite3_column_double(s, i);
    case SQLITE_TEXT: {
        const auto* p = reinterpret_cast<const char*>(sqlite3_column_text(s, i));
        return std::string(p, static_cast<std::size_t>(sqlite3_column_bytes(s, i)));
    }
    case SQLITE_BLOB: {
        const auto* p = static_cast<const std::uint8_t*>(sqlite3_column_blob(s, i));
        const auto n = static_cast<std::size_t>(sqlite3_column_bytes(s, i));
        return Blob{std::vector<std::uint8_t>(p, p + n)};
    }
    default:
        return std::monostate{};
    }
}

Row Statement::row() const {
    Row r;
    const int n = column_count();
    r.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) r.push_back(column(i));
    return r;
}

std::string quote_identifier(std::string_view name) {
    std::string out = "\"";
    for (char c : name) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string quote_literal(std::string_view text) {
    std::string out = "'";
    for (char c : text) {
        if (c == '\'') out += '\'';
        out += c;
    }
    return out + "'";
}

} // namespace ca
