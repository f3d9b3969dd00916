// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "ca/value.hpp"

struct sqlite3;
struct sqlite3_stmt;

namespace ca {

class Statement;

/// Read-only SQLite connection. Never issues writes; statements that would
/// modify the database are refused at prepare time.
class Database {
public:
    static Database open_read_only(const std::filesystem::path& path);

    Database(Database&&) noexcept = default;
    Database& operator=(Database&&) noexcept = default;
    ~Database();

    Statement prepare(std::string_view sql) const;

    /// Runs a query to completion and returns all rows.
    Rows query(std::string_view sql) const;

    /// Aborts any statement still running after `deadline`.
    void set_deadline(std::optional<std::chrono::steady_clock::time_point> deadline);
    bool deadline_expired() const;

    const std::filesystem::path& path() const noexcept { return path_; }
    sqlite3* handle() const noexcept { return db_.get(); }

private:
    struct Closer {
        void operator()(sqlite3* db) const;
    };
    struct DeadlineState {
        std::optional<std::chrono::steady_clock::time_point> deadline;
        bool expired = false;
    };

    Database(std::filesystem::path path, sqlite3* db);

    std::filesystem::path path_;
    std::unique_ptr<sqlite3, Closer> db_;
    std::unique_ptr<DeadlineState> deadline_;
};

class Statement {
public:
    Statement(Statement&&) noexcept = default;
    Statement& operator=(Statement&&) noexcept = default;

    /// Advances to the next row; false when done. Throws DatabaseError.
    bool step();
    int column_count() const;
    std::string column_name(int i) const;
    Value column(int i) const;
    Row row() const;

private:
    friend class Database;
    struct Finalizer {
        void operator()(sqlite3_stmt* stmt) const;
    };
    Statement(const Database& db, sqlite3_stmt* stmt) : db_(&db), stmt_(stmt) {}

    const Database* db_;
    std::unique_ptr<sqlite3_stmt, Finalizer> stmt_;
};

/// Double-quoted SQL identifier with embedded quotes doubled.
std::string quote_identifier(std::string_view name);

/// Single-quoted SQL string literal.
std::string quote_literal(std::string_view text);

} // namespace ca
