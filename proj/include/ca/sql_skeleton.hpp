// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace ca {

enum class SqlTokenKind { word, quoted_identifier, string, number, placeholder, symbol };

struct SqlToken {
    SqlTokenKind kind;
    std::string text;  // quoted identifiers/strings are unquoted here
};

/// Splits SQL into tokens, dropping whitespace and comments. Accepts the
/// skeleton placeholders <tab>/<col>/<str>/<num> as tokens of their own.
/// Throws SkeletonError on an unterminated quote.
std::vector<SqlToken> tokenize_sql(std::string_view sql);

/// Structural keywords kept verbatim (uppercased) in skeletons.
bool is_sql_keyword(std::string_view word);

/// Replaces literals and schema identifiers with typed placeholders:
/// identifiers in FROM/JOIN/UPDATE/INTO position become <tab>, all other
/// identifiers (including qualified t.c) <col>, strings <str>, numbers <num>.
/// Keywords and function names are uppercased; tokens are space-separated.
std::string skeletonize_sql(std::string_view sql);

/// Identifiers a query touches, lowercased, as seen by the same classifier.
struct SqlReferences {
    std::set<std::string> tables;
    std::set<std::string> columns;        // unqualified names and the last part of qualified ones
    std::set<std::string> table_aliases;
    std::set<std::string> column_aliases;
    std::set<std::string> ctes;
};

SqlReferences referenced_identifiers(std::string_view sql);

} // namespace ca
