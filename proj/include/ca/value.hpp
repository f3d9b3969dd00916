// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

namespace ca {

struct Blob {
    std::vector<std::uint8_t> bytes;
    bool operator==(const Blob&) const = default;
};

/// One SQLite cell: NULL, INTEGER, REAL, TEXT or BLOB.
using Value = std::variant<std::monostate, std::int64_t, double, std::string, Blob>;
using Row = std::vector<Value>;
using Rows = std::vector<Row>;

inline bool is_null(const Value& v) { return std::holds_alternative<std::monostate>(v); }

/// SQLite ordering: NULL < numeric < TEXT < BLOB; numerics compare by value,
/// text and blobs bytewise. INTEGER 1 and REAL 1.0 are equivalent.
std::weak_ordering compare_values(const Value& a, const Value& b);

struct ValueLess {
    bool operator()(const Value& a, const Value& b) const {
        return compare_values(a, b) < 0;
    }
};

/// Numeric reading of a value: INTEGER and finite REAL directly, TEXT when the
/// whole string is a number. NULL, BLOB and non-numeric text yield nullopt.
std::optional<double> as_number(const Value& v);

/// Parses a complete decimal/exponent number; no surrounding whitespace.
std::optional<double> parse_number(std::string_view s);

/// Shortest round-trip rendering; integral reals keep a trailing ".0".
std::string format_real(double d);

/// Human/prompt rendering: integers as-is, integral reals without ".0".
std::string format_number(double d);

/// Display text of a value (NULL renders as "NULL", blobs as X'..').
std::string to_text(const Value& v);

/// Name of the storage class: null, integer, real, text, blob.
std::string_view storage_class(const Value& v);

nlohmann::ordered_json value_to_json(const Value& v);
Value value_from_json(const nlohmann::ordered_json& j);

} // namespace ca
