// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ca/value.hpp"

namespace ca {

/// A column is an enumeration when its sample has at most this many distinct
/// non-null values and the top values cover kEnumerationCoverage of them.
inline constexpr std::size_t kEnumerationMaxDistinct = 20;
inline constexpr double kEnumerationCoverage = 0.95;
inline constexpr std::size_t kTopValuesCap = 10;
inline constexpr std::size_t kSampleRowsCap = 3;
inline constexpr double kInferredEdgeThreshold = 0.85;

struct NumericStats {
    double min = 0;
    double max = 0;
    double mean = 0;
    double variance = 0;
    double q25 = 0;
    double q50 = 0;
    double q75 = 0;

    bool operator==(const NumericStats&) const = default;
};

struct ValueCount {
    Value value;
    std::size_t count = 0;

    bool operator==(const ValueCount&) const = default;
};

/// Per-column statistical portrait computed from the sample.
struct ColumnProfile {
    std::size_t sample_size = 0;
    double null_fraction = 0;
    std::size_t distinct_count_in_sample = 0;
    std::optional<NumericStats> numeric_stats;
    std::vector<ValueCount> top_values;  // frequency desc, then value asc
    bool is_enumeration = false;
    std::vector<Value> sample_values;
    bool mixed_types = false;

    bool operator==(const ColumnProfile&) const = default;
};

struct ColumnSemantics {
    std::string description;
    std::vector<std::string> aliases;
    std::optional<std::string> unit_hint;
    std::optional<std::string> time_granularity_hint;
    std::map<std::string, std::string> enum_glossary;  // raw value text -> label

    bool empty() const {
        return description.empty() && aliases.empty() && !unit_hint && !time_granularity_hint &&
               enum_glossary.empty();
    }
    bool operator==(const ColumnSemantics&) const = default;
};

struct ColumnKnowledge {
    std::string name;
    std::string declared_type;
    ColumnProfile profile;
    ColumnSemantics semantics;

    bool operator==(const ColumnKnowledge&) const = default;
};

struct TableKnowledge {
    std::string name;
    std::string simplified_ddl;
    std::uint64_t row_count = 0;
    std::vector<ColumnKnowledge> columns;
    std::vector<Row> sample_rows;

    const ColumnKnowledge* find_column(std::string_view column) const;
    bool operator==(const TableKnowledge&) const = default;
};

struct ColumnRef {
    std::string table;
    std::string column;

    auto operator<=>(const ColumnRef&) const = default;
};

enum class EdgeSource { declared, inferred };

struct ForeignKeyEdge {
    ColumnRef from;
    ColumnRef to;
    EdgeSource source = EdgeSource::declared;
    std::optional<double> similarity;

    bool operator==(const ForeignKeyEdge&) const = default;
};

using Timestamp = std::chrono::sys_seconds;

/// Database-side knowledge cache: structure, profiles, semantics, join edges.
struct SchemaKnowledge {
    std::string db_id;
    std::vector<TableKnowledge> tables;
    std::vector<ForeignKeyEdge> fk_edges;
    std::string tool_version;
    Timestamp created_at{};

    const TableKnowledge* find_table(std::string_view table) const;
    const ColumnKnowledge* find_column(const ColumnRef& ref) const;
    bool operator==(const SchemaKnowledge&) const = default;
};

/// Throws InvariantError describing the first violated invariant.
void validate(const ColumnProfile& profile);
void validate(const SchemaKnowledge& sk);

/// True when `key` names one of the observed sample values (numeric keys
/// match numerically, so "52" matches 52 and 52.0).
bool glossary_key_observed(const std::string& key, const std::vector<Value>& samples);

std::string format_timestamp(Timestamp t);
Timestamp parse_timestamp(const std::string& text);

nlohmann::ordered_json to_json(const SchemaKnowledge& sk);
SchemaKnowledge schema_knowledge_from_json(const nlohmann::ordered_json& j);

/// Canonical bytes of the knowledge file (2-space indented JSON + newline).
std::string serialize(const SchemaKnowledge& sk);

void save(const SchemaKnowledge& sk, const std::filesystem::path& path);
SchemaKnowledge load_schema_knowledge(const std::filesystem::path& path);

/// `<db_id>.knowledge.json`
std::string knowledge_file_name(std::string_view db_id);

} // namespace ca
