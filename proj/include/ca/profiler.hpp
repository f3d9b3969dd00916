// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ca/schema_knowledge.hpp"
#include "ca/sqlite.hpp"

namespace ca {

class LlmGateway;

/// Per-column sampling. Values are taken distinct-first: every distinct value
/// once (frequency desc, value asc), then further occurrences of the most
/// frequent values until n are collected or the column is exhausted.
struct SamplingSpec {
    std::size_t n = 200;
    std::uint64_t seed = 0;
    /// Tables above this row count are counted over a seeded reservoir.
    std::uint64_t full_scan_row_limit = 1'000'000;
    std::size_t reservoir_size = 100'000;

    void validate() const;
};

struct ColumnStructure {
    std::string name;
    std::string declared_type;
    int primary_key_position = 0;  // 1-based position in the PK, 0 if not part of it
};

struct TableStructure {
    std::string name;
    std::string simplified_ddl;
    std::uint64_t row_count = 0;
    std::vector<ColumnStructure> columns;
    std::vector<Row> sample_rows;
};

struct DatabaseStructure {
    std::vector<TableStructure> tables;
    std::vector<ForeignKeyEdge> declared_edges;
    std::vector<std::string> warnings;
};

DatabaseStructure extract_structure(const Database& db, std::size_t sample_rows = kSampleRowsCap);

/// Orders a frequency table and applies the distinct-first rule.
std::vector<Value> distinct_first_sample(std::vector<ValueCount> frequencies, std::size_t n);

std::vector<Value> sample_column(const Database& db, std::string_view table, std::string_view column,
                                 const SamplingSpec& spec);

/// Statistics over a sample. NULLs only count toward null_fraction; numeric
/// stats cover every value readable as a number; quantiles use the lower
/// nearest-rank rule on the sorted numeric values.
ColumnProfile profile_column(std::span<const Value> samples);

struct ColumnContext {
    std::string table;
    std::string column;
    std::string declared_type;
    std::string table_ddl;
    const ColumnProfile* profile = nullptr;
};

struct SemanticsResult {
    ColumnSemantics semantics;
    std::optional<std::string> warning;
};

/// Asks the model for description, aliases, unit/time hints and an enum
/// glossary. Never throws on model trouble: returns empty semantics and a
/// warning instead. A null gateway yields empty semantics silently.
SemanticsResult induce_semantics(LlmGateway* gateway, const ColumnContext& context);

std::string semantics_system_prompt();
std::string semantics_user_prompt(const ColumnContext& context);

enum class TypeAffinity { integer, real, numeric, text, blob };

/// SQLite column affinity of a declared type name.
TypeAffinity type_affinity(std::string_view declared_type);
bool types_compatible(std::string_view a, std::string_view b);

/// Proposes join edges between similarly named, type-compatible columns of
/// different tables where one side looks like a key and no declared edge
/// exists. `profiles[t][c]` matches `structure.tables[t].columns[c]`.
std::vector<ForeignKeyEdge> infer_fk_edges(const DatabaseStructure& structure,
                                           const std::vector<std::vector<ColumnProfile>>& profiles);

struct MiningOptions {
    SamplingSpec sampling;
    std::string db_id;  // defaults to the file stem
    Timestamp created_at{};
    std::size_t workers = 0;
};

struct MiningResult {
    SchemaKnowledge knowledge;
    std::vector<std::string> warnings;
};

/// Offline half of evidence construction: extract, sample, profile, induce
/// semantics, infer join edges. Opens the database read-only.
MiningResult mine_schema_knowledge(const std::filesystem::path& db_path, LlmGateway* gateway,
                                   const MiningOptions& options = {});

} // namespace ca
