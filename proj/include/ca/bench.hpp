// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ca/value.hpp"

namespace ca {

enum class Difficulty { simple, moderate, challenging };

std::string_view to_string(Difficulty d);
/// Throws DataError for anything but the three dataset labels.
Difficulty parse_difficulty(std::string_view label);

struct BenchExample {
    std::int64_t question_id = 0;
    std::string db_id;
    std::string question;
    std::optional<std::string> gold_evidence;
    std::string gold_sql;
    Difficulty difficulty = Difficulty::simple;
};

struct BirdDataset {
    std::vector<BenchExample> examples;
    std::map<std::string, std::filesystem::path> databases;
    std::vector<std::string> rejected;  // one line per record with an unknown db_id
};

/// Reads dev.json (or questions.json / train.json) and the
/// <name>_databases/<db>/<db>.sqlite tree under `root`. Throws
/// MissingFileError without a question file and FormatError for malformed
/// records, naming the record index.
BirdDataset load_bird(const std::filesystem::path& root);

struct MissingnessSpec {
    double level = 1.0;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Seeded permutation of [0, n); the first floor(level * n) positions are
/// the masked examples at that level.
std::vector<std::size_t> missingness_order(std::size_t n, std::uint64_t seed);
std::vector<bool> missingness_mask(std::size_t n, const MissingnessSpec& spec);
std::vector<BenchExample> apply_missingness(std::vector<BenchExample> examples, const MissingnessSpec& spec);

inline constexpr std::chrono::milliseconds kDefaultQueryTimeout = std::chrono::seconds(30);

enum class ExecStatus { ok, error, timeout };

struct ExecOutcome {
    ExecStatus status = ExecStatus::ok;
    Rows rows;
    std::string message;
};

class Database;

ExecOutcome execute_sql(const std::filesystem::path& db_path, const std::string& sql,
                        std::chrono::milliseconds timeout = kDefaultQueryTimeout);
ExecOutcome execute_sql(Database& db, const std::string& sql, std::chrono::milliseconds timeout = kDefaultQueryTimeout);

/// Set-of-rows equality: row order and duplicates are ignored, column order
/// is not. Integers equal reals of the same value; text and blobs compare
/// byte-exact; NULL equals NULL.
bool results_equal(const Rows& a, const Rows& b);

/// question_id -> predicted SQL; nullopt records a generation failure.
using Predictions = std::map<std::int64_t, std::optional<std::string>>;

struct ExampleOutcome {
    std::int64_t question_id = 0;
    Difficulty difficulty = Difficulty::simple;
    bool correct = false;
    std::optional<std::string> failure;

    bool operator==(const ExampleOutcome&) const = default;
};

struct StratumCount {
    std::size_t correct = 0;
    std::size_t total = 0;

    double ex() const { return total ? 100.0 * static_cast<double>(correct) / static_cast<double>(total) : 0.0; }
    bool operator==(const StratumCount&) const = default;
};

struct EvalResult {
    std::vector<ExampleOutcome> per_example;  // ascending question_id
    StratumCount simple;
    StratumCount moderate;
    StratumCount challenging;
    StratumCount total;

    std::size_t failures() const;
    bool operator==(const EvalResult&) const = default;
};

/// EX percentage rounded half-up to two decimals, e.g. "66.67"; "-" for an
/// empty stratum.
std::string format_ex(const StratumCount& c);

struct EvalOptions {
    std::chrono::milliseconds timeout = kDefaultQueryTimeout;
    std::size_t workers = 0;
};

/// Scores predictions against gold execution results. Examples without a
/// prediction count as incorrect. Throws DataError for a prediction whose
/// question_id is not among the examples.
EvalResult evaluate(const Predictions& predictions, const std::vector<BenchExample>& examples,
                    const std::map<std::string, std::filesystem::path>& databases, const EvalOptions& options = {});

nlohmann::ordered_json to_json(const EvalResult& result);
EvalResult eval_result_from_json(const nlohmann::ordered_json& j);

enum class ReportFormat { table, csv };
std::string render_report(const EvalResult& result, ReportFormat format = ReportFormat::table);

nlohmann::ordered_json predictions_to_json(const Predictions& predictions);
Predictions load_predictions(const std::filesystem::path& path);

} // namespace ca
