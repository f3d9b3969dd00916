// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ca/schema_knowledge.hpp"

namespace ca {

class LlmGateway;

/// Normalized question + SQL logical skeleton.
struct FewShotEntry {
    std::int64_t id = 0;
    std::string db_id;
    std::string raw_question;
    std::string normalized_question;
    std::string raw_sql;
    std::string sql_skeleton;
    std::uint64_t question_fingerprint = 0;

    bool operator==(const FewShotEntry&) const = default;
};

struct SimilarityConfig {
    std::string metric = "tfidf-cosine";
    bool prefer_same_db = true;
    std::size_t default_k = 5;
};

struct FewShotLibrary {
    std::vector<FewShotEntry> entries;
    SimilarityConfig similarity_config;

    /// Ids strictly increasing, (fingerprint, skeleton) unique, fingerprints
    /// consistent with the normalized questions.
    void validate() const;
};

struct TrainingPair {
    std::string question;
    std::string sql;
    std::string db_id;
};

/// Reads BIRD-style training records (`question`, `SQL`, `db_id`).
std::vector<TrainingPair> load_training_pairs(const std::filesystem::path& path);

/// Offline normalization: lowercase, punctuation other than % becomes a
/// space, whitespace collapsed. Idempotent.
std::string normalize_question_fallback(std::string_view question);

struct NormalizedQuestion {
    std::string text;
    std::optional<std::string> warning;
};

/// Model rewrite when a gateway is given; falls back to the offline rule on
/// any gateway failure (with a warning) or when the gateway is null.
NormalizedQuestion normalize_question(LlmGateway* gateway, std::string_view question);

std::uint64_t question_fingerprint(std::string_view normalized_question);

struct Rejection {
    std::size_t index = 0;  // position in the input
    std::string reason;     // "schema-incompatible", "schema-unavailable", "untokenizable"
    std::string detail;
};

struct BuildOptions {
    bool check_schema = true;
    std::size_t workers = 0;
};

struct BuildResult {
    FewShotLibrary library;
    std::vector<Rejection> rejected;
    std::vector<std::string> warnings;
};

/// Normalizes and skeletonizes each pair, drops pairs whose SQL names a
/// table or column unknown to their database's knowledge, and deduplicates
/// on (fingerprint, skeleton) keeping the first. Ids follow input order.
BuildResult build_library(std::span<const TrainingPair> pairs,
                          const std::map<std::string, SchemaKnowledge>& knowledge, LlmGateway* gateway,
                          const BuildOptions& options = {});

/// Empty string when every identifier resolves, else a description of the
/// first unknown identifier.
std::string schema_incompatibility(std::string_view sql, const SchemaKnowledge& sk);

/// Scores every library entry against a query question.
class SimilarityMetric {
public:
    virtual ~SimilarityMetric() = default;
    virtual std::string id() const = 0;
    virtual std::vector<double> scores(std::string_view question) const = 0;
};

/// Cosine over TF-IDF vectors of normalized question tokens; idf is
/// ln((1+N)/(1+df)) + 1. Scores are rounded to 12 decimals so equal scores
/// tie exactly.
class TfIdfMetric : public SimilarityMetric {
public:
    explicit TfIdfMetric(const FewShotLibrary& library);
    std::string id() const override { return "tfidf-cosine"; }
    std::vector<double> scores(std::string_view question) const override;

private:
    std::map<std::string, double> idf_;
    std::vector<std::map<std::string, double>> docs_;
    std::vector<double> norms_;
};

struct ScoredEntry {
    FewShotEntry entry;
    double score = 0;
};

/// Library plus its similarity index, immutable once built.
class FewShotRetriever {
public:
    explicit FewShotRetriever(FewShotLibrary library);
    FewShotRetriever(FewShotLibrary library, std::unique_ptr<SimilarityMetric> metric);

    /// Top min(k, |lib|) by score desc then id asc. With a db_id and
    /// prefer_same_db, same-database entries rank first and the rest fill in.
    std::vector<ScoredEntry> retrieve(std::string_view question, std::size_t k,
                                      std::optional<std::string> db_id = std::nullopt) const;

    const FewShotLibrary& library() const noexcept { return library_; }

private:
    FewShotLibrary library_;
    std::unique_ptr<SimilarityMetric> metric_;
};

std::vector<ScoredEntry> retrieve_similar(const FewShotLibrary& library, std::string_view question, std::size_t k);

/// Fixed few-shot prompt block in retrieval order; "" for no entries.
std::string render_fewshot_block(std::span<const FewShotEntry> entries);

std::string serialize(const FewShotLibrary& library);
void save(const FewShotLibrary& library, const std::filesystem::path& path);
FewShotLibrary load_fewshot_library(const std::filesystem::path& path);

} // namespace ca
