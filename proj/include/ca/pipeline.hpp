// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ca/bench.hpp"
#include "ca/profiler.hpp"
#include "ca/router.hpp"
#include "ca/schema_knowledge.hpp"

namespace ca {

class LlmGateway;

enum class RunMode { no_evidence, gold_evidence, ca };

std::string_view to_string(RunMode m);
/// Throws DataError for an unknown mode name.
RunMode parse_run_mode(std::string_view name);

/// SOURCE_DATE_EPOCH when set, otherwise the current UTC second.
Timestamp default_created_at();

struct RunConfig {
    std::filesystem::path bird_root;
    RunMode mode = RunMode::ca;
    MissingnessSpec missingness;
    std::filesystem::path out_dir;
    std::optional<std::filesystem::path> knowledge_dir;  // default: <out_dir>/knowledge
    std::optional<std::filesystem::path> fewshot_path;
    double tau = kDefaultRoutingThreshold;
    std::size_t k = 5;
    SamplingSpec sampling;
    std::chrono::milliseconds timeout = kDefaultQueryTimeout;
    std::size_t workers = 0;
    std::size_t repeat = 1;
    Timestamp created_at{};
};

struct RunOutput {
    std::vector<EvalResult> runs;
    std::vector<std::string> warnings;
    std::vector<std::string> rejected;

    double mean_ex() const;
    std::size_t failures() const;
};

/// Loads (or mines and caches) schema knowledge for `db_id`.
SchemaKnowledge knowledge_for(const std::string& db_id, const std::filesystem::path& db_path,
                              const std::filesystem::path& cache_dir, LlmGateway* gateway, const SamplingSpec& sampling,
                              Timestamp created_at, std::vector<std::string>& warnings);

/// Generates SQL for every example in the chosen mode, evaluates it and
/// writes predictions.json, bundles.jsonl (ca mode), result.json and
/// report.txt under out_dir. Per-example failures are recorded, never thrown.
RunOutput run_pipeline(const RunConfig& config, LlmGateway& gateway);

} // namespace ca
