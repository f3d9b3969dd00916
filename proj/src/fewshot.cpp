// SPDX-License-Identifier: Apache-2.0
#include "ca/fewshot.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ca/error.hpp"
#include "ca/llm_gateway.hpp"
#include "ca/parallel.hpp"
#include "ca/sql_skeleton.hpp"
#include "ca/text.hpp"

namespace ca {

using json = nlohmann::ordered_json;

namespace {

constexpr const char* kNormalizeSystemPrompt =
    "You clean up questions asked against a database. Rewrite the question so it is self-contained and "
    "unambiguous: resolve references, fix typos, remove filler. Keep every constraint and value. "
    "Reply with the rewritten question only.";

double round12(double x) {
    return std::round(x * 1e12) / 1e12;
}

std::string read_file(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw MissingFileError(path);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw PersistenceError(path, "cannot open for reading");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::map<std::string, std::size_t> term_counts(std::string_view text) {
    std::map<std::string, std::size_t> tf;
    for (auto& t : word_tokens(text)) ++tf[std::move(t)];
    return tf;
}

} // namespace

void FewShotLibrary::validate() const {
    std::set<std::pair<std::uint64_t, std::string>> seen;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& e = entries[i];
        if (i > 0 && entries[i - 1].id >= e.id) throw InvariantError("few-shot entries not sorted by id");
        if (e.question_fingerprint != question_fingerprint(e.normalized_question))
            throw InvariantError("fingerprint mismatch for entry " + std::to_string(e.id));
        if (!seen.insert({e.question_fingerprint, e.sql_skeleton}).second)
            throw InvariantError("duplicate (fingerprint, skeleton) at entry " + std::to_string(e.id));
    }
}

std::vector<TrainingPair> load_training_pairs(const std::filesystem::path& path) {
    const auto text = read_file(path);
    std::vector<TrainingPair> out;
    try {
        const auto j = json::parse(text);
        if (!j.is_array()) throw FormatError(path, "expected a JSON array of records");
        for (std::size_t i = 0; i < j.size(); ++i) {
            const auto& r = j[i];
            if (!r.is_object() || !r.contains("question") || !r.contains("SQL") || !r.contains("db_id"))
                throw FormatError(path, "record " + std::to_string(i) + " lacks question/SQL/db_id");
            out.push_back({r["question"].get<std::string>(), r["SQL"].get<std::string>(), r["db_id"].get<std::string>()});
        }
    } catch (const json::exception& e) {
        throw FormatError(path, std::string("malformed training file: ") + e.what());
    }
    return out;
}

std::string normalize_question_fallback(std::string_view question) {
    std::string spaced;
    spaced.reserve(question.size());
    for (char ch : question) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::ispunct(c) && c != '%') {
            spaced += ' ';
        } else if (std::isspace(c)) {
            spaced += ' ';
        } else {
            spaced += static_cast<char>(std::tolower(c));
        }
    }
    std::string out;
    bool pending_space = false;
    for (char c : spaced) {
        if (c == ' ') {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out += ' ';
        pending_space = false;
        out += c;
    }
    return out;
}

NormalizedQuestion normalize_question(LlmGateway* gateway, std::string_view question) {
    if (!gateway) return {normalize_question_fallback(question), std::nullopt};
    try {
        auto text = trim(gateway->complete(kNormalizeSystemPrompt, std::string(question)));
        if (!text.empty()) return {std::move(text), std::nullopt};
        return {normalize_question_fallback(question), "empty normalization reply; used offline rule"};
    } catch (const Error& e) {
        return {normalize_question_fallback(question), std::string("normalization failed, used offline rule: ") + e.what()};
    }
}

std::uint64_t question_fingerprint(std::string_view normalized_question) {
    const auto tokens = word_tokens(normalized_question);
    return fnv1a64(join(tokens, " "));
}

std::string schema_incompatibility(std::string_view sql, const SchemaKnowledge& sk) {
    const auto refs = referenced_identifiers(sql);
    std::set<std::string> columns;
    for (const auto& t : sk.tables)
        for (const auto& c : t.columns) columns.insert(to_lower(c.name));
    for (const auto& t : refs.tables) {
        if (!sk.find_table(t) && !refs.ctes.count(t)) return "unknown table " + t;
    }
    for (const auto& c : refs.columns) {
        if (columns.count(c) || refs.column_aliases.count(c) || refs.table_aliases.count(c) || refs.ctes.count(c))
            continue;
        return "unknown column " + c;
    }
    return {};
}

BuildResult build_library(std::span<const TrainingPair> pairs, const std::map<std::string, SchemaKnowledge>& knowledge,
                          LlmGateway* gateway, const BuildOptions& options) {
    struct Slot {
        std::optional<FewShotEntry> entry;
        std::optional<Rejection> rejection;
        std::optional<std::string> warning;
    };
    std::vector<Slot> slots(pairs.size());
    parallel_for(pairs.size(), options.workers, [&](std::size_t i) {
        const auto& p = pairs[i];
        auto& slot = slots[i];
        std::string skeleton;
        try {
            skeleton = skeletonize_sql(p.sql);
        } catch (const SkeletonError& e) {
            slot.rejection = Rejection{i, "untokenizable", e.what()};
            return;
        }
        if (options.check_schema) {
            auto it = knowledge.find(p.db_id);
            if (it == knowledge.end()) {
                slot.rejection = Rejection{i, "schema-unavailable", "no knowledge for database " + p.db_id};
                return;
            }
            if (auto why = schema_incompatibility(p.sql, it->second); !why.empty()) {
                slot.rejection = Rejection{i, "schema-incompatible", why};
                return;
            }
        }
        auto normalized = normalize_question(gateway, p.question);
        slot.warning = std::move(normalized.warning);
        FewShotEntry e;
        e.db_id = p.db_id;
        e.raw_question = p.question;
        e.normalized_question = std::move(normalized.text);
        e.raw_sql = p.sql;
        e.sql_skeleton = std::move(skeleton);
        e.question_fingerprint = question_fingerprint(e.normalized_question);
        slot.entry = std::move(e);
    });

    BuildResult result;
    std::set<std::pair<std::uint64_t, std::string>> seen;
    std::int64_t next_id = 0;
    for (auto& s : slots) {
        if (s.warning) result.warnings.push_back(std::move(*s.warning));
        if (s.rejection) {
            result.rejected.push_back(std::move(*s.rejection));
            continue;
        }
        if (!seen.insert({s.entry->question_fingerprint, s.entry->sql_skeleton}).second) continue;
        s.entry->id = next_id++;
        result.library.entries.push_back(std::move(*s.entry));
    }
    return result;
}

TfIdfMetric::TfIdfMetric(const FewShotLibrary& library) {
    std::vector<std::map<std::string, std::size_t>> counts;
    std::map<std::string, std::size_t> df;
    for (const auto& e : library.entries) {
        counts.push_back(term_counts(e.normalized_question));
        for (const auto& [t, n] : counts.back()) ++df[t];
    }
    const double n_docs = static_cast<double>(library.entries.size());
    for (const auto& [t, d] : df) idf_[t] = std::log((1.0 + n_docs) / (1.0 + static_cast<double>(d))) + 1.0;
    for (const auto& c : counts) {
        std::map<std::string, double> vec;
        double sq = 0;
        for (const auto& [t, n] : c) {
            const double w = static_cast<double>(n) * idf_.at(t);
            vec[t] = w;
            sq += w * w;
        }
        docs_.push_back(std::move(vec));
        norms_.push_back(std::sqrt(sq));
    }
}

std::vector<double> TfIdfMetric::scores(std::string_view question) const {
    std::map<std::string, double> query;
    double sq = 0;
    for (const auto& [t, n] : term_counts(question)) {
        auto it = idf_.find(t);
        if (it == idf_.end()) continue;
        const double w = static_cast<double>(n) * it->second;
        query[t] = w;
        sq += w * w;
    }
    const double qnorm = std::sqrt(sq);
    std::vector<double> out(docs_.size(), 0.0);
    if (qnorm == 0) return out;
    for (std::size_t i = 0; i < docs_.size(); ++i) {
        if (norms_[i] == 0) continue;
        double dot = 0;
        for (const auto& [t, w] : query) {
            auto it = docs_[i].find(t);
            if (it != docs_[i].end()) dot += w * it->second;
        }
        out[i] = round12(dot / (qnorm * norms_[i]));
    }
    return out;
}

FewShotRetriever::FewShotRetriever(FewShotLibrary library)
    : library_(std::move(library)), metric_(std::make_unique<TfIdfMetric>(library_)) {}

FewShotRetriever::FewShotRetriever(FewShotLibrary library, std::unique_ptr<SimilarityMetric> metric)
    : library_(std::move(library)), metric_(std::move(metric)) {
    if (!metric_) metric_ = std::make_unique<TfIdfMetric>(library_);
}

std::vector<ScoredEntry> FewShotRetriever::retrieve(std::string_view question, std::size_t k,
                                                    std::optional<std::string> db_id) const {
    if (k == 0) throw InvariantError("k must be >= 1");
    const auto& entries = library_.entries;
    if (entries.empty()) return {};
    const auto scores = metric_->scores(normalize_question_fallback(question));
    std::vector<std::size_t> order(entries.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return entries[a].id < entries[b].id;
    });
    if (db_id && library_.similarity_config.prefer_same_db) {
        std::stable_partition(order.begin(), order.end(), [&](std::size_t i) { return entries[i].db_id == *db_id; });
    }
    std::vector<ScoredEntry> out;
    for (std::size_t i = 0; i < order.size() && out.size() < k; ++i) out.push_back({entries[order[i]], scores[order[i]]});
    return out;
}

std::vector<ScoredEntry> retrieve_similar(const FewShotLibrary& library, std::string_view question, std::size_t k) {
    return FewShotRetriever(library).retrieve(question, k);
}

std::string render_fewshot_block(std::span<const FewShotEntry> entries) {
    std::string out;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (i) out += "\n";
        out += "/* Example " + std::to_string(i + 1) + " */\n";
        out += "Question: " + entries[i].normalized_question + "\n";
        out += "SQL: " + trim(entries[i].raw_sql) + "\n";
    }
    return out;
}

std::string serialize(const FewShotLibrary& library) {
    std::string out;
    for (const auto& e : library.entries) {
        json j;
        j["id"] = e.id;
        j["db_id"] = e.db_id;
        j["raw_question"] = e.raw_question;
        j["normalized_question"] = e.normalized_question;
        j["raw_sql"] = e.raw_sql;
        j["sql_skeleton"] = e.sql_skeleton;
        j["question_fingerprint"] = hex64(e.question_fingerprint);
        out += j.dump() + "\n";
    }
    return out;
}

void save(const FewShotLibrary& library, const std::filesystem::path& path) {
    library.validate();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw PersistenceError(path, "cannot open for writing");
    out << serialize(library);
    if (!out) throw PersistenceError(path, "write failed");
}

FewShotLibrary load_fewshot_library(const std::filesystem::path& path) {
    const auto text = read_file(path);
    FewShotLibrary lib;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            const auto j = json::parse(line);
            FewShotEntry e;
            e.id = j.at("id").get<std::int64_t>();
            e.db_id = j.at("db_id").get<std::string>();
            e.raw_question = j.at("raw_question").get<std::string>();
            e.normalized_question = j.at("normalized_question").get<std::string>();
            e.raw_sql = j.at("raw_sql").get<std::string>();
            e.sql_skeleton = j.at("sql_skeleton").get<std::string>();
            const auto fp = j.at("question_fingerprint").get<std::string>();
            if (fp.size() != 16 || fp.find_first_not_of("0123456789abcdef") != std::string::npos)
                throw FormatError(path, "line " + std::to_string(lineno) + ": bad fingerprint");
            e.question_fingerprint = std::stoull(fp, nullptr, 16);
            lib.entries.push_back(std::move(e));
        } catch (const json::exception& ex) {
            throw FormatError(path, "line " + std::to_string(lineno) + ": " + ex.what());
        }
    }
    lib.validate();
    return lib;
}

} // namespace ca
