// SPDX-License-Identifier: Apache-2.0
#include "ca/bench.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "ca/error.hpp"
#include "ca/parallel.hpp"
#include "ca/sqlite.hpp"

namespace ca {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
    if (!fs::exists(path)) throw MissingFileError(path);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw PersistenceError(path, "cannot open for reading");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Canonical cell for set comparison. Reals holding an integer collapse to
// the integer so 1 and 1.0 meet; other reals stay reals.
using Cell = std::variant<std::monostate, std::int64_t, double, std::string, std::vector<std::uint8_t>>;

Cell canonical(const Value& v) {
    if (const auto* d = std::get_if<double>(&v)) {
        if (std::isfinite(*d) && std::floor(*d) == *d && std::fabs(*d) < 9.2e18) return static_cast<std::int64_t>(*d);
        return *d;
    }
    if (const auto* i = std::get_if<std::int64_t>(&v)) return *i;
    if (const auto* s = std::get_if<std::string>(&v)) return *s;
    if (const auto* b = std::get_if<Blob>(&v)) return b->bytes;
    return std::monostate{};
}

std::set<std::vector<Cell>> row_set(const Rows& rows) {
    std::set<std::vector<Cell>> out;
    for (const auto& r : rows) {
        std::vector<Cell> key;
        key.reserve(r.size());
        for (const auto& v : r) key.push_back(canonical(v));
        out.insert(std::move(key));
    }
    return out;
}

StratumCount& stratum(EvalResult& r, Difficulty d) {
    switch (d) {
    case Difficulty::simple: return r.simple;
    case Difficulty::moderate: return r.moderate;
    case Difficulty::challenging: return r.challenging;
    }
    return r.total;
}

json stratum_json(const StratumCount& c) {
    json j;
    j["correct"] = c.correct;
    j["total"] = c.total;
    j["ex"] = format_ex(c);
    return j;
}

StratumCount stratum_from_json(const json& j) {
    return {j.at("correct").get<std::size_t>(), j.at("total").get<std::size_t>()};
}

} // namespace

std::string_view to_string(Difficulty d) {
    switch (d) {
    case Difficulty::simple: return "simple";
    case Difficulty::moderate: return "moderate";
    case Difficulty::challenging: return "challenging";
    }
    return "?";
}

Difficulty parse_difficulty(std::string_view label) {
    if (label == "simple") return Difficulty::simple;
    if (label == "moderate") return Difficulty::moderate;
    if (label == "challenging") return Difficulty::challenging;
    throw DataError("unknown difficulty '" + std::string(label) + "'");
}

BirdDataset load_bird(const fs::path& root) {
    if (!fs::is_directory(root)) throw MissingFileError(root);
    fs::path question_file;
    for (const char* name : {"dev.json", "questions.json", "train.json"}) {
        if (fs::exists(root / name)) {
            question_file = root / name;
            break;
        }
    }
    if (question_file.empty()) throw MissingFileError(root / "dev.json");

    BirdDataset ds;
    std::vector<fs::path> db_dirs;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (!entry.is_directory()) continue;
        const auto name = entry.path().filename().string();
        if (name.size() > 10 && name.ends_with("_databases")) db_dirs.push_back(entry.path());
    }
    std::sort(db_dirs.begin(), db_dirs.end());
    for (const auto& dir : db_dirs) {
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (!entry.is_directory()) continue;
            const auto db_id = entry.path().filename().string();
            const auto file = entry.path() / (db_id + ".sqlite");
            if (fs::exists(file) && !ds.databases.count(db_id)) ds.databases[db_id] = file;
        }
    }

    json records;
    try {
        records = json::parse(read_file(question_file));
    } catch (const json::exception& e) {
        throw FormatError(question_file, std::string("malformed question file: ") + e.what());
    }
    if (!records.is_array()) throw FormatError(question_file, "expected a JSON array of question records");

    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        auto field = [&](const char* key) -> const json& {
            if (!r.is_object() || !r.contains(key))
                throw FormatError(question_file, "record " + std::to_string(i) + " lacks '" + key + "'");
            return r.at(key);
        };
        BenchExample ex;
        try {
            ex.question_id = r.is_object() && r.contains("question_id") ? r["question_id"].get<std::int64_t>()
                                                                         : static_cast<std::int64_t>(i);
            ex.db_id = field("db_id").get<std::string>();
            ex.question = field("question").get<std::string>();
            ex.gold_sql = field("SQL").get<std::string>();
            ex.difficulty = parse_difficulty(field("difficulty").get<std::string>());
            if (r.contains("evidence") && r["evidence"].is_string() && !r["evidence"].get<std::string>().empty())
                ex.gold_evidence = r["evidence"].get<std::string>();
        } catch (const json::exception& e) {
            throw FormatError(question_file, "record " + std::to_string(i) + ": " + e.what());
        } catch (const DataError& e) {
            throw FormatError(question_file, "record " + std::to_string(i) + ": " + e.what());
        }
        if (!ds.databases.count(ex.db_id)) {
            ds.rejected.push_back("record " + std::to_string(i) + " (question_id " + std::to_string(ex.question_id) +
                                  "): unknown db_id " + ex.db_id);
            continue;
        }
        ds.examples.push_back(std::move(ex));
    }
    std::set<std::int64_t> ids;
    for (const auto& ex : ds.examples)
        if (!ids.insert(ex.question_id).second)
            throw FormatError(question_file, "duplicate question_id " + std::to_string(ex.question_id));
    return ds;
}

void MissingnessSpec::validate() const {
    if (!(level >= 0.0 && level <= 1.0)) throw InvariantError("missingness level must lie in [0, 1]");
}

std::vector<std::size_t> missingness_order(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    // Explicit Fisher-Yates: std::shuffle's draw pattern is library-specific.
    std::mt19937_64 rng(seed);
    for (std::size_t i = n; i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng() % i);
        std::swap(order[i - 1], order[j]);
    }
    return order;
}

std::vector<bool> missingness_mask(std::size_t n, const MissingnessSpec& spec) {
    spec.validate();
    const auto order = missingness_order(n, spec.seed);
    const auto masked = static_cast<std::size_t>(std::floor(spec.level * static_cast<double>(n) + 1e-9));
    std::vector<bool> mask(n, false);
    for (std::size_t i = 0; i < std::min(masked, n); ++i) mask[order[i]] = true;
    return mask;
}

std::vector<BenchExample> apply_missingness(std::vector<BenchExample> examples, const MissingnessSpec& spec) {
    const auto mask = missingness_mask(examples.size(), spec);
    for (std::size_t i = 0; i < examples.size(); ++i)
        if (mask[i]) examples[i].gold_evidence.reset();
    return examples;
}

ExecOutcome execute_sql(Database& db, const std::string& sql, std::chrono::milliseconds timeout) {
    ExecOutcome out;
    db.set_deadline(std::chrono::steady_clock::now() + timeout);
    try {
        out.rows = db.query(sql);
    } catch (const Error& e) {
        out.rows.clear();
        out.status = db.deadline_expired() ? ExecStatus::timeout : ExecStatus::error;
        out.message = out.status == ExecStatus::timeout ? "timed out after " + std::to_string(timeout.count()) + " ms"
                                                        : e.what();
    }
    db.set_deadline(std::nullopt);
    return out;
}

ExecOutcome execute_sql(const fs::path& db_path, const std::string& sql, std::chrono::milliseconds timeout) {
    try {
        auto db = Database::open_read_only(db_path);
        return execute_sql(db, sql, timeout);
    } catch (const Error& e) {
        return ExecOutcome{ExecStatus::error, {}, e.what()};
    }
}

bool results_equal(const Rows& a, const Rows& b) {
    return row_set(a) == row_set(b);
}

std::size_t EvalResult::failures() const {
    return static_cast<std::size_t>(
        std::count_if(per_example.begin(), per_example.end(), [](const ExampleOutcome& o) { return o.failure.has_value(); }));
}

std::string format_ex(const StratumCount& c) {
    if (c.total == 0) return "-";
    // Half-up rounding of 10000 * correct / total in integer arithmetic.
    const std::uint64_t t = c.total;
    const std::uint64_t hundredths = (20000ULL * c.correct + t) / (2 * t);
    std::string frac = std::to_string(hundredths % 100);
    if (frac.size() < 2) frac.insert(0, "0");
    return std::to_string(hundredths / 100) + "." + frac;
}

EvalResult evaluate(const Predictions& predictions, const std::vector<BenchExample>& examples,
                    const std::map<std::string, fs::path>& databases, const EvalOptions& options) {
    std::set<std::int64_t> known;
    for (const auto& ex : examples) known.insert(ex.question_id);
    for (const auto& [qid, sql] : predictions)
        if (!known.count(qid)) throw DataError("prediction for unknown question_id " + std::to_string(qid));

    std::vector<const BenchExample*> order;
    for (const auto& ex : examples) order.push_back(&ex);
    std::sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->question_id < b->question_id; });

    const std::size_t n = order.size();
    std::vector<ExampleOutcome> outcomes(n);
    const std::size_t workers = std::clamp<std::size_t>(options.workers ? options.workers : default_workers(), 1,
                                                        std::max<std::size_t>(n, 1));
    // Static partition so each worker keeps its own read-only connections.
    parallel_for(workers, workers, [&](std::size_t w) {
        std::map<std::string, Database> connections;
        for (std::size_t i = w; i < n; i += workers) {
            const auto& ex = *order[i];
            auto& o = outcomes[i];
            o.question_id = ex.question_id;
            o.difficulty = ex.difficulty;
            auto pred = predictions.find(ex.question_id);
            if (pred == predictions.end()) {
                o.failure = "no prediction";
                continue;
            }
            if (!pred->second) {
                o.failure = "generation failed";
                continue;
            }
            auto db_it = databases.find(ex.db_id);
            if (db_it == databases.end()) {
                o.failure = "unknown database " + ex.db_id;
                continue;
            }
            auto conn = connections.find(ex.db_id);
            if (conn == connections.end()) {
                try {
                    conn = connections.emplace(ex.db_id, Database::open_read_only(db_it->second)).first;
                } catch (const Error& e) {
                    o.failure = std::string("cannot open database: ") + e.what();
                    continue;
                }
            }
            const auto gold = execute_sql(conn->second, ex.gold_sql, options.timeout);
            if (gold.status != ExecStatus::ok) {
                o.failure = "gold SQL failed: " + gold.message;
                continue;
            }
            const auto got = execute_sql(conn->second, *pred->second, options.timeout);
            if (got.status == ExecStatus::timeout) {
                o.failure = "timeout";
                continue;
            }
            if (got.status == ExecStatus::error) {
                o.failure = "execution error: " + got.message;
                continue;
            }
            o.correct = results_equal(gold.rows, got.rows);
        }
    });

    EvalResult result;
    for (auto& o : outcomes) {
        auto& s = stratum(result, o.difficulty);
        ++s.total;
        ++result.total.total;
        if (o.correct) {
            ++s.correct;
            ++result.total.correct;
        }
        result.per_example.push_back(std::move(o));
    }
    return result;
}

json to_json(const EvalResult& result) {
    json j;
    j["simple"] = stratum_json(result.simple);
    j["moderate"] = stratum_json(result.moderate);
    j["challenging"] = stratum_json(result.challenging);
    j["total"] = stratum_json(result.total);
    j["per_example"] = json::array();
    for (const auto& o : result.per_example) {
        json e;
        e["question_id"] = o.question_id;
        e["difficulty"] = to_string(o.difficulty);
        e["correct"] = o.correct;
        e["failure"] = o.failure ? json(*o.failure) : json(nullptr);
        j["per_example"].push_back(std::move(e));
    }
    return j;
}

EvalResult eval_result_from_json(const json& j) {
    EvalResult r;
    r.simple = stratum_from_json(j.at("simple"));
    r.moderate = stratum_from_json(j.at("moderate"));
    r.challenging = stratum_from_json(j.at("challenging"));
    r.total = stratum_from_json(j.at("total"));
    for (const auto& e : j.at("per_example")) {
        ExampleOutcome o;
        o.question_id = e.at("question_id").get<std::int64_t>();
        o.difficulty = parse_difficulty(e.at("difficulty").get<std::string>());
        o.correct = e.at("correct").get<bool>();
        if (!e.at("failure").is_null()) o.failure = e.at("failure").get<std::string>();
        r.per_example.push_back(std::move(o));
    }
    if (r.simple.correct + r.moderate.correct + r.challenging.correct != r.total.correct ||
        r.simple.total + r.moderate.total + r.challenging.total != r.total.total)
        throw InvariantError("stratum counts do not sum to the total");
    return r;
}

std::string render_report(const EvalResult& result, ReportFormat format) {
    const StratumCount* cols[] = {&result.simple, &result.moderate, &result.challenging, &result.total};
    if (format == ReportFormat::csv) {
        std::string out = "metric,simple,moderate,challenging,total\nex";
        for (auto* c : cols) out += "," + format_ex(*c);
        out += "\ncorrect";
        for (auto* c : cols) out += "," + std::to_string(c->correct);
        out += "\ncount";
        for (auto* c : cols) out += "," + std::to_string(c->total);
        return out + "\n";
    }
    static const char* headers[] = {"Simple", "Moderate", "Challenging", "Total"};
    std::string rows[3];
    for (int k = 0; k < 4; ++k) {
        const std::string ex = format_ex(*cols[k]);
        const std::string count = std::to_string(cols[k]->correct) + "/" + std::to_string(cols[k]->total);
        const std::size_t width = std::max({std::string_view(headers[k]).size(), ex.size(), count.size()});
        auto pad = [&](const std::string& s) { return std::string(width - s.size(), ' ') + s; };
        const std::string sep = k ? " | " : "";
        rows[0] += sep + pad(headers[k]);
        rows[1] += sep + pad(ex);
        rows[2] += sep + pad(count);
    }
    return rows[0] + "\n" + rows[1] + "\n" + rows[2] + "\n";
}

json predictions_to_json(const Predictions& predictions) {
    json j = json::object();
    for (const auto& [qid, sql] : predictions) j[std::to_string(qid)] = sql ? json(*sql) : json(nullptr);
    return j;
}

Predictions load_predictions(const fs::path& path) {
    Predictions out;
    try {
        const auto j = json::parse(read_file(path));
        if (!j.is_object()) throw FormatError(path, "expected an object mapping question_id to SQL");
        for (const auto& [key, val] : j.items()) {
            std::size_t used = 0;
            const auto qid = std::stoll(key, &used);
            if (used != key.size()) throw FormatError(path, "bad question_id '" + key + "'");
            out[qid] = val.is_null() ? std::nullopt : std::optional<std::string>(val.get<std::string>());
        }
    } catch (const json::exception& e) {
        throw FormatError(path, e.what());
    } catch (const std::invalid_argument&) {
        throw FormatError(path, "non-numeric question_id");
    } catch (const std::out_of_range&) {
        throw FormatError(path, "question_id out of range");
    }
    return out;
}

} // namespace ca
