// SPDX-License-Identifier: Apache-2.0
#include "ca/profiler.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "ca/error.hpp"
#include "ca/llm_gateway.hpp"
#include "ca/parallel.hpp"
#include "ca/similarity.hpp"
#include "ca/text.hpp"
#include "ca/version.hpp"

namespace ca {
namespace {

const std::set<std::string>& reserved_words() {
    static const std::set<std::string> words = {
        "all",     "and",     "as",      "asc",    "between", "by",      "case",    "check",   "create",
        "cross",   "default", "delete",  "desc",   "distinct","else",    "end",     "exists",  "foreign",
        "from",    "full",    "group",   "having", "in",      "index",   "inner",   "insert",  "into",
        "is",      "join",    "key",     "left",   "like",    "limit",   "natural", "not",     "null",
        "offset",  "on",      "or",      "order",  "outer",   "primary", "references", "right", "select",
        "set",     "table",   "then",    "to",     "transaction", "union", "unique", "update", "using",
        "values",  "when",    "where",   "with"};
    return words;
}

bool plain_identifier(std::string_view name) {
    if (name.empty()) return false;
    if (!(std::isalpha(static_cast<unsigned char>(name[0])) || name[0] == '_')) return false;
    for (char c : name)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
    return !reserved_words().count(to_lower(name));
}

std::string ddl_identifier(std::string_view name) {
    return plain_identifier(name) ? std::string(name) : quote_identifier(name);
}

std::string text_or_empty(const Value& v) {
    if (const auto* s = std::get_if<std::string>(&v)) return *s;
    if (is_null(v)) return {};
    return to_text(v);
}

struct ForeignKeyRow {
    std::string from_column;
    std::string to_table;
    std::optional<std::string> to_column;
};

const TableStructure* find_structure(const DatabaseStructure& s, std::string_view name) {
    for (const auto& t : s.tables)
        if (to_lower(t.name) == to_lower(name)) return &t;
    return nullptr;
}

const ColumnStructure* find_structure_column(const TableStructure& t, std::string_view name) {
    for (const auto& c : t.columns)
        if (to_lower(c.name) == to_lower(name)) return &c;
    return nullptr;
}

std::string render_ddl(const TableStructure& table, const std::vector<std::pair<int, std::vector<ForeignKeyRow>>>& fks,
                       const DatabaseStructure& all) {
    std::vector<std::string> lines;
    std::vector<std::string> pk;
    for (const auto& c : table.columns)
        if (c.primary_key_position > 0) pk.push_back(c.name);
    std::vector<const ColumnStructure*> pk_cols;
    for (const auto& c : table.columns) {
        std::string line = "  " + ddl_identifier(c.name);
        if (!c.declared_type.empty()) line += " " + c.declared_type;
        if (pk.size() == 1 && c.primary_key_position > 0) line += " PRIMARY KEY";
        lines.push_back(std::move(line));
        if (c.primary_key_position > 0) pk_cols.push_back(&c);
    }
    if (pk.size() > 1) {
        std::sort(pk_cols.begin(), pk_cols.end(),
                  [](auto* a, auto* b) { return a->primary_key_position < b->primary_key_position; });
        std::vector<std::string> names;
        for (auto* c : pk_cols) names.push_back(ddl_identifier(c->name));
        lines.push_back("  PRIMARY KEY (" + join(names, ", ") + ")");
    }
    for (const auto& [id, rows] : fks) {
        std::vector<std::string> from, to;
        const auto* parent = find_structure(all, rows.front().to_table);
        std::string parent_name = parent ? parent->name : rows.front().to_table;
        for (const auto& r : rows) {
            from.push_back(ddl_identifier(r.from_column));
            if (r.to_column) to.push_back(ddl_identifier(*r.to_column));
        }
        std::string line = "  FOREIGN KEY (" + join(from, ", ") + ") REFERENCES " + ddl_identifier(parent_name);
        if (!to.empty()) line += " (" + join(to, ", ") + ")";
        lines.push_back(std::move(line));
    }
    std::string out = "CREATE TABLE " + ddl_identifier(table.name) + " (\n";
    for (std::size_t i = 0; i < lines.size(); ++i) {
        out += lines[i];
        out += i + 1 < lines.size() ? ",\n" : "\n";
    }
    return out + ");";
}

std::uint64_t count_rows(const Database& db, std::string_view table) {
    auto rows = db.query("SELECT count(*) FROM " + quote_identifier(table));
    return static_cast<std::uint64_t>(std::get<std::int64_t>(rows.at(0).at(0)));
}

bool by_frequency(const ValueCount& a, const ValueCount& b) {
    if (a.count != b.count) return a.count > b.count;
    return compare_values(a.value, b.value) < 0;
}

std::vector<ColumnStructure> table_columns(const Database& db, std::string_view table) {
    std::vector<ColumnStructure> cols;
    auto stmt = db.prepare("PRAGMA table_info(" + quote_identifier(table) + ")");
    while (stmt.step()) {
        ColumnStructure c;
        c.name = text_or_empty(stmt.column(1));
        c.declared_type = text_or_empty(stmt.column(2));
        const auto pk = stmt.column(5);
        c.primary_key_position = std::holds_alternative<std::int64_t>(pk) ? static_cast<int>(std::get<std::int64_t>(pk)) : 0;
        cols.push_back(std::move(c));
    }
    return cols;
}

std::string describe_profile(const ColumnProfile& p) {
    std::ostringstream out;
    out << "sample_size=" << p.sample_size << ", null_fraction=" << format_number(p.null_fraction)
        << ", distinct_in_sample=" << p.distinct_count_in_sample
        << ", enumeration=" << (p.is_enumeration ? "yes" : "no");
    if (p.numeric_stats) {
        const auto& s = *p.numeric_stats;
        out << ", min=" << format_number(s.min) << ", max=" << format_number(s.max)
            << ", mean=" << format_number(s.mean) << ", q25=" << format_number(s.q25)
            << ", median=" << format_number(s.q50) << ", q75=" << format_number(s.q75);
    }
    return out.str();
}

std::optional<std::string> optional_text(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    if (j[key].is_string()) {
        auto s = trim(j[key].get<std::string>());
        if (s.empty()) return std::nullopt;
        return s;
    }
    return std::nullopt;
}

std::string json_scalar_text(const nlohmann::json& j) {
    if (j.is_string()) return j.get<std::string>();
    if (j.is_number_integer()) return std::to_string(j.get<std::int64_t>());
    if (j.is_number()) return format_number(j.get<double>());
    if (j.is_boolean()) return j.get<bool>() ? "true" : "false";
    return {};
}

} // namespace

void SamplingSpec::validate() const {
    if (n < 1) throw InvariantError("sample size n must be >= 1");
    if (reservoir_size < 1) throw InvariantError("reservoir size must be >= 1");
}

DatabaseStructure extract_structure(const Database& db, std::size_t sample_rows) {
    DatabaseStructure out;
    std::vector<std::string> names;
    {
        auto stmt = db.prepare(
            "SELECT name, sql FROM sqlite_master WHERE type = 'table' AND name NOT LIKE 'sqlite\\_%' ESCAPE '\\'");
        while (stmt.step()) {
            const auto name = text_or_empty(stmt.column(0));
            const auto sql = to_upper(text_or_empty(stmt.column(1)));
            if (sql.rfind("CREATE VIRTUAL", 0) == 0) {
                out.warnings.push_back("skipped virtual table " + name);
                continue;
            }
            names.push_back(name);
        }
    }
    for (const auto& name : names) {
        TableStructure t;
        t.name = name;
        t.columns = table_columns(db, name);
        t.row_count = count_rows(db, name);
        if (sample_rows > 0 && !t.columns.empty()) {
            std::vector<std::string> cols;
            for (const auto& c : t.columns) cols.push_back(quote_identifier(c.name));
            t.sample_rows = db.query("SELECT " + join(cols, ", ") + " FROM " + quote_identifier(name) + " LIMIT " +
                                     std::to_string(sample_rows));
        }
        out.tables.push_back(std::move(t));
    }
    for (auto& t : out.tables) {
        std::map<int, std::vector<ForeignKeyRow>> groups;
        auto stmt = db.prepare("PRAGMA foreign_key_list(" + quote_identifier(t.name) + ")");
        while (stmt.step()) {
            const int id = static_cast<int>(std::get<std::int64_t>(stmt.column(0)));
            ForeignKeyRow r;
            r.to_table = text_or_empty(stmt.column(2));
            r.from_column = text_or_empty(stmt.column(3));
            if (!is_null(stmt.column(4))) r.to_column = text_or_empty(stmt.column(4));
            groups[id].push_back(std::move(r));
        }
        std::vector<std::pair<int, std::vector<ForeignKeyRow>>> fks(groups.begin(), groups.end());
        for (const auto& [id, rows] : fks) {
            const auto* parent = find_structure(out, rows.front().to_table);
            if (!parent) {
                out.warnings.push_back("foreign key on " + t.name + " references missing table " + rows.front().to_table);
                continue;
            }
            std::vector<const ColumnStructure*> parent_pk;
            for (const auto& c : parent->columns)
                if (c.primary_key_position > 0) parent_pk.push_back(&c);
            std::sort(parent_pk.begin(), parent_pk.end(),
                      [](auto* a, auto* b) { return a->primary_key_position < b->primary_key_position; });
            for (std::size_t i = 0; i < rows.size(); ++i) {
                const auto* from = find_structure_column(t, rows[i].from_column);
                const ColumnStructure* to = nullptr;
                if (rows[i].to_column) {
                    to = find_structure_column(*parent, *rows[i].to_column);
                } else if (i < parent_pk.size()) {
                    to = parent_pk[i];
                }
                if (!from || !to) {
                    out.warnings.push_back("foreign key on " + t.name + "." + rows[i].from_column +
                                           " references a missing column of " + parent->name);
                    continue;
                }
                out.declared_edges.push_back(
                    ForeignKeyEdge{{t.name, from->name}, {parent->name, to->name}, EdgeSource::declared, std::nullopt});
            }
        }
        t.simplified_ddl = render_ddl(t, fks, out);
    }
    return out;
}

std::vector<Value> distinct_first_sample(std::vector<ValueCount> frequencies, std::size_t n) {
    std::sort(frequencies.begin(), frequencies.end(), by_frequency);
    std::vector<Value> out;
    const std::size_t distinct = std::min(n, frequencies.size());
    out.reserve(n);
    for (std::size_t i = 0; i < distinct; ++i) out.push_back(frequencies[i].value);
    for (std::size_t i = 0; i < distinct && out.size() < n; ++i) {
        for (std::size_t extra = 1; extra < frequencies[i].count && out.size() < n; ++extra) {
            out.push_back(frequencies[i].value);
        }
    }
    return out;
}

std::vector<Value> sample_column(const Database& db, std::string_view table, std::string_view column,
                                 const SamplingSpec& spec) {
    spec.validate();
    const auto cols = table_columns(db, table);
    if (cols.empty()) throw DatabaseError("unknown table: " + std::string(table));
    if (std::none_of(cols.begin(), cols.end(), [&](const auto& c) { return to_lower(c.name) == to_lower(column); }))
        throw DatabaseError("unknown column: " + std::string(table) + "." + std::string(column));

    const auto tq = quote_identifier(table);
    const auto cq = quote_identifier(column);
    std::vector<ValueCount> freq;
    if (count_rows(db, table) <= spec.full_scan_row_limit) {
        auto stmt = db.prepare("SELECT " + cq + ", count(*) FROM " + tq + " GROUP BY " + cq + " COLLATE BINARY");
        while (stmt.step()) {
            freq.push_back({stmt.column(0), static_cast<std::size_t>(std::get<std::int64_t>(stmt.column(1)))});
        }
    } else {
        std::mt19937_64 rng(spec.seed);
        std::vector<Value> reservoir;
        reservoir.reserve(spec.reservoir_size);
        auto stmt = db.prepare("SELECT " + cq + " FROM " + tq);
        std::uint64_t seen = 0;
        while (stmt.step()) {
            if (reservoir.size() < spec.reservoir_size) {
                reservoir.push_back(stmt.column(0));
            } else {
                const std::uint64_t j = rng() % (seen + 1);
                if (j < spec.reservoir_size) reservoir[j] = stmt.column(0);
            }
            ++seen;
        }
        std::map<Value, std::size_t, ValueLess> counts;
        for (auto& v : reservoir) ++counts[std::move(v)];
        for (auto& [v, c] : counts) freq.push_back({v, c});
    }
    return distinct_first_sample(std::move(freq), spec.n);
}

ColumnProfile profile_column(std::span<const Value> samples) {
    ColumnProfile p;
    p.sample_size = samples.size();
    p.sample_values.assign(samples.begin(), samples.end());

    std::size_t nulls = 0;
    std::map<Value, std::size_t, ValueLess> counts;
    std::vector<double> numbers;
    bool has_numeric = false, has_text = false, has_blob = false;
    for (const auto& v : samples) {
        if (is_null(v)) {
            ++nulls;
            continue;
        }
        ++counts[v];
        switch (v.index()) {
        case 1:
        case 2: has_numeric = true; break;
        case 3: has_text = true; break;
        default: has_blob = true; break;
        }
        if (auto n = as_number(v)) numbers.push_back(*n);
    }
    const std::size_t non_null = samples.size() - nulls;
    p.null_fraction = samples.empty() ? 0.0 : static_cast<double>(nulls) / static_cast<double>(samples.size());
    p.distinct_count_in_sample = counts.size();
    p.mixed_types = (has_numeric + has_text + has_blob) > 1;

    std::vector<ValueCount> ranked;
    ranked.reserve(counts.size());
    for (const auto& [v, c] : counts) ranked.push_back({v, c});
    std::sort(ranked.begin(), ranked.end(), by_frequency);
    if (ranked.size() > kTopValuesCap) ranked.resize(kTopValuesCap);
    std::size_t covered = 0;
    for (const auto& tv : ranked) covered += tv.count;
    p.top_values = std::move(ranked);
    p.is_enumeration = non_null > 0 && p.distinct_count_in_sample <= kEnumerationMaxDistinct &&
                       covered * 100 >= non_null * 95;

    if (!numbers.empty()) {
        NumericStats s;
        double mean = 0, m2 = 0;
        std::size_t k = 0;
        for (double x : numbers) {
            ++k;
            const double delta = x - mean;
            mean += delta / static_cast<double>(k);
            m2 += delta * (x - mean);
        }
        std::sort(numbers.begin(), numbers.end());
        const auto m = numbers.size();
        auto nearest_rank = [&](double q) {
            auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(m)));
            rank = std::clamp<std::size_t>(rank, 1, m);
            return numbers[rank - 1];
        };
        s.min = numbers.front();
        s.max = numbers.back();
        s.mean = std::clamp(mean, s.min, s.max);
        s.variance = std::max(0.0, m2 / static_cast<double>(m));
        s.q25 = nearest_rank(0.25);
        s.q50 = nearest_rank(0.50);
        s.q75 = nearest_rank(0.75);
        p.numeric_stats = s;
    }
    return p;
}

std::string semantics_system_prompt() {
    return "You document database columns for a text-to-SQL assistant.\n"
           "Reply with exactly one fenced JSON object:\n"
           "```json\n"
           "{\"description\": \"...\", \"aliases\": [\"...\"], \"unit_hint\": null, "
           "\"time_granularity_hint\": null, \"enum_glossary\": {}}\n"
           "```\n"
           "description: one sentence on what the column means.\n"
           "aliases: other names or phrases a user might use for this column.\n"
           "unit_hint: measurement unit if any, else null.\n"
           "time_granularity_hint: year, month, day, timestamp, ... if temporal, else null.\n"
           "enum_glossary: for coded values only, map each raw value to a readable label.";
}

std::string semantics_user_prompt(const ColumnContext& ctx) {
    std::ostringstream out;
    out << "Table: " << ctx.table << "\n"
        << "Column: " << ctx.column << "\n"
        << "Declared type: " << (ctx.declared_type.empty() ? "(none)" : ctx.declared_type) << "\n"
        << "Table DDL:\n" << ctx.table_ddl << "\n";
    if (ctx.profile) {
        const auto& p = *ctx.profile;
        out << "Profile: " << describe_profile(p) << "\n";
        out << "Top values:";
        for (const auto& tv : p.top_values) out << " " << to_text(tv.value) << " (" << tv.count << ")";
        out << "\nSample values:";
        std::size_t shown = 0;
        for (const auto& v : p.sample_values) {
            if (shown == 20) break;
            if (is_null(v)) continue;
            out << " " << to_text(v);
            ++shown;
        }
        out << "\n";
    }
    return out.str();
}

SemanticsResult induce_semantics(LlmGateway* gateway, const ColumnContext& ctx) {
    SemanticsResult result;
    if (!gateway) return result;
    const std::string where = ctx.table + "." + ctx.column;
    std::string reply;
    try {
        reply = gateway->complete(semantics_system_prompt(), semantics_user_prompt(ctx));
    } catch (const Error& e) {
        result.warning = "semantics for " + where + " unavailable: " + e.what();
        return result;
    }
    const auto parsed = extract_fenced_json(reply);
    if (!parsed) {
        result.warning = "semantics reply for " + where + " is not structured JSON";
        return result;
    }
    const auto& j = *parsed;
    auto& s = result.semantics;
    if (j.contains("description") && j["description"].is_string()) s.description = trim(j["description"].get<std::string>());
    if (j.contains("aliases") && j["aliases"].is_array()) {
        for (const auto& a : j["aliases"]) {
            if (!a.is_string()) continue;
            auto alias = trim(a.get<std::string>());
            if (alias.empty() || std::find(s.aliases.begin(), s.aliases.end(), alias) != s.aliases.end()) continue;
            s.aliases.push_back(std::move(alias));
        }
    }
    s.unit_hint = optional_text(j, "unit_hint");
    s.time_granularity_hint = optional_text(j, "time_granularity_hint");
    if (j.contains("enum_glossary") && j["enum_glossary"].is_object()) {
        static const std::vector<Value> none;
        const auto& samples = ctx.profile ? ctx.profile->sample_values : none;
        for (const auto& [key, label] : j["enum_glossary"].items()) {
            auto text = trim(json_scalar_text(label));
            if (text.empty()) continue;
            if (glossary_key_observed(key, samples)) s.enum_glossary[key] = std::move(text);
        }
    }
    return result;
}

TypeAffinity type_affinity(std::string_view declared_type) {
    const auto t = to_upper(declared_type);
    if (t.find("INT") != std::string::npos) return TypeAffinity::integer;
    if (t.find("CHAR") != std::string::npos || t.find("CLOB") != std::string::npos ||
        t.find("TEXT") != std::string::npos)
        return TypeAffinity::text;
    if (t.empty() || t.find("BLOB") != std::string::npos) return TypeAffinity::blob;
    if (t.find("REAL") != std::string::npos || t.find("FLOA") != std::string::npos ||
        t.find("DOUB") != std::string::npos)
        return TypeAffinity::real;
    return TypeAffinity::numeric;
}

bool types_compatible(std::string_view a, std::string_view b) {
    if (trim(a).empty() || trim(b).empty()) return true;
    const auto fa = type_affinity(a);
    const auto fb = type_affinity(b);
    auto numeric = [](TypeAffinity f) {
        return f == TypeAffinity::integer || f == TypeAffinity::real || f == TypeAffinity::numeric;
    };
    if (numeric(fa) && numeric(fb)) return true;
    return fa == fb;
}

std::vector<ForeignKeyEdge> infer_fk_edges(const DatabaseStructure& structure,
                                           const std::vector<std::vector<ColumnProfile>>& profiles) {
    struct Endpoint {
        std::size_t table;
        std::size_t column;
    };
    std::set<std::pair<ColumnRef, ColumnRef>> declared;
    for (const auto& e : structure.declared_edges) {
        ColumnRef a{to_lower(e.from.table), to_lower(e.from.column)};
        ColumnRef b{to_lower(e.to.table), to_lower(e.to.column)};
        declared.insert({std::min(a, b), std::max(a, b)});
    }
    auto key_like = [&](Endpoint ep) {
        const auto& col = structure.tables[ep.table].columns[ep.column];
        if (col.primary_key_position > 0) return true;
        // Distinct measurements (prices, scores) are not identifiers.
        if (type_affinity(col.declared_type) == TypeAffinity::real) return false;
        if (ep.table >= profiles.size() || ep.column >= profiles[ep.table].size()) return false;
        const auto& p = profiles[ep.table][ep.column];
        const auto nulls = static_cast<std::size_t>(std::llround(p.null_fraction * static_cast<double>(p.sample_size)));
        return p.distinct_count_in_sample > 0 && p.distinct_count_in_sample + nulls == p.sample_size;
    };

    std::vector<ForeignKeyEdge> out;
    const auto& tables = structure.tables;
    for (std::size_t ta = 0; ta < tables.size(); ++ta) {
        for (std::size_t ca = 0; ca < tables[ta].columns.size(); ++ca) {
            for (std::size_t tb = ta + 1; tb < tables.size(); ++tb) {
                for (std::size_t cb = 0; cb < tables[tb].columns.size(); ++cb) {
                    const auto& a = tables[ta].columns[ca];
                    const auto& b = tables[tb].columns[cb];
                    ColumnRef ra{to_lower(tables[ta].name), to_lower(a.name)};
                    ColumnRef rb{to_lower(tables[tb].name), to_lower(b.name)};
                    if (declared.count({std::min(ra, rb), std::max(ra, rb)})) continue;
                    if (!types_compatible(a.declared_type, b.declared_type)) continue;
                    const double sim = std::min(1.0, name_similarity(a.name, b.name));
                    if (sim < kInferredEdgeThreshold) continue;
                    const Endpoint ea{ta, ca}, eb{tb, cb};
                    const bool ka = key_like(ea), kb = key_like(eb);
                    if (!ka && !kb) continue;
                    // The key-like side is the referenced one; a declared PK wins ties.
                    const bool a_is_target =
                        ka != kb ? ka : !(b.primary_key_position > 0 && a.primary_key_position == 0);
                    ColumnRef from{tables[tb].name, b.name}, to{tables[ta].name, a.name};
                    if (!a_is_target) std::swap(from, to);
                    out.push_back(ForeignKeyEdge{from, to, EdgeSource::inferred, sim});
                }
            }
        }
    }
    return out;
}

MiningResult mine_schema_knowledge(const std::filesystem::path& db_path, LlmGateway* gateway,
                                   const MiningOptions& options) {
    options.sampling.validate();
    const auto db = Database::open_read_only(db_path);
    auto structure = extract_structure(db);

    struct Slot {
        std::size_t table;
        std::size_t column;
        ColumnProfile profile;
        ColumnSemantics semantics;
        std::optional<std::string> warning;
    };
    std::vector<Slot> slots;
    for (std::size_t t = 0; t < structure.tables.size(); ++t)
        for (std::size_t c = 0; c < structure.tables[t].columns.size(); ++c) slots.push_back({t, c, {}, {}, {}});

    const std::size_t workers =
        std::min(options.workers == 0 ? default_workers() : options.workers, std::max<std::size_t>(slots.size(), 1));
    // One read-only connection per worker; slot i belongs to worker i % workers.
    parallel_for(workers, workers, [&](std::size_t w) {
        const auto conn = Database::open_read_only(db_path);
        for (std::size_t i = w; i < slots.size(); i += workers) {
            auto& slot = slots[i];
            const auto& table = structure.tables[slot.table];
            const auto& column = table.columns[slot.column];
            const auto samples = sample_column(conn, table.name, column.name, options.sampling);
            slot.profile = profile_column(samples);
            auto sem = induce_semantics(gateway, {table.name, column.name, column.declared_type,
                                                  table.simplified_ddl, &slot.profile});
            slot.semantics = std::move(sem.semantics);
            slot.warning = std::move(sem.warning);
        }
    });

    std::vector<std::vector<ColumnProfile>> profiles(structure.tables.size());
    for (std::size_t t = 0; t < structure.tables.size(); ++t) profiles[t].resize(structure.tables[t].columns.size());
    for (const auto& s : slots) profiles[s.table][s.column] = s.profile;

    MiningResult result;
    auto& sk = result.knowledge;
    sk.db_id = options.db_id.empty() ? db_path.stem().string() : options.db_id;
    sk.tool_version = kToolVersion;
    sk.created_at = options.created_at;
    result.warnings = structure.warnings;
    for (std::size_t t = 0; t < structure.tables.size(); ++t) {
        const auto& ts = structure.tables[t];
        TableKnowledge tk;
        tk.name = ts.name;
        tk.simplified_ddl = ts.simplified_ddl;
        tk.row_count = ts.row_count;
        tk.sample_rows = ts.sample_rows;
        for (std::size_t c = 0; c < ts.columns.size(); ++c) {
            tk.columns.push_back({ts.columns[c].name, ts.columns[c].declared_type, profiles[t][c], {}});
        }
        sk.tables.push_back(std::move(tk));
    }
    for (auto& s : slots) {
        sk.tables[s.table].columns[s.column].semantics = std::move(s.semantics);
        if (s.warning) result.warnings.push_back(std::move(*s.warning));
    }
    sk.fk_edges = structure.declared_edges;
    auto inferred = infer_fk_edges(structure, profiles);
    sk.fk_edges.insert(sk.fk_edges.end(), inferred.begin(), inferred.end());
    validate(sk);
    return result;
}

} // namespace ca
