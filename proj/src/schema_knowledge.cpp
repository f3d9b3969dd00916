// SPDX-License-Identifier: Apache-2.0
#include "ca/schema_knowledge.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "ca/error.hpp"
#include "ca/text.hpp"

namespace ca {

using json = nlohmann::ordered_json;

namespace {

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() && to_lower(a) == to_lower(b);
}

json profile_to_json(const ColumnProfile& p) {
    json j;
    j["sample_size"] = p.sample_size;
    j["null_fraction"] = p.null_fraction;
    j["distinct_count_in_sample"] = p.distinct_count_in_sample;
    if (p.numeric_stats) {
        const auto& s = *p.numeric_stats;
        json n;
        n["min"] = s.min;
        n["max"] = s.max;
        n["mean"] = s.mean;
        n["variance"] = s.variance;
        n["q25"] = s.q25;
        n["q50"] = s.q50;
        n["q75"] = s.q75;
        j["numeric_stats"] = std::move(n);
    } else {
        j["numeric_stats"] = nullptr;
    }
    json top = json::array();
    for (const auto& tv : p.top_values) top.push_back(json::array({value_to_json(tv.value), tv.count}));
    j["top_values"] = std::move(top);
    j["is_enumeration"] = p.is_enumeration;
    json samples = json::array();
    for (const auto& v : p.sample_values) samples.push_back(value_to_json(v));
    j["sample_values"] = std::move(samples);
    j["mixed_types"] = p.mixed_types;
    return j;
}

ColumnProfile profile_from_json(const json& j) {
    ColumnProfile p;
    p.sample_size = j.at("sample_size").get<std::size_t>();
    p.null_fraction = j.at("null_fraction").get<double>();
    p.distinct_count_in_sample = j.at("distinct_count_in_sample").get<std::size_t>();
    const auto& n = j.at("numeric_stats");
    if (!n.is_null()) {
        NumericStats s;
        s.min = n.at("min").get<double>();
        s.max = n.at("max").get<double>();
        s.mean = n.at("mean").get<double>();
        s.variance = n.at("variance").get<double>();
        s.q25 = n.at("q25").get<double>();
        s.q50 = n.at("q50").get<double>();
        s.q75 = n.at("q75").get<double>();
        p.numeric_stats = s;
    }
    for (const auto& tv : j.at("top_values")) {
        if (!tv.is_array() || tv.size() != 2) throw json::type_error::create(302, "top_values entry must be a pair", &tv);
        p.top_values.push_back({value_from_json(tv[0]), tv[1].get<std::size_t>()});
    }
    p.is_enumeration = j.at("is_enumeration").get<bool>();
    for (const auto& v : j.at("sample_values")) p.sample_values.push_back(value_from_json(v));
    p.mixed_types = j.at("mixed_types").get<bool>();
    return p;
}

json optional_string(const std::optional<std::string>& s) {
    return s ? json(*s) : json(nullptr);
}

json semantics_to_json(const ColumnSemantics& s) {
    json j;
    j["description"] = s.description;
    j["aliases"] = s.aliases;
    j["unit_hint"] = optional_string(s.unit_hint);
    j["time_granularity_hint"] = optional_string(s.time_granularity_hint);
    json g = json::object();
    for (const auto& [k, v] : s.enum_glossary) g[k] = v;
    j["enum_glossary"] = std::move(g);
    return j;
}

std::optional<std::string> read_optional_string(const json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<std::string>();
}

ColumnSemantics semantics_from_json(const json& j) {
    ColumnSemantics s;
    s.description = j.at("description").get<std::string>();
    s.aliases = j.at("aliases").get<std::vector<std::string>>();
    s.unit_hint = read_optional_string(j.at("unit_hint"));
    s.time_granularity_hint = read_optional_string(j.at("time_granularity_hint"));
    for (const auto& [k, v] : j.at("enum_glossary").items()) s.enum_glossary[k] = v.get<std::string>();
    return s;
}

json ref_to_json(const ColumnRef& r) {
    json j;
    j["table"] = r.table;
    j["column"] = r.column;
    return j;
}

ColumnRef ref_from_json(const json& j) {
    return {j.at("table").get<std::string>(), j.at("column").get<std::string>()};
}

} // namespace

const ColumnKnowledge* TableKnowledge::find_column(std::string_view column) const {
    for (const auto& c : columns)
        if (c.name == column) return &c;
    for (const auto& c : columns)
        if (iequals(c.name, column)) return &c;
    return nullptr;
}

const TableKnowledge* SchemaKnowledge::find_table(std::string_view table) const {
    for (const auto& t : tables)
        if (t.name == table) return &t;
    for (const auto& t : tables)
        if (iequals(t.name, table)) return &t;
    return nullptr;
}

const ColumnKnowledge* SchemaKnowledge::find_column(const ColumnRef& ref) const {
    const auto* t = find_table(ref.table);
    return t ? t->find_column(ref.column) : nullptr;
}

bool glossary_key_observed(const std::string& key, const std::vector<Value>& samples) {
    const auto key_num = parse_number(key);
    for (const auto& v : samples) {
        if (is_null(v)) continue;
        if (to_text(v) == key) return true;
        if (key_num && !std::holds_alternative<std::string>(v)) {
            if (auto n = as_number(v); n && *n == *key_num) return true;
        }
    }
    return false;
}

void validate(const ColumnProfile& p) {
    if (p.sample_values.size() != p.sample_size)
        throw InvariantError("sample_size does not match sample_values length");
    if (!(p.null_fraction >= 0.0 && p.null_fraction <= 1.0))
        throw InvariantError("null_fraction outside [0,1]");
    if (p.distinct_count_in_sample > p.sample_size)
        throw InvariantError("distinct_count_in_sample exceeds sample_size");
    if (p.top_values.size() > kTopValuesCap) throw InvariantError("too many top_values");
    std::size_t total = 0;
    for (std::size_t i = 0; i < p.top_values.size(); ++i) {
        total += p.top_values[i].count;
        if (i > 0) {
            const auto& a = p.top_values[i - 1];
            const auto& b = p.top_values[i];
            if (a.count < b.count || (a.count == b.count && compare_values(a.value, b.value) >= 0))
                throw InvariantError("top_values not sorted by frequency desc, value asc");
        }
    }
    if (total > p.sample_size) throw InvariantError("top_values frequencies exceed sample_size");
    if (p.numeric_stats) {
        const auto& s = *p.numeric_stats;
        if (!(s.min <= s.q25 && s.q25 <= s.q50 && s.q50 <= s.q75 && s.q75 <= s.max))
            throw InvariantError("numeric_stats quantiles out of order");
        if (s.variance < 0) throw InvariantError("negative variance");
    }
    if (p.is_enumeration && p.distinct_count_in_sample > kEnumerationMaxDistinct)
        throw InvariantError("enumeration flagged with too many distinct values");
}

void validate(const SchemaKnowledge& sk) {
    std::set<std::string> table_names;
    for (const auto& t : sk.tables) {
        if (!table_names.insert(to_lower(t.name)).second)
            throw InvariantError("duplicate table name: " + t.name);
        if (t.sample_rows.size() > kSampleRowsCap)
            throw InvariantError("table " + t.name + " has too many sample rows");
        for (const auto& row : t.sample_rows) {
            if (row.size() != t.columns.size())
                throw InvariantError("table " + t.name + " sample row width mismatch");
        }
        std::set<std::string> column_names;
        for (const auto& c : t.columns) {
            if (!column_names.insert(to_lower(c.name)).second)
                throw InvariantError("duplicate column name: " + t.name + "." + c.name);
            try {
                validate(c.profile);
            } catch (const InvariantError& e) {
                throw InvariantError(t.name + "." + c.name + ": " + e.what());
            }
            for (const auto& [key, label] : c.semantics.enum_glossary) {
                if (!glossary_key_observed(key, c.profile.sample_values))
                    throw InvariantError(t.name + "." + c.name + ": glossary key '" + key +
                                         "' is not an observed sample value");
            }
        }
    }
    for (const auto& e : sk.fk_edges) {
        for (const auto* end : {&e.from, &e.to}) {
            if (!sk.find_column(*end))
                throw InvariantError("foreign key endpoint " + end->table + "." + end->column + " does not exist");
        }
        if (e.source == EdgeSource::declared && e.similarity)
            throw InvariantError("declared foreign key carries a similarity score");
        if (e.source == EdgeSource::inferred) {
            if (!e.similarity) throw InvariantError("inferred foreign key lacks a similarity score");
            if (*e.similarity < kInferredEdgeThreshold || *e.similarity > 1.0)
                throw InvariantError("inferred foreign key similarity outside [threshold, 1]");
        }
    }
}

std::string format_timestamp(Timestamp t) {
    using namespace std::chrono;
    const auto day = floor<days>(t);
    const year_month_day ymd{day};
    const hh_mm_ss tod{t - day};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(tod.hours().count()), static_cast<int>(tod.minutes().count()),
                  static_cast<int>(tod.seconds().count()));
    return buf;
}

Timestamp parse_timestamp(const std::string& text) {
    using namespace std::chrono;
    int y = 0;
    unsigned mo = 0, d = 0;
    int h = 0, mi = 0, s = 0;
    char z = 0;
    int consumed = 0;
    if (std::sscanf(text.c_str(), "%4d-%2u-%2uT%2d:%2d:%2d%c%n", &y, &mo, &d, &h, &mi, &s, &z, &consumed) != 7 ||
        z != 'Z' || static_cast<std::size_t>(consumed) != text.size()) {
        throw InvariantError("timestamp is not RFC 3339 UTC: " + text);
    }
    const year_month_day ymd{year{y}, month{mo}, day{d}};
    if (!ymd.ok() || h > 23 || mi > 59 || s > 60) throw InvariantError("invalid timestamp: " + text);
    return sys_days{ymd} + hours{h} + minutes{mi} + seconds{s};
}

json to_json(const SchemaKnowledge& sk) {
    json j;
    j["db_id"] = sk.db_id;
    j["tool_version"] = sk.tool_version;
    j["created_at"] = format_timestamp(sk.created_at);
    json tables = json::array();
    for (const auto& t : sk.tables) {
        json tj;
        tj["name"] = t.name;
        tj["simplified_ddl"] = t.simplified_ddl;
        tj["row_count"] = t.row_count;
        json cols = json::array();
        for (const auto& c : t.columns) {
            json cj;
            cj["name"] = c.name;
            cj["declared_type"] = c.declared_type;
            cj["profile"] = profile_to_json(c.profile);
            cj["semantics"] = semantics_to_json(c.semantics);
            cols.push_back(std::move(cj));
        }
        tj["columns"] = std::move(cols);
        json rows = json::array();
        for (const auto& r : t.sample_rows) {
            json rj = json::array();
            for (const auto& v : r) rj.push_back(value_to_json(v));
            rows.push_back(std::move(rj));
        }
        tj["sample_rows"] = std::move(rows);
        tables.push_back(std::move(tj));
    }
    j["tables"] = std::move(tables);
    json edges = json::array();
    for (const auto& e : sk.fk_edges) {
        json ej;
        ej["from"] = ref_to_json(e.from);
        ej["to"] = ref_to_json(e.to);
        ej["source"] = e.source == EdgeSource::declared ? "declared" : "inferred";
        ej["similarity"] = e.similarity ? json(*e.similarity) : json(nullptr);
        edges.push_back(std::move(ej));
    }
    j["fk_edges"] = std::move(edges);
    return j;
}

SchemaKnowledge schema_knowledge_from_json(const json& j) {
    SchemaKnowledge sk;
    sk.db_id = j.at("db_id").get<std::string>();
    sk.tool_version = j.at("tool_version").get<std::string>();
    sk.created_at = parse_timestamp(j.at("created_at").get<std::string>());
    for (const auto& tj : j.at("tables")) {
        TableKnowledge t;
        t.name = tj.at("name").get<std::string>();
        t.simplified_ddl = tj.at("simplified_ddl").get<std::string>();
        t.row_count = tj.at("row_count").get<std::uint64_t>();
        for (const auto& cj : tj.at("columns")) {
            ColumnKnowledge c;
            c.name = cj.at("name").get<std::string>();
            c.declared_type = cj.at("declared_type").get<std::string>();
            c.profile = profile_from_json(cj.at("profile"));
            c.semantics = semantics_from_json(cj.at("semantics"));
            t.columns.push_back(std::move(c));
        }
        for (const auto& rj : tj.at("sample_rows")) {
            Row r;
            for (const auto& v : rj) r.push_back(value_from_json(v));
            t.sample_rows.push_back(std::move(r));
        }
        sk.tables.push_back(std::move(t));
    }
    for (const auto& ej : j.at("fk_edges")) {
        ForeignKeyEdge e;
        e.from = ref_from_json(ej.at("from"));
        e.to = ref_from_json(ej.at("to"));
        const auto source = ej.at("source").get<std::string>();
        if (source == "declared") {
            e.source = EdgeSource::declared;
        } else if (source == "inferred") {
            e.source = EdgeSource::inferred;
        } else {
            throw InvariantError("unknown foreign key source: " + source);
        }
        if (!ej.at("similarity").is_null()) e.similarity = ej.at("similarity").get<double>();
        sk.fk_edges.push_back(std::move(e));
    }
    return sk;
}

std::string serialize(const SchemaKnowledge& sk) {
    return to_json(sk).dump(2) + "\n";
}

void save(const SchemaKnowledge& sk, const std::filesystem::path& path) {
    validate(sk);
    const auto bytes = serialize(sk);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw PersistenceError(path, "cannot open for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.close();
    if (!out) throw PersistenceError(path, "write failed");
}

SchemaKnowledge load_schema_knowledge(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw MissingFileError(path);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw PersistenceError(path, "cannot open for reading");
    std::ostringstream buf;
    buf << in.rdbuf();
    SchemaKnowledge sk;
    try {
        sk = schema_knowledge_from_json(json::parse(buf.str()));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path, std::string("malformed knowledge file: ") + e.what());
    }
    validate(sk);
    return sk;
}

std::string knowledge_file_name(std::string_view db_id) {
    return std::string(db_id) + ".knowledge.json";
}

} // namespace ca
