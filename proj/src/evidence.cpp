// SPDX-License-Identifier: Apache-2.0
#include "ca/evidence.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <queue>
#include <regex>
#include <tuple>

#include "ca/error.hpp"
#include "ca/llm_gateway.hpp"
#include "ca/prompts.hpp"
#include "ca/sqlite.hpp"
#include "ca/text.hpp"
#include "ca/value.hpp"

namespace ca {

namespace {

// A question token with its byte span, so substitutions keep the rest of
// the original text untouched.
struct Tok {
    std::string text;
    std::size_t begin = 0;
    std::size_t end = 0;
};

std::vector<Tok> spanned_tokens(std::string_view text) {
    std::vector<Tok> out;
    std::size_t i = 0;
    while (i < text.size()) {
        const auto c = static_cast<unsigned char>(text[i]);
        if (!(std::isalnum(c) || c >= 0x80)) {
            ++i;
            continue;
        }
        Tok t;
        t.begin = i;
        while (i < text.size()) {
            const auto d = static_cast<unsigned char>(text[i]);
            if (!(std::isalnum(d) || d >= 0x80)) break;
            t.text += static_cast<char>(std::tolower(d));
            ++i;
        }
        t.end = i;
        out.push_back(std::move(t));
    }
    return out;
}

// Plural-insensitive token comparison: "schools" matches "school".
std::string stem(const std::string& t) {
    if (t.size() > 3 && t.back() == 's' && t[t.size() - 2] != 's') return t.substr(0, t.size() - 1);
    return t;
}

// Token index where `phrase` starts in `toks`, or npos. Phrases that are
// empty or made only of stopwords never match.
std::size_t find_in(const std::vector<Tok>& toks, const std::vector<std::string>& phrase) {
    if (phrase.empty() || all_stopwords(phrase) || phrase.size() > toks.size()) return std::string::npos;
    for (std::size_t i = 0; i + phrase.size() <= toks.size(); ++i) {
        bool ok = true;
        for (std::size_t j = 0; j < phrase.size() && ok; ++j) ok = stem(toks[i + j].text) == stem(phrase[j]);
        if (ok) return i;
    }
    return std::string::npos;
}

bool mentions(const std::vector<Tok>& toks, std::string_view text) {
    return find_in(toks, word_tokens(text)) != std::string::npos;
}

bool mentions_identifier(const std::vector<Tok>& toks, std::string_view identifier) {
    return find_in(toks, identifier_tokens(identifier)) != std::string::npos;
}

// First token position where the column is named by identifier or alias.
std::optional<std::size_t> column_mention(const std::vector<Tok>& toks, const ColumnKnowledge& c) {
    std::optional<std::size_t> best;
    auto consider = [&](std::size_t pos) {
        if (pos != std::string::npos && (!best || pos < *best)) best = pos;
    };
    consider(find_in(toks, identifier_tokens(c.name)));
    for (const auto& a : c.semantics.aliases) consider(find_in(toks, word_tokens(a)));
    return best;
}

std::string qualified(const TableKnowledge& t, const ColumnKnowledge& c) {
    return t.name + "." + c.name;
}

std::string render_key(const std::string& key) {
    if (parse_number(key)) return key;
    return quote_literal(key);
}

std::string render_value(const Value& v) {
    if (std::holds_alternative<std::string>(v)) return quote_literal(std::get<std::string>(v));
    return to_text(v);
}

EvidenceItem make_item(EvidenceKind kind, std::string text, std::vector<ColumnRef> refs, std::string provenance) {
    return EvidenceItem{kind, truncate_at_sentence(text, kEvidenceTextCap), std::move(refs), std::move(provenance)};
}

using EdgeKey = std::tuple<std::string, std::string, std::string, std::string, int>;

EdgeKey edge_key(const ForeignKeyEdge& e) {
    return {e.from.table, e.from.column, e.to.table, e.to.column, e.source == EdgeSource::inferred ? 1 : 0};
}

struct PathKey {
    std::size_t inferred = 0;
    std::vector<std::string> tables;
    std::vector<EdgeKey> edges;
    std::vector<std::size_t> edge_index;

    bool better_than(const PathKey& o) const {
        return std::tie(inferred, tables, edges) < std::tie(o.inferred, o.tables, o.edges);
    }
};

std::string lower_first(std::string s) {
    if (s.size() > 1 && std::isupper(static_cast<unsigned char>(s[0])) &&
        !std::isupper(static_cast<unsigned char>(s[1])))
        s[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(s[0])));
    while (!s.empty() && (s.back() == '.' || s.back() == ' ')) s.pop_back();
    return s;
}

bool is_year_column(const ColumnKnowledge& c) {
    if (c.semantics.time_granularity_hint && to_lower(*c.semantics.time_granularity_hint) == "year") return true;
    const auto toks = identifier_tokens(c.name);
    return std::find(toks.begin(), toks.end(), "year") != toks.end() && c.profile.numeric_stats.has_value();
}

struct OperationCue {
    std::vector<std::string> words;
    std::string description;
};

const std::vector<OperationCue>& operation_cues() {
    static const std::vector<OperationCue> cues{
        {{"ratio"}, "ratio: divide one aggregate by the other, casting to REAL"},
        {{"rate"}, "rate: divide one aggregate by the other, casting to REAL"},
        {{"percentage"}, "percentage: divide one aggregate by the other as REAL and multiply by 100"},
        {{"percent"}, "percentage: divide one aggregate by the other as REAL and multiply by 100"},
        {{"average"}, "average: AVG over the column"},
        {{"mean"}, "average: AVG over the column"},
        {{"difference"}, "difference: subtract one aggregate from the other"},
        {{"total"}, "total: SUM over the column"},
        {{"sum"}, "total: SUM over the column"},
        {{"per"}, "per-group aggregate: GROUP BY the grouping column"},
        {{"rank"}, "ranking: ORDER BY the column, or a RANK() window"},
        {{"top"}, "ranking: ORDER BY the column with LIMIT"},
        {{"highest"}, "maximum: ORDER BY the column DESC with LIMIT 1, or MAX"},
        {{"maximum"}, "maximum: MAX over the column"},
        {{"lowest"}, "minimum: ORDER BY the column with LIMIT 1, or MIN"},
        {{"minimum"}, "minimum: MIN over the column"},
        {{"how", "many"}, "count: COUNT over the matching rows"},
        {{"number", "of"}, "count: COUNT over the matching rows"},
        {{"count"}, "count: COUNT over the matching rows"},
    };
    return cues;
}

std::string profile_facts(const ColumnProfile& p) {
    if (!p.numeric_stats) return {};
    const auto& s = *p.numeric_stats;
    return "observed range " + format_number(s.min) + " to " + format_number(s.max) + ", quartiles " +
           format_number(s.q25) + "/" + format_number(s.q50) + "/" + format_number(s.q75);
}

std::vector<std::string> skeleton_features(const std::string& skeleton) {
    std::vector<std::string> toks;
    {
        std::string cur;
        for (char c : skeleton) {
            if (c == ' ') {
                if (!cur.empty()) toks.push_back(std::move(cur));
                cur.clear();
            } else {
                cur += c;
            }
        }
        if (!cur.empty()) toks.push_back(std::move(cur));
    }
    std::vector<std::string> out;
    auto add = [&](std::string f) {
        if (std::find(out.begin(), out.end(), f) == out.end()) out.push_back(std::move(f));
    };
    static const std::set<std::string> aggregates{"COUNT", "SUM", "AVG", "MIN", "MAX"};
    for (std::size_t i = 0; i < toks.size(); ++i) {
        const auto& t = toks[i];
        const std::string next = i + 1 < toks.size() ? toks[i + 1] : "";
        if (t == "WITH" && i == 0) add("common table expression");
        else if (t == "JOIN") add("join");
        else if (t == "(" && next == "SELECT") add("subquery");
        else if (t == "OVER" && i >= 3 && toks[i - 1] == ")") {
            // FUNC ( ... ) OVER: walk back to the matching parenthesis.
            int depth = 0;
            std::size_t j = i - 1;
            for (;; --j) {
                if (toks[j] == ")") ++depth;
                if (toks[j] == "(") --depth;
                if (depth == 0 || j == 0) break;
            }
            add(j > 0 ? "window function " + toks[j - 1] + "() OVER" : "window function");
        } else if (t == "GROUP" && next == "BY") add("GROUP BY aggregation");
        else if (t == "HAVING") add("HAVING filter");
        else if (t == "ORDER" && next == "BY") add("ORDER BY");
        else if (t == "LIMIT") add("LIMIT");
        else if (t == "UNION" || t == "INTERSECT" || t == "EXCEPT") add(t + " of two queries");
        else if (t == "CASE") add("CASE expression");
        else if (t == "CAST") add("CAST");
        else if (aggregates.count(t) && next == "(") add(t + "()");
    }
    return out;
}

} // namespace

std::string_view to_string(EvidenceKind k) {
    switch (k) {
    case EvidenceKind::alias_mapping: return "AliasMapping";
    case EvidenceKind::schema_consistency: return "SchemaConsistency";
    case EvidenceKind::enum_dictionary: return "EnumDictionary";
    case EvidenceKind::numeric_template: return "NumericTemplate";
    case EvidenceKind::semantic_constraint: return "SemanticConstraint";
    case EvidenceKind::domain_note: return "DomainNote";
    case EvidenceKind::logical_completion: return "LogicalCompletion";
    }
    return "?";
}

JoinPathReport find_join_paths(const SchemaKnowledge& sk, const std::set<std::string>& tables) {
    std::set<std::string> names;
    for (const auto& t : tables) {
        const auto* tk = sk.find_table(t);
        if (!tk) throw InvariantError("unknown table " + t);
        names.insert(tk->name);
    }

    // Undirected adjacency over canonical table names; self-references never
    // help connect two different tables.
    std::map<std::string, std::vector<std::pair<std::string, std::size_t>>> adj;
    for (std::size_t i = 0; i < sk.fk_edges.size(); ++i) {
        const auto& e = sk.fk_edges[i];
        const auto* a = sk.find_table(e.from.table);
        const auto* b = sk.find_table(e.to.table);
        if (!a || !b || a->name == b->name) continue;
        adj[a->name].emplace_back(b->name, i);
        adj[b->name].emplace_back(a->name, i);
    }

    JoinPathReport report;
    for (auto it = names.begin(); it != names.end(); ++it) {
        for (auto jt = std::next(it); jt != names.end(); ++jt) {
            const std::string& src = *it;
            const std::string& dst = *jt;
            // Distances to dst, then best suffix per node in increasing
            // distance; every suffix strictly approaches dst, so paths are simple.
            std::map<std::string, std::size_t> dist{{dst, 0}};
            std::vector<std::string> order{dst};
            for (std::size_t q = 0; q < order.size(); ++q) {
                for (const auto& [n, idx] : adj[order[q]]) {
                    if (dist.count(n)) continue;
                    dist[n] = dist[order[q]] + 1;
                    order.push_back(n);
                }
            }
            if (!dist.count(src)) {
                report.unreachable.emplace_back(src, dst);
                continue;
            }
            std::map<std::string, PathKey> best;
            best[dst] = PathKey{0, {dst}, {}, {}};
            for (std::size_t q = 1; q < order.size(); ++q) {
                const auto& v = order[q];
                std::optional<PathKey> pick;
                for (const auto& [u, idx] : adj[v]) {
                    if (dist[u] + 1 != dist[v]) continue;
                    const auto& rest = best.at(u);
                    const auto& e = sk.fk_edges[idx];
                    PathKey cand;
                    cand.inferred = rest.inferred + (e.source == EdgeSource::inferred ? 1 : 0);
                    cand.tables.push_back(v);
                    cand.tables.insert(cand.tables.end(), rest.tables.begin(), rest.tables.end());
                    cand.edges.push_back(edge_key(e));
                    cand.edges.insert(cand.edges.end(), rest.edges.begin(), rest.edges.end());
                    cand.edge_index.push_back(idx);
                    cand.edge_index.insert(cand.edge_index.end(), rest.edge_index.begin(), rest.edge_index.end());
                    if (!pick || cand.better_than(*pick)) pick = std::move(cand);
                }
                best[v] = std::move(*pick);
            }
            const auto& b = best.at(src);
            JoinPath path{src, dst, b.tables, {}};
            for (auto idx : b.edge_index) path.edges.push_back(sk.fk_edges[idx]);
            report.paths.push_back(std::move(path));
        }
    }
    return report;
}

std::set<std::string> mentioned_tables(std::string_view question, const SchemaKnowledge& sk) {
    const auto toks = spanned_tokens(question);
    std::set<std::string> out;
    for (const auto& t : sk.tables) {
        bool hit = mentions_identifier(toks, t.name);
        for (std::size_t i = 0; i < t.columns.size() && !hit; ++i) hit = column_mention(toks, t.columns[i]).has_value();
        if (hit) out.insert(t.name);
    }
    return out;
}

std::vector<EvidenceItem> gen_schema_consistency(const std::vector<JoinPath>& paths) {
    std::vector<EvidenceItem> items;
    for (const auto& p : paths) {
        if (p.edges.empty()) continue;
        std::string text = "Table " + p.tables[0] + " is linked to ";
        std::vector<ColumnRef> refs;
        for (std::size_t i = 0; i < p.edges.size(); ++i) {
            const auto& e = p.edges[i];
            // Orient the edge along the path for the "a.x = b.y" rendering.
            const bool forward = to_lower(e.from.table) == to_lower(p.tables[i]);
            const ColumnRef& near = forward ? e.from : e.to;
            const ColumnRef& far = forward ? e.to : e.from;
            if (i) text += ", then to ";
            text += p.tables[i + 1] + " via ";
            if (to_lower(near.column) == to_lower(far.column)) text += near.column;
            else text += near.table + "." + near.column + " = " + far.table + "." + far.column;
            refs.push_back(e.from);
            refs.push_back(e.to);
        }
        text += ".";
        items.push_back(make_item(EvidenceKind::schema_consistency, std::move(text), std::move(refs),
                                  "gen_schema_consistency"));
    }
    return items;
}

ConstraintResult gen_semantic_constraint(std::string_view question, const SchemaKnowledge& sk, LlmGateway* gateway) {
    static const std::regex pattern(
        R"(\b(after|since|before|over|above|under|below|exceeding|more than|greater than|less than|fewer than|at least|at most|between)\s+(-?\d+(?:\.\d+)?)(?:\s+and\s+(-?\d+(?:\.\d+)?))?)",
        std::regex::icase);
    ConstraintResult result;
    const std::string q(question);
    const auto toks = spanned_tokens(q);
    std::set<std::pair<std::string, std::string>> seen;

    for (auto it = std::sregex_iterator(q.begin(), q.end(), pattern); it != std::sregex_iterator(); ++it) {
        const auto& m = *it;
        const std::string cue = to_lower(m[1].str());
        const std::string lo_text = m[2].str();
        const bool between = cue == "between";
        if (between && !m[3].matched) continue;
        const std::string hi_text = between ? m[3].str() : "";
        const double lo = *parse_number(lo_text);
        const auto cue_pos = static_cast<std::size_t>(m.position(0));
        const bool year_like = std::floor(lo) == lo && lo >= 1800 && lo <= 2200;

        const TableKnowledge* tbl = nullptr;
        const ColumnKnowledge* col = nullptr;
        if (year_like) {
            // Prefer a year column the question names, then one whose table it
            // names, else the first one.
            const auto tables = mentioned_tables(q, sk);
            int best_rank = -1;
            for (const auto& t : sk.tables)
                for (const auto& c : t.columns) {
                    if (!is_year_column(c)) continue;
                    const int rank = column_mention(toks, c) ? 2 : tables.count(t.name) ? 1 : 0;
                    if (rank > best_rank) {
                        best_rank = rank;
                        tbl = &t;
                        col = &c;
                    }
                }
        }
        if (!col) {
            // Numeric column named nearest to the condition.
            std::size_t best_dist = std::string::npos;
            for (const auto& t : sk.tables)
                for (const auto& c : t.columns) {
                    if (!c.profile.numeric_stats) continue;
                    auto pos = column_mention(toks, c);
                    if (!pos) continue;
                    const auto at = toks[*pos].begin;
                    const auto d = at < cue_pos ? cue_pos - at : at - cue_pos;
                    if (d < best_dist) {
                        best_dist = d;
                        tbl = &t;
                        col = &c;
                    }
                }
        }
        if (!col) {
            result.warnings.push_back("condition '" + m[0].str() + "' matches no column");
            continue;
        }

        std::string op = "=";
        if (cue == "after" || cue == "over" || cue == "above" || cue == "exceeding" || cue == "more than" ||
            cue == "greater than")
            op = ">";
        else if (cue == "since" || cue == "at least") op = ">=";
        else if (cue == "before" || cue == "under" || cue == "below" || cue == "less than" || cue == "fewer than")
            op = "<";
        else if (cue == "at most") op = "<=";

        const std::string condition =
            between ? col->name + " BETWEEN " + lo_text + " AND " + hi_text : col->name + " " + op + " " + lo_text;
        if (!seen.insert({qualified(*tbl, *col), condition}).second) continue;

        std::string meaning;
        if (year_like && is_year_column(*col)) {
            const auto y = static_cast<long long>(lo);
            if (between) meaning = "correspond to " + lo_text + " through " + hi_text;
            else if (op == ">") meaning = "correspond to " + std::to_string(y + 1) + " and later";
            else if (op == ">=") meaning = "correspond to " + std::to_string(y) + " and later";
            else if (op == "<") meaning = "correspond to " + std::to_string(y - 1) + " and earlier";
            else meaning = "correspond to " + std::to_string(y) + " and earlier";
        } else {
            meaning = "satisfy the condition";
            if (auto facts = profile_facts(col->profile); !facts.empty()) meaning += " (" + facts + ")";
        }
        std::string head = "Column " + col->name;
        if (!col->semantics.description.empty()) head += " denotes " + lower_first(col->semantics.description);
        else head += " of table " + tbl->name + " holds the compared values";
        std::string text = head + "; records with " + condition + " " + meaning + ".";

        if (gateway) {
            std::string stub = "table: " + tbl->name + "\ncolumn: " + col->name + "\n";
            if (!col->semantics.description.empty()) stub += "description: " + col->semantics.description + "\n";
            stub += "condition: " + condition + "\nmeaning: records that " + meaning + "\n";
            try {
                auto phrased = trim(gateway->complete(std::string(prompts::constraint_system()), stub));
                if (!phrased.empty()) text = std::move(phrased);
            } catch (const std::exception&) {
                // Template text stands.
            }
        }
        result.items.push_back(make_item(EvidenceKind::semantic_constraint, std::move(text),
                                         {ColumnRef{tbl->name, col->name}}, "gen_semantic_constraint"));
    }
    return result;
}

std::vector<EvidenceItem> gen_numeric_template(std::string_view question, const SchemaKnowledge& sk) {
    const auto toks = spanned_tokens(question);
    std::string op = "arithmetic over the columns below";
    std::size_t op_pos = std::string::npos;
    for (const auto& cue : operation_cues()) {
        const auto pos = [&] {
            for (std::size_t i = 0; i + cue.words.size() <= toks.size(); ++i) {
                bool ok = true;
                for (std::size_t j = 0; j < cue.words.size() && ok; ++j) ok = toks[i + j].text == cue.words[j];
                if (ok) return i;
            }
            return std::string::npos;
        }();
        if (pos < op_pos) {
            op_pos = pos;
            op = cue.description;
        }
    }

    std::vector<std::string> parts;
    std::vector<ColumnRef> refs;
    for (const auto& t : sk.tables) {
        for (const auto& c : t.columns) {
            if (!c.profile.numeric_stats) continue;
            bool coded = false;
            bool hit = column_mention(toks, c).has_value();
            for (const auto& [key, label] : c.semantics.enum_glossary)
                if (!hit && mentions(toks, label)) hit = coded = true;
            if (!hit) continue;
            std::string part = qualified(t, c) + " (" + profile_facts(c.profile);
            if (coded) part += "; coded values, see the value dictionary";
            part += ")";
            parts.push_back(std::move(part));
            refs.push_back({t.name, c.name});
        }
    }
    if (parts.empty()) return {};
    std::string text = "Computation: " + op + ". Columns: " + join(parts, "; ") + ".";
    return {make_item(EvidenceKind::numeric_template, std::move(text), std::move(refs), "gen_numeric_template")};
}

std::vector<EvidenceItem> gen_enum_dictionary(std::string_view question, const SchemaKnowledge& sk) {
    const auto toks = spanned_tokens(question);
    std::vector<EvidenceItem> items;
    for (const auto& t : sk.tables) {
        for (const auto& c : t.columns) {
            if (!c.semantics.enum_glossary.empty()) {
                std::vector<std::string> matched, rest;
                for (const auto& [key, label] : c.semantics.enum_glossary) {
                    std::string entry = c.name + " = " + render_key(key) + " denotes \"" + label + "\"";
                    (mentions(toks, label) || mentions(toks, key) ? matched : rest).push_back(std::move(entry));
                }
                if (matched.empty()) continue;
                matched.insert(matched.end(), rest.begin(), rest.end());
                items.push_back(make_item(EvidenceKind::enum_dictionary,
                                          "Column " + qualified(t, c) + " codes: " + join(matched, "; ") + ".",
                                          {ColumnRef{t.name, c.name}}, "gen_enum_dictionary"));
            } else if (c.profile.is_enumeration) {
                std::vector<std::string> matched, rest;
                for (const auto& vc : c.profile.top_values) {
                    if (is_null(vc.value)) continue;
                    (mentions(toks, to_text(vc.value)) ? matched : rest).push_back(render_value(vc.value));
                }
                if (matched.empty()) continue;
                matched.insert(matched.end(), rest.begin(), rest.end());
                items.push_back(make_item(EvidenceKind::enum_dictionary,
                                          "Column " + qualified(t, c) + " takes the values " + join(matched, ", ") + ".",
                                          {ColumnRef{t.name, c.name}}, "gen_enum_dictionary"));
            }
        }
    }
    return items;
}

AliasRewrite gen_alias_rewrite(std::string_view question, const SchemaKnowledge& sk) {
    struct Alias {
        std::vector<std::string> tokens;
        std::string phrase;
        const TableKnowledge* table;
        const ColumnKnowledge* column;
    };
    std::vector<Alias> aliases;
    for (const auto& t : sk.tables)
        for (const auto& c : t.columns)
            for (const auto& a : c.semantics.aliases) {
                auto tokens = word_tokens(a);
                if (tokens.empty() || all_stopwords(tokens) || tokens == identifier_tokens(c.name)) continue;
                aliases.push_back({std::move(tokens), a, &t, &c});
            }

    const std::string q(question);
    const auto toks = spanned_tokens(q);
    AliasRewrite out;
    std::size_t copied = 0;
    for (std::size_t i = 0; i < toks.size();) {
        const Alias* best = nullptr;
        for (const auto& a : aliases) {
            if (i + a.tokens.size() > toks.size()) continue;
            if (best && a.tokens.size() <= best->tokens.size()) continue;
            bool ok = true;
            for (std::size_t j = 0; j < a.tokens.size() && ok; ++j) ok = toks[i + j].text == a.tokens[j];
            if (ok) best = &a;
        }
        if (!best) {
            ++i;
            continue;
        }
        const auto begin = toks[i].begin;
        const auto end = toks[i + best->tokens.size() - 1].end;
        out.rewritten += q.substr(copied, begin - copied);
        out.rewritten += best->column->name;
        copied = end;
        out.items.push_back(make_item(EvidenceKind::alias_mapping,
                                      "\"" + q.substr(begin, end - begin) + "\" refers to column " +
                                          qualified(*best->table, *best->column) + ".",
                                      {ColumnRef{best->table->name, best->column->name}}, "gen_alias_rewrite"));
        i += best->tokens.size();
    }
    out.rewritten += q.substr(copied);
    return out;
}

CompletionResult gen_logical_completion(const FewShotRetriever& retriever, std::string_view question, std::size_t k,
                                        const std::optional<std::string>& db_id) {
    CompletionResult out;
    if (retriever.library().entries.empty()) return out;
    for (auto& s : retriever.retrieve(question, k, db_id)) out.fewshot.push_back(std::move(s.entry));
    const auto& best = out.fewshot.front();
    const auto features = skeleton_features(best.sql_skeleton);
    std::string text = "A similar solved question (\"" + best.raw_question + "\") was answered with ";
    text += features.empty() ? std::string("a single plain query") : join(features, ", then ");
    text += ".";
    const std::string with_skeleton = text + " Its skeleton: " + best.sql_skeleton;
    if (with_skeleton.size() <= kEvidenceTextCap) text = with_skeleton;
    out.items.push_back(make_item(EvidenceKind::logical_completion, std::move(text), {}, "gen_logical_completion"));
    return out;
}

bool is_grounded(const EvidenceItem& item, const SchemaKnowledge& sk) {
    return std::all_of(item.referenced.begin(), item.referenced.end(),
                       [&](const ColumnRef& r) { return sk.find_column(r) != nullptr; });
}

EvidenceBundle build_evidence(std::string_view question, const SchemaKnowledge& sk, const FewShotRetriever* retriever,
                              LlmGateway* gateway, const EvidenceOptions& options) {
    EvidenceBundle b;
    b.question = std::string(question);
    b.routing = route(question, sk, gateway, options.tau);
    const auto& r = b.routing;

    auto guarded = [&](const char* name, auto&& fn) {
        b.generators_run.emplace_back(name);
        try {
            fn();
        } catch (const std::exception& e) {
            b.warnings.push_back(std::string(name) + " failed: " + e.what());
        }
    };
    auto append = [&](std::vector<EvidenceItem> items) {
        for (auto& it : items) b.items.push_back(std::move(it));
    };

    std::string q = b.question;
    if (r.has(EvidenceType::synonym_alias)) {
        guarded("gen_alias_rewrite", [&] {
            auto rw = gen_alias_rewrite(q, sk);
            if (rw.rewritten != q) b.rewritten_question = rw.rewritten;
            q = rw.rewritten;
            append(std::move(rw.items));
        });
    }

    const auto tables = mentioned_tables(q, sk);
    if (tables.size() >= 2) {
        guarded("gen_schema_consistency", [&] {
            auto report = find_join_paths(sk, tables);
            for (const auto& [a, c] : report.unreachable) b.warnings.push_back("no join path between " + a + " and " + c);
            append(gen_schema_consistency(report.paths));
        });
    }
    if (r.has(EvidenceType::enum_value))
        guarded("gen_enum_dictionary", [&] { append(gen_enum_dictionary(q, sk)); });
    if (r.has(EvidenceType::numeric_reasoning))
        guarded("gen_numeric_template", [&] { append(gen_numeric_template(q, sk)); });
    if (r.has(EvidenceType::numeric_reasoning) || r.has(EvidenceType::enum_value) ||
        r.has(EvidenceType::domain_knowledge)) {
        guarded("gen_semantic_constraint", [&] {
            auto res = gen_semantic_constraint(q, sk, gateway);
            append(std::move(res.items));
            for (auto& w : res.warnings) b.warnings.push_back(std::move(w));
        });
    }
    if (r.has(EvidenceType::domain_knowledge)) {
        guarded("domain_provider", [&] {
            NoDomainKnowledge none;
            DomainKnowledgeProvider& provider = options.domain ? *options.domain : none;
            for (auto& note : provider.lookup(q, sk))
                b.items.push_back(make_item(EvidenceKind::domain_note, std::move(note), {}, "domain_provider"));
        });
    }
    const bool have_library = retriever && !retriever->library().entries.empty();
    if (have_library && (r.has(EvidenceType::numeric_reasoning) || r.has(EvidenceType::domain_knowledge))) {
        guarded("gen_logical_completion", [&] {
            auto res = gen_logical_completion(*retriever, b.question, options.k, sk.db_id);
            append(std::move(res.items));
            b.fewshot = std::move(res.fewshot);
        });
    } else if (have_library) {
        for (auto& s : retriever->retrieve(b.question, options.k, sk.db_id)) b.fewshot.push_back(std::move(s.entry));
    }

    std::erase_if(b.items, [&](const EvidenceItem& it) {
        if (is_grounded(it, sk)) return false;
        b.warnings.push_back("dropped ungrounded " + std::string(to_string(it.kind)) + " item");
        return true;
    });
    std::stable_sort(b.items.begin(), b.items.end(),
                     [](const EvidenceItem& x, const EvidenceItem& y) { return x.kind < y.kind; });
    return b;
}

nlohmann::ordered_json bundle_to_json(const EvidenceBundle& bundle) {
    nlohmann::ordered_json j;
    j["question"] = bundle.question;
    j["rewritten_question"] = bundle.rewritten_question ? nlohmann::ordered_json(*bundle.rewritten_question) : nullptr;
    j["items"] = nlohmann::ordered_json::array();
    for (const auto& it : bundle.items) {
        nlohmann::ordered_json item;
        item["kind"] = to_string(it.kind);
        item["text"] = it.text;
        item["referenced"] = nlohmann::ordered_json::array();
        for (const auto& r : it.referenced) item["referenced"].push_back({{"table", r.table}, {"column", r.column}});
        item["provenance"] = it.provenance;
        j["items"].push_back(std::move(item));
    }
    j["fewshot"] = nlohmann::ordered_json::array();
    for (const auto& e : bundle.fewshot) j["fewshot"].push_back(e.id);
    return j;
}

std::vector<std::string> prompt_tables(const EvidenceBundle& bundle, const SchemaKnowledge& sk) {
    std::set<std::string> wanted;
    for (const auto& it : bundle.items)
        for (const auto& r : it.referenced)
            if (const auto* t = sk.find_table(r.table)) wanted.insert(t->name);
    for (auto& t : mentioned_tables(bundle.rewritten_question.value_or(bundle.question), sk)) wanted.insert(t);
    std::vector<std::string> out;
    for (const auto& t : sk.tables)
        if (wanted.empty() || wanted.count(t.name)) out.push_back(t.name);
    return out;
}

std::vector<std::string> evidence_lines(const EvidenceBundle& bundle) {
    std::vector<std::string> out;
    for (const auto& it : bundle.items) out.push_back(it.text);
    return out;
}

std::string assemble_prompt(const PromptInput& input, const SchemaKnowledge& sk) {
    std::string out(prompts::generation_instruction());
    out += "\n\nDatabase schema:\n";
    bool first = true;
    for (const auto& t : sk.tables) {
        if (!input.tables.empty() && std::find(input.tables.begin(), input.tables.end(), t.name) == input.tables.end())
            continue;
        if (!first) out += "\n";
        first = false;
        out += t.simplified_ddl + "\n";
    }
    if (!input.evidence.empty()) {
        out += "\nEvidence:\n";
        for (const auto& line : input.evidence) out += line + "\n";
    }
    if (!input.fewshot_block.empty()) out += "\nSimilar examples:\n" + input.fewshot_block;
    out += "\nQuestion: " + input.question + "\nSQL:";
    return out;
}

std::string extract_sql(const std::string& completion) {
    const std::string lower = to_lower(completion);
    auto fenced = [&](std::size_t open, std::size_t skip) -> std::optional<std::string> {
        const auto body = open + skip;
        const auto close = completion.find("```", body);
        if (close == std::string::npos) return std::nullopt;
        auto sql = trim(std::string_view(completion).substr(body, close - body));
        if (sql.empty()) return std::nullopt;
        return sql;
    };
    if (auto p = lower.find("```sql"); p != std::string::npos)
        if (auto s = fenced(p, 6)) return *s;
    for (auto p = completion.find("```"); p != std::string::npos; p = completion.find("```", p + 3)) {
        auto s = fenced(p, 3);
        if (!s) break;
        const auto head = to_lower(s->substr(0, 6));
        if (head.starts_with("select") || head.starts_with("with")) return *s;
        p = completion.find("```", p + 3);  // skip this block's closing fence
        if (p == std::string::npos) break;
    }

    static const std::regex start(R"(\b(SELECT|select|Select)\b|\bWITH\b)");
    std::smatch m;
    if (!std::regex_search(completion, m, start)) throw ExtractionError("no SQL statement in completion");
    const auto from = static_cast<std::size_t>(m.position(0));
    auto end = completion.find(';', from);
    const auto blank = completion.find("\n\n", from);
    if (end != std::string::npos) ++end;
    if (blank != std::string::npos && (end == std::string::npos || blank < end)) end = blank;
    auto sql = trim(std::string_view(completion).substr(from, end == std::string::npos ? std::string::npos : end - from));
    if (sql.empty()) throw ExtractionError("no SQL statement in completion");
    return sql;
}

std::string generate_sql(LlmGateway& gateway, const std::string& prompt) {
    return extract_sql(gateway.complete(std::string(prompts::generation_system()), prompt));
}

} // namespace ca
