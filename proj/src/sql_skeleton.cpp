// SPDX-License-Identifier: Apache-2.0
#include "ca/sql_skeleton.hpp"

#include <array>
#include <cctype>
#include <optional>

#include "ca/error.hpp"
#include "ca/text.hpp"

namespace ca {
namespace {

constexpr std::array<std::string_view, 74> kKeywords = {
    "ALL",      "AND",       "AS",        "ASC",      "BETWEEN",  "BY",       "CASE",      "CAST",
    "COLLATE",  "CROSS",     "CURRENT",   "DELETE",   "DESC",     "DISTINCT", "ELSE",      "END",
    "ESCAPE",   "EXCEPT",    "EXISTS",    "FALSE",    "FILTER",   "FIRST",    "FOLLOWING", "FROM",
    "FULL",     "GLOB",      "GROUP",     "HAVING",   "IN",       "INNER",    "INSERT",    "INTERSECT",
    "INTO",     "IS",        "ISNULL",    "JOIN",     "LAST",     "LEFT",     "LIKE",      "LIMIT",
    "NATURAL",  "NOT",       "NOTNULL",   "NULL",     "NULLS",    "OFFSET",   "ON",        "OR",
    "ORDER",    "OUTER",     "OVER",      "PARTITION","PRECEDING","RANGE",    "RECURSIVE", "REGEXP",
    "RIGHT",    "ROW",       "ROWS",      "SELECT",   "SET",      "THEN",     "TRUE",      "UNBOUNDED",
    "UNION",    "UPDATE",    "USING",     "VALUES",   "WHEN",     "WHERE",    "WINDOW",    "WITH",
    "MATCH",    "EXCLUDE"};

constexpr std::array<std::string_view, 10> kCastTypes = {"INTEGER", "INT",   "REAL",    "TEXT", "NUMERIC",
                                                         "FLOAT",   "DOUBLE", "DECIMAL", "BLOB", "VARCHAR"};

constexpr std::array<std::string_view, 4> kPlaceholders = {"<tab>", "<col>", "<str>", "<num>"};

bool ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }
bool ident_char(unsigned char c) { return std::isalnum(c) || c == '_' || c == '$' || c >= 0x80; }

std::string read_quoted(std::string_view sql, std::size_t& i, char close) {
    std::string out;
    ++i;
    while (i < sql.size()) {
        if (sql[i] == close) {
            if (close != ']' && i + 1 < sql.size() && sql[i + 1] == close) {
                out += close;
                i += 2;
                continue;
            }
            ++i;
            return out;
        }
        out += sql[i++];
    }
    throw SkeletonError("unterminated quote in SQL");
}

enum class Context { column, table };
enum class Role { keyword, function, table, column, string, number, placeholder, symbol, star };

struct Classified {
    Role role;
    std::string text;  // original text (last identifier part for dotted names)
};

struct Frame {
    Context ctx;
    bool cast = false;
    bool in_list = false;
};

bool is_name(const SqlToken& t) {
    return t.kind == SqlTokenKind::word || t.kind == SqlTokenKind::quoted_identifier ||
           t.kind == SqlTokenKind::placeholder;
}

bool is_word_keyword(const SqlToken& t) {
    return t.kind == SqlTokenKind::word && is_sql_keyword(t.text);
}

bool is_comparison(const std::string& s) {
    return s == "=" || s == "==" || s == "!=" || s == "<>" || s == "<" || s == ">" || s == "<=" || s == ">=";
}

bool keeps_table_context(const std::string& upper) {
    return upper == "AS" || upper == "LEFT" || upper == "RIGHT" || upper == "FULL" || upper == "INNER" ||
           upper == "OUTER" || upper == "CROSS" || upper == "NATURAL" || upper == "JOIN";
}

/// Single pass over the tokens, tracking clause context and parentheses.
class Classifier {
public:
    explicit Classifier(std::vector<SqlToken> tokens) : toks_(std::move(tokens)) {}

    std::vector<Classified> run(SqlReferences* refs) {
        std::vector<Classified> out;
        std::vector<Frame> stack;
        Frame cur{Context::column};
        for (std::size_t i = 0; i < toks_.size(); ++i) {
            const auto& t = toks_[i];
            const SqlToken* next = i + 1 < toks_.size() ? &toks_[i + 1] : nullptr;

            if (t.kind == SqlTokenKind::symbol) {
                if (t.text == "(") {
                    stack.push_back(cur);
                    Frame inner{Context::column};
                    const bool prev_cast = !out.empty() && out.back().role == Role::keyword && out.back().text == "CAST";
                    const bool prev_in = !out.empty() && out.back().role == Role::keyword && out.back().text == "IN";
                    const bool subquery = next && next->kind == SqlTokenKind::word &&
                                          (to_upper(next->text) == "SELECT" || to_upper(next->text) == "WITH" ||
                                           to_upper(next->text) == "VALUES");
                    if (cur.ctx == Context::table && !subquery && !(out.size() && out.back().role == Role::function))
                        inner.ctx = Context::table;
                    inner.cast = prev_cast;
                    inner.in_list = prev_in && !subquery;
                    cur = inner;
                } else if (t.text == ")") {
                    if (!stack.empty()) {
                        cur = stack.back();
                        stack.pop_back();
                    }
                }
                out.push_back({Role::symbol, t.text});
                continue;
            }
            if (t.kind == SqlTokenKind::string) {
                out.push_back({Role::string, t.text});
                continue;
            }
            if (t.kind == SqlTokenKind::number) {
                out.push_back({Role::number, t.text});
                continue;
            }

            // Words, quoted identifiers and placeholders.
            if (t.kind == SqlTokenKind::word) {
                const auto upper = to_upper(t.text);
                if (cur.cast && !out.empty() && out.back().role == Role::keyword && out.back().text == "AS" &&
                    is_cast_type(upper)) {
                    out.push_back({Role::keyword, upper});
                    continue;
                }
                if (is_sql_keyword(upper)) {
                    out.push_back({Role::keyword, upper});
                    if (upper == "FROM" || upper == "JOIN" || upper == "UPDATE" || upper == "INTO") {
                        cur.ctx = Context::table;
                    } else if (!(cur.ctx == Context::table && keeps_table_context(upper))) {
                        cur.ctx = Context::column;
                    }
                    continue;
                }
                if (next && next->kind == SqlTokenKind::symbol && next->text == "(") {
                    const bool after_into = !out.empty() && out.back().role == Role::keyword &&
                                            (out.back().text == "INTO" || out.back().text == "UPDATE");
                    if (!after_into) {
                        out.push_back({Role::function, upper});
                        continue;
                    }
                }
            }

            // Dotted name: a.b.c or a.*
            std::size_t j = i;
            std::string last = t.text;
            bool star = false;
            while (j + 2 < toks_.size() && toks_[j + 1].kind == SqlTokenKind::symbol && toks_[j + 1].text == "." &&
                   (is_name(toks_[j + 2]) || (toks_[j + 2].kind == SqlTokenKind::symbol && toks_[j + 2].text == "*"))) {
                if (toks_[j + 2].kind == SqlTokenKind::symbol) {
                    star = true;
                    j += 2;
                    break;
                }
                last = toks_[j + 2].text;
                j += 2;
            }
            const bool dotted = j != i;

            if (t.kind == SqlTokenKind::placeholder && !dotted) {
                out.push_back({Role::placeholder, t.text});
                continue;
            }
            if (star) {
                out.push_back({Role::star, t.text});
                i = j;
                continue;
            }
            if (!dotted && t.kind == SqlTokenKind::quoted_identifier && !out.empty() && cur.ctx == Context::column) {
                const auto& prev = out.back();
                const bool after_cmp = prev.role == Role::symbol && is_comparison(prev.text);
                const bool after_like = prev.role == Role::keyword && (prev.text == "LIKE" || prev.text == "GLOB");
                const bool in_list = cur.in_list && prev.role == Role::symbol && (prev.text == "(" || prev.text == ",");
                if (after_cmp || after_like || in_list) {
                    out.push_back({Role::string, t.text});
                    continue;
                }
            }

            const bool is_placeholder = t.kind == SqlTokenKind::placeholder;
            if (cur.ctx == Context::table) {
                if (refs && !is_placeholder) record_table_name(out, t, last, dotted, *refs, i);
                out.push_back({Role::table, last});
            } else {
                if (refs && !is_placeholder) record_column_name(out, last, *refs, i);
                out.push_back({Role::column, last});
            }
            i = j;
        }
        return out;
    }

private:
    static bool is_cast_type(const std::string& upper) {
        for (auto k : kCastTypes)
            if (k == upper) return true;
        return false;
    }

    bool followed_by_as_paren(std::size_t i) const {
        return i + 2 < toks_.size() && is_word_keyword(toks_[i + 1]) && to_upper(toks_[i + 1].text) == "AS" &&
               toks_[i + 2].kind == SqlTokenKind::symbol && toks_[i + 2].text == "(";
    }

    void record_table_name(const std::vector<Classified>& out, const SqlToken& t, const std::string& last, bool dotted,
                           SqlReferences& refs, std::size_t i) const {
        const auto name = to_lower(dotted ? last : t.text);
        if (!out.empty()) {
            const auto& prev = out.back();
            const bool after_as = prev.role == Role::keyword && prev.text == "AS";
            const bool after_name = prev.role == Role::table || (prev.role == Role::symbol && prev.text == ")");
            if (after_as || after_name) {
                refs.table_aliases.insert(name);
                return;
            }
        }
        if (followed_by_as_paren(i)) {
            refs.ctes.insert(name);
            return;
        }
        refs.tables.insert(name);
    }

    void record_column_name(const std::vector<Classified>& out, const std::string& last, SqlReferences& refs,
                            std::size_t i) const {
        const auto name = to_lower(last);
        if (followed_by_as_paren(i)) {
            refs.ctes.insert(name);
            return;
        }
        if (!out.empty()) {
            const auto& prev = out.back();
            const bool after_as = prev.role == Role::keyword && prev.text == "AS";
            const bool after_expr = prev.role == Role::column || prev.role == Role::number || prev.role == Role::string ||
                                    (prev.role == Role::symbol && prev.text == ")");
            if (after_as || after_expr) {
                refs.column_aliases.insert(name);
                return;
            }
        }
        refs.columns.insert(name);
    }

    std::vector<SqlToken> toks_;
};

} // namespace

std::vector<SqlToken> tokenize_sql(std::string_view sql) {
    std::vector<SqlToken> out;
    std::size_t i = 0;
    while (i < sql.size()) {
        const auto c = static_cast<unsigned char>(sql[i]);
        if (std::isspace(c)) {
            ++i;
            continue;
        }
        if (sql.compare(i, 2, "--") == 0) {
            while (i < sql.size() && sql[i] != '\n') ++i;
            continue;
        }
        if (sql.compare(i, 2, "/*") == 0) {
            const auto end = sql.find("*/", i + 2);
            i = end == std::string_view::npos ? sql.size() : end + 2;
            continue;
        }
        if (c == '\'') {
            out.push_back({SqlTokenKind::string, read_quoted(sql, i, '\'')});
            continue;
        }
        if (c == '"') {
            out.push_back({SqlTokenKind::quoted_identifier, read_quoted(sql, i, '"')});
            continue;
        }
        if (c == '`') {
            out.push_back({SqlTokenKind::quoted_identifier, read_quoted(sql, i, '`')});
            continue;
        }
        if (c == '[') {
            out.push_back({SqlTokenKind::quoted_identifier, read_quoted(sql, i, ']')});
            continue;
        }
        if (c == '<') {
            bool matched = false;
            for (auto p : kPlaceholders) {
                if (sql.compare(i, p.size(), p) == 0) {
                    out.push_back({SqlTokenKind::placeholder, std::string(p)});
                    i += p.size();
                    matched = true;
                    break;
                }
            }
            if (matched) continue;
        }
        if (std::isdigit(c) || (c == '.' && i + 1 < sql.size() && std::isdigit(static_cast<unsigned char>(sql[i + 1])))) {
            const std::size_t start = i;
            if (c == '0' && i + 1 < sql.size() && (sql[i + 1] == 'x' || sql[i + 1] == 'X')) {
                i += 2;
                while (i < sql.size() && std::isxdigit(static_cast<unsigned char>(sql[i]))) ++i;
            } else {
                while (i < sql.size() && std::isdigit(static_cast<unsigned char>(sql[i]))) ++i;
                if (i < sql.size() && sql[i] == '.') {
                    ++i;
                    while (i < sql.size() && std::isdigit(static_cast<unsigned char>(sql[i]))) ++i;
                }
                if (i < sql.size() && (sql[i] == 'e' || sql[i] == 'E')) {
                    std::size_t k = i + 1;
                    if (k < sql.size() && (sql[k] == '+' || sql[k] == '-')) ++k;
                    if (k < sql.size() && std::isdigit(static_cast<unsigned char>(sql[k]))) {
                        i = k;
                        while (i < sql.size() && std::isdigit(static_cast<unsigned char>(sql[i]))) ++i;
                    }
                }
            }
            out.push_back({SqlTokenKind::number, std::string(sql.substr(start, i - start))});
            continue;
        }
        if (ident_start(c)) {
            const std::size_t start = i;
            while (i < sql.size() && ident_char(static_cast<unsigned char>(sql[i]))) ++i;
            out.push_back({SqlTokenKind::word, std::string(sql.substr(start, i - start))});
            continue;
        }
        static constexpr std::array<std::string_view, 9> two = {"<>", "<=", ">=", "!=", "==", "||", "<<", ">>", "->"};
        bool done = false;
        for (auto op : two) {
            if (sql.compare(i, 2, op) == 0) {
                out.push_back({SqlTokenKind::symbol, std::string(op)});
                i += 2;
                done = true;
                break;
            }
        }
        if (done) continue;
        out.push_back({SqlTokenKind::symbol, std::string(1, sql[i])});
        ++i;
    }
    return out;
}

bool is_sql_keyword(std::string_view word) {
    const auto upper = to_upper(word);
    for (auto k : kKeywords)
        if (k == upper) return true;
    return false;
}

std::string skeletonize_sql(std::string_view sql) {
    Classifier classifier(tokenize_sql(sql));
    const auto classified = classifier.run(nullptr);
    std::string out;
    for (const auto& c : classified) {
        if (!out.empty()) out += ' ';
        switch (c.role) {
        case Role::keyword:
        case Role::function:
        case Role::placeholder:
        case Role::symbol: out += c.text; break;
        case Role::table: out += "<tab>"; break;
        case Role::column: out += "<col>"; break;
        case Role::string: out += "<str>"; break;
        case Role::number: out += "<num>"; break;
        case Role::star: out += "<tab> . *"; break;
        }
    }
    return out;
}

SqlReferences referenced_identifiers(std::string_view sql) {
    SqlReferences refs;
    Classifier classifier(tokenize_sql(sql));
    classifier.run(&refs);
    return refs;
}

} // namespace ca
