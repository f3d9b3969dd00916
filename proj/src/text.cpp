// SPDX-License-Identifier: Apache-2.0
#include "ca/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace ca {
namespace {

bool is_word_byte(unsigned char c) {
    return std::isalnum(c) || c >= 0x80;
}

constexpr std::array<std::string_view, 58> kStopwords = {
    "a",     "about", "all",   "an",    "and",   "are",   "as",    "at",    "be",   "by",
    "can",   "did",   "do",    "does",  "each",  "for",   "from",  "give",  "has",  "have",
    "how",   "i",     "in",    "is",    "it",    "its",   "list",  "many",  "me",   "much",
    "name",  "of",    "on",    "or",    "please","s",     "show",  "that",  "the",  "their",
    "them",  "there", "these", "they",  "this",  "to",    "was",   "were",  "what", "when",
    "where", "which", "who",   "whose", "with",  "vs",    "versus","among"};

} // namespace

std::string to_lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string to_upper(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n\f\v");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n\f\v");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> word_tokens(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (is_word_byte(c)) {
            cur += static_cast<char>(std::tolower(c));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::vector<std::string> identifier_tokens(std::string_view identifier) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) out.push_back(to_lower(cur));
        cur.clear();
    };
    for (std::size_t i = 0; i < identifier.size(); ++i) {
        const auto c = static_cast<unsigned char>(identifier[i]);
        if (!is_word_byte(c)) {
            flush();
            continue;
        }
        if (!cur.empty() && std::isupper(c)) {
            const auto prev = static_cast<unsigned char>(cur.back());
            const bool next_lower = i + 1 < identifier.size() &&
                                    std::islower(static_cast<unsigned char>(identifier[i + 1]));
            // "fooBar" splits before B; "HTTPServer" splits before S.
            if (std::islower(prev) || std::isdigit(prev) || (std::isupper(prev) && next_lower)) flush();
        }
        cur += static_cast<char>(c);
    }
    flush();
    return out;
}

std::size_t find_phrase(std::span<const std::string> tokens, std::span<const std::string> phrase) {
    if (phrase.empty() || phrase.size() > tokens.size()) return static_cast<std::size_t>(-1);
    auto it = std::search(tokens.begin(), tokens.end(), phrase.begin(), phrase.end());
    if (it == tokens.end()) return static_cast<std::size_t>(-1);
    return static_cast<std::size_t>(it - tokens.begin());
}

bool is_stopword(std::string_view token) {
    return std::find(kStopwords.begin(), kStopwords.end(), token) != kStopwords.end();
}

bool all_stopwords(std::span<const std::string> tokens) {
    return std::all_of(tokens.begin(), tokens.end(), [](const std::string& t) { return is_stopword(t); });
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xF];
        v >>= 4;
    }
    return out;
}

std::string truncate_at_sentence(std::string_view text, std::size_t cap) {
    if (text.size() <= cap) return std::string(text);
    std::size_t cut = std::string_view::npos;
    for (std::size_t i = 0; i < cap; ++i) {
        if ((text[i] == '.' || text[i] == ';') && (i + 1 == text.size() || text[i + 1] == ' ')) cut = i + 1;
    }
    if (cut == std::string_view::npos) return std::string(text.substr(0, cap));
    return std::string(text.substr(0, cut));
}

std::string join(std::span<const std::string> parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

} // namespace ca
