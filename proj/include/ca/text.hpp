// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ca {

std::string to_lower(std::string_view s);
std::string to_upper(std::string_view s);
std::string trim(std::string_view s);

/// Lowercased word tokens: maximal runs of ASCII letters/digits (bytes >= 0x80
/// count as letters so accented words stay whole).
std::vector<std::string> word_tokens(std::string_view text);

/// Splits an identifier on underscores, punctuation and camelCase humps:
/// "CustomerID_ref" -> {"customer", "id", "ref"}.
std::vector<std::string> identifier_tokens(std::string_view identifier);

/// Position of `phrase` as a contiguous token run inside `tokens`, or npos.
std::size_t find_phrase(std::span<const std::string> tokens, std::span<const std::string> phrase);

inline bool contains_phrase(std::span<const std::string> tokens, std::span<const std::string> phrase) {
    return find_phrase(tokens, phrase) != static_cast<std::size_t>(-1);
}

bool is_stopword(std::string_view token);

/// True when every token is a stopword (or the list is empty).
bool all_stopwords(std::span<const std::string> tokens);

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

/// Cuts `text` to at most `cap` bytes, preferring the last sentence end
/// ('.' or ';' followed by a space or end of text) inside the window.
std::string truncate_at_sentence(std::string_view text, std::size_t cap);

std::string join(std::span<const std::string> parts, std::string_view sep);

} // namespace ca
