// SPDX-License-Identifier: Apache-2.0
// Deliberately naive reference implementations used to check the library.
#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ca/schema_knowledge.hpp"
#include "ca/value.hpp"

namespace ca::testing {

struct BruteStats {
    double min = 0, max = 0, mean = 0, variance = 0, q25 = 0, q50 = 0, q75 = 0;
};

/// Two-pass long-double moments; lower nearest-rank quantiles.
BruteStats brute_stats(std::vector<double> xs);

/// Enumeration rule restated: at most 20 distinct non-null values and the 10
/// most frequent cover at least 95% of the non-null values.
bool brute_is_enumeration(const std::vector<Value>& samples);

/// Row-set equality computed by pairwise containment with numeric values
/// compared as long doubles.
bool brute_rows_equal(const Rows& a, const Rows& b);

struct BrutePath {
    std::vector<std::string> tables;
    std::vector<std::size_t> edges;  // indexes into sk.fk_edges
};

/// Enumerates every simple path between `from` and `to` and keeps the best by
/// (length, inferred edges, table sequence, edge endpoints).
std::optional<BrutePath> brute_join_path(const SchemaKnowledge& sk, const std::string& from, const std::string& to);

} // namespace ca::testing
