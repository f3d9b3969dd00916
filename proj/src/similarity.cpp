// SPDX-License-Identifier: Apache-2.0
#include "ca/similarity.hpp"

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "ca/text.hpp"

namespace ca {

double jaro(std::string_view a, std::string_view b) {
    if (a.empty() && b.empty()) return 1.0;
    if (a.empty() || b.empty()) return 0.0;
    const std::size_t window = std::max<std::size_t>(std::max(a.size(), b.size()) / 2, 1) - 1;
    std::vector<bool> a_hit(a.size()), b_hit(b.size());
    std::size_t matches = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const std::size_t lo = i > window ? i - window : 0;
        const std::size_t hi = std::min(i + window + 1, b.size());
        for (std::size_t j = lo; j < hi; ++j) {
            if (b_hit[j] || a[i] != b[j]) continue;
            a_hit[i] = b_hit[j] = true;
            ++matches;
            break;
        }
    }
    if (matches == 0) return 0.0;
    std::size_t half_transpositions = 0;
    for (std::size_t i = 0, j = 0; i < a.size(); ++i) {
        if (!a_hit[i]) continue;
        while (!b_hit[j]) ++j;
        if (a[i] != b[j]) ++half_transpositions;
        ++j;
    }
    const double m = static_cast<double>(matches);
    const double t = static_cast<double>(half_transpositions / 2);
    return (m / static_cast<double>(a.size()) + m / static_cast<double>(b.size()) + (m - t) / m) / 3.0;
}

double jaro_winkler(std::string_view a, std::string_view b) {
    const double j = jaro(a, b);
    if (j <= 0.7) return j;
    std::size_t prefix = 0;
    while (prefix < 4 && prefix < a.size() && prefix < b.size() && a[prefix] == b[prefix]) ++prefix;
    return j + static_cast<double>(prefix) * 0.1 * (1.0 - j);
}

double name_similarity(std::string_view a, std::string_view b) {
    const auto ta = identifier_tokens(a);
    const auto tb = identifier_tokens(b);
    const double whole = jaro_winkler(join(ta, "_"), join(tb, "_"));
    const std::set<std::string> sa(ta.begin(), ta.end());
    const std::set<std::string> sb(tb.begin(), tb.end());
    std::size_t common = 0;
    for (const auto& t : sa) common += sb.count(t);
    const std::size_t unions = sa.size() + sb.size() - common;
    const double overlap = unions == 0 ? 0.0 : static_cast<double>(common) / static_cast<double>(unions);
    return std::max(whole, overlap);
}

} // namespace ca
