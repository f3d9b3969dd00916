// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string_view>

namespace ca {

double jaro(std::string_view a, std::string_view b);

/// Jaro-Winkler with prefix scale 0.1 over at most 4 shared leading chars;
/// the prefix boost applies only when the Jaro score exceeds 0.7.
double jaro_winkler(std::string_view a, std::string_view b);

/// Identifier similarity used to infer join edges: identifiers are split into
/// lowercase tokens (underscores, camelCase); the score is the larger of
/// Jaro-Winkler over the rejoined tokens and the Jaccard overlap of the
/// token sets.
double name_similarity(std::string_view a, std::string_view b);

} // namespace ca
