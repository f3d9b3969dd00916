// SPDX-License-Identifier: Apache-2.0
#include "ca/prompts.hpp"

namespace ca::prompts {

std::string_view routing_system() {
    return "You decide which kinds of supporting knowledge a text-to-SQL question needs.\n"
           "Kinds:\n"
           "numeric: arithmetic or aggregation such as ratios, percentages, averages, rankings.\n"
           "domain: facts or definitions not visible in the schema.\n"
           "synonym: the question names columns with words other than the column names.\n"
           "enum: the question refers to coded values whose meaning must be looked up.\n"
           "Give each kind a confidence between 0 and 1. Reply with exactly one fenced JSON object:\n"
           "```json\n"
           "{\"numeric\": 0.0, \"domain\": 0.0, \"synonym\": 0.0, \"enum\": 0.0}\n"
           "```";
}

std::string_view constraint_system() {
    return "Rewrite the structured constraint as one or two plain sentences for an analyst writing SQL. "
           "Keep the column name and every number exactly as given. Reply with the sentences only.";
}

std::string_view generation_system() {
    return "You are an expert SQLite developer. Write one SQLite query that answers the question. "
           "Reply with the query in a ```sql fenced block and nothing else.";
}

std::string_view generation_instruction() {
    return "Translate the question into a single SQLite query over the database below.";
}

} // namespace ca::prompts
