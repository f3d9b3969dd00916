// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ca/fewshot.hpp"
#include "ca/router.hpp"
#include "ca/schema_knowledge.hpp"

namespace ca {

class LlmGateway;

// Declaration order is the canonical order of items inside a bundle.
enum class EvidenceKind {
    alias_mapping,
    schema_consistency,
    enum_dictionary,
    numeric_template,
    semantic_constraint,
    domain_note,
    logical_completion,
};

std::string_view to_string(EvidenceKind k);

inline constexpr std::size_t kEvidenceTextCap = 400;

struct EvidenceItem {
    EvidenceKind kind{};
    std::string text;
    std::vector<ColumnRef> referenced;
    std::string provenance;  // name of the producing generator

    bool operator==(const EvidenceItem&) const = default;
};

struct EvidenceBundle {
    std::string question;
    std::optional<std::string> rewritten_question;
    std::vector<EvidenceItem> items;
    std::vector<FewShotEntry> fewshot;
    // Not serialized: diagnostics for callers and tests.
    RoutingDecision routing;
    std::vector<std::string> generators_run;
    std::vector<std::string> warnings;
};

struct JoinPath {
    std::string from_table;
    std::string to_table;
    std::vector<std::string> tables;  // from_table ... to_table
    std::vector<ForeignKeyEdge> edges;  // edges[i] joins tables[i] and tables[i+1]
};

struct JoinPathReport {
    std::vector<JoinPath> paths;
    std::vector<std::pair<std::string, std::string>> unreachable;
};

/// Shortest simple path for every unordered pair of `tables`, each pair
/// oriented from the lexicographically smaller name. Ties go to fewer
/// inferred edges, then the smaller table sequence, then the smaller edge
/// sequence. Throws InvariantError on an unknown table.
JoinPathReport find_join_paths(const SchemaKnowledge& sk, const std::set<std::string>& tables);

/// Tables whose name, a column name, or a column alias occurs in the question.
std::set<std::string> mentioned_tables(std::string_view question, const SchemaKnowledge& sk);

std::vector<EvidenceItem> gen_schema_consistency(const std::vector<JoinPath>& paths);

struct ConstraintResult {
    std::vector<EvidenceItem> items;
    std::vector<std::string> warnings;
};

/// Time and range conditions ("after 2020", "more than 500", "between 3
/// and 5") tied to a column. The model rephrases the structured stub when a
/// gateway is given; otherwise, or on failure, a fixed template is used.
ConstraintResult gen_semantic_constraint(std::string_view question, const SchemaKnowledge& sk, LlmGateway* gateway);

std::vector<EvidenceItem> gen_numeric_template(std::string_view question, const SchemaKnowledge& sk);
std::vector<EvidenceItem> gen_enum_dictionary(std::string_view question, const SchemaKnowledge& sk);

struct AliasRewrite {
    std::string rewritten;
    std::vector<EvidenceItem> items;
};

AliasRewrite gen_alias_rewrite(std::string_view question, const SchemaKnowledge& sk);

struct CompletionResult {
    std::vector<EvidenceItem> items;
    std::vector<FewShotEntry> fewshot;
};

CompletionResult gen_logical_completion(const FewShotRetriever& retriever, std::string_view question, std::size_t k,
                                        const std::optional<std::string>& db_id = std::nullopt);

/// Source of DomainNote items. The default provider returns nothing.
class DomainKnowledgeProvider {
public:
    virtual ~DomainKnowledgeProvider() = default;
    virtual std::vector<std::string> lookup(std::string_view question, const SchemaKnowledge& sk) = 0;
};

class NoDomainKnowledge : public DomainKnowledgeProvider {
public:
    std::vector<std::string> lookup(std::string_view, const SchemaKnowledge&) override { return {}; }
};

struct EvidenceOptions {
    double tau = kDefaultRoutingThreshold;
    std::size_t k = 5;
    DomainKnowledgeProvider* domain = nullptr;
};

/// Routes the question and runs the generators its labels license. Never
/// throws for generator trouble; failures become bundle warnings.
EvidenceBundle build_evidence(std::string_view question, const SchemaKnowledge& sk, const FewShotRetriever* retriever,
                              LlmGateway* gateway, const EvidenceOptions& options = {});

/// True when every referenced (table, column) exists in `sk`.
bool is_grounded(const EvidenceItem& item, const SchemaKnowledge& sk);

nlohmann::ordered_json bundle_to_json(const EvidenceBundle& bundle);

/// Tables whose DDL goes into the prompt: those referenced by items or
/// mentioned in the question, in schema order; all tables when none.
std::vector<std::string> prompt_tables(const EvidenceBundle& bundle, const SchemaKnowledge& sk);

struct PromptInput {
    std::string question;
    std::vector<std::string> tables;      // schema slice; empty means all tables
    std::vector<std::string> evidence;    // one line each; empty omits the section
    std::string fewshot_block;
};

std::vector<std::string> evidence_lines(const EvidenceBundle& bundle);

std::string assemble_prompt(const PromptInput& input, const SchemaKnowledge& sk);

/// First SQL statement in a completion: a ```sql block when present, else
/// the first SELECT/WITH span. Throws ExtractionError when there is none.
std::string extract_sql(const std::string& completion);

std::string generate_sql(LlmGateway& gateway, const std::string& prompt);

} // namespace ca
