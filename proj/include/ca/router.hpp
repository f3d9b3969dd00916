// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "ca/schema_knowledge.hpp"

namespace ca {

class LlmGateway;

enum class EvidenceType { numeric_reasoning, domain_knowledge, synonym_alias, enum_value };

inline constexpr std::array<EvidenceType, 4> kEvidenceTypes{EvidenceType::numeric_reasoning,
                                                           EvidenceType::domain_knowledge,
                                                           EvidenceType::synonym_alias, EvidenceType::enum_value};

inline constexpr double kDefaultRoutingThreshold = 0.5;

std::string_view to_string(EvidenceType t);
/// Key used for the type in the model's JSON reply.
std::string_view reply_key(EvidenceType t);

enum class RoutingSource { llm, heuristic };
std::string_view to_string(RoutingSource s);

struct RoutingDecision {
    std::map<EvidenceType, double> confidences;  // always holds all four types
    double threshold = kDefaultRoutingThreshold;
    std::set<EvidenceType> labels;
    RoutingSource source = RoutingSource::heuristic;

    bool has(EvidenceType t) const { return labels.count(t) > 0; }
};

/// Types whose confidence is at least tau.
std::set<EvidenceType> apply_threshold(const std::map<EvidenceType, double>& confidences, double tau);

/// Clamps scores into [0,1], fills absent types with 0 and applies tau.
RoutingDecision make_decision(std::map<EvidenceType, double> confidences, double tau, RoutingSource source);

/// Confidences from a model reply, or nullopt when the reply carries no
/// usable JSON object.
std::optional<std::map<EvidenceType, double>> parse_routing_reply(const std::string& reply);

std::string routing_user_prompt(std::string_view question, const SchemaKnowledge& sk);

/// Rule-based scores in {0, 1}; a pure function of its inputs.
RoutingDecision heuristic_route(std::string_view question, const SchemaKnowledge& sk,
                                double tau = kDefaultRoutingThreshold);

/// Model routing with the heuristic as fallback for a null gateway, a
/// transport failure or an unparseable reply. Throws InvariantError only
/// when tau lies outside [0, 1].
RoutingDecision route(std::string_view question, const SchemaKnowledge& sk, LlmGateway* gateway,
                      double tau = kDefaultRoutingThreshold);

} // namespace ca
