// SPDX-License-Identifier: Apache-2.0
#include "ca/router.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "ca/error.hpp"
#include "ca/llm_gateway.hpp"
#include "ca/prompts.hpp"
#include "ca/text.hpp"

namespace ca {

namespace {

const std::unordered_set<std::string> kArithmeticCues{"ratio", "percentage", "average", "difference", "per",
                                                      "rate",  "total",      "rank",    "top"};

bool phrase_in(std::span<const std::string> tokens, std::string_view phrase) {
    const auto p = word_tokens(phrase);
    if (p.empty() || all_stopwords(p)) return false;
    return contains_phrase(tokens, p);
}

void check_tau(double tau) {
    if (!(tau >= 0.0 && tau <= 1.0)) throw InvariantError("routing threshold must lie in [0, 1]");
}

} // namespace

std::string_view to_string(EvidenceType t) {
    switch (t) {
    case EvidenceType::numeric_reasoning: return "NumericReasoning";
    case EvidenceType::domain_knowledge: return "DomainKnowledge";
    case EvidenceType::synonym_alias: return "SynonymAlias";
    case EvidenceType::enum_value: return "EnumValue";
    }
    return "?";
}

std::string_view reply_key(EvidenceType t) {
    switch (t) {
    case EvidenceType::numeric_reasoning: return "numeric";
    case EvidenceType::domain_knowledge: return "domain";
    case EvidenceType::synonym_alias: return "synonym";
    case EvidenceType::enum_value: return "enum";
    }
    return "?";
}

std::string_view to_string(RoutingSource s) {
    return s == RoutingSource::llm ? "llm" : "heuristic";
}

std::set<EvidenceType> apply_threshold(const std::map<EvidenceType, double>& confidences, double tau) {
    std::set<EvidenceType> labels;
    for (const auto& [t, c] : confidences)
        if (c >= tau) labels.insert(t);
    return labels;
}

RoutingDecision make_decision(std::map<EvidenceType, double> confidences, double tau, RoutingSource source) {
    check_tau(tau);
    RoutingDecision d;
    for (auto t : kEvidenceTypes) {
        auto it = confidences.find(t);
        double c = it == confidences.end() || std::isnan(it->second) ? 0.0 : it->second;
        d.confidences[t] = std::clamp(c, 0.0, 1.0);
    }
    d.threshold = tau;
    d.labels = apply_threshold(d.confidences, tau);
    d.source = source;
    return d;
}

std::optional<std::map<EvidenceType, double>> parse_routing_reply(const std::string& reply) {
    const auto j = extract_fenced_json(reply);
    if (!j || !j->is_object()) return std::nullopt;
    std::map<EvidenceType, double> out;
    for (auto t : kEvidenceTypes) {
        auto it = j->find(std::string(reply_key(t)));
        if (it == j->end() || it->is_null()) continue;
        if (!it->is_number()) return std::nullopt;
        out[t] = it->get<double>();
    }
    return out;
}

std::string routing_user_prompt(std::string_view question, const SchemaKnowledge& sk) {
    std::string out = "Question: " + std::string(question) + "\n\nSchema:\n";
    for (const auto& t : sk.tables) {
        out += t.name + ":";
        for (std::size_t i = 0; i < t.columns.size(); ++i) {
            const auto& c = t.columns[i];
            out += (i ? ", " : " ") + c.name;
            if (c.profile.is_enumeration) out += " (enumeration)";
        }
        out += "\n";
    }
    return out;
}

RoutingDecision heuristic_route(std::string_view question, const SchemaKnowledge& sk, double tau) {
    const auto tokens = word_tokens(question);

    bool numeric = std::any_of(tokens.begin(), tokens.end(), [](const auto& t) { return kArithmeticCues.count(t) > 0; });

    bool enumv = false;
    bool synonym = false;
    std::unordered_set<std::string> vocabulary;
    std::set<std::string> column_names;
    for (const auto& t : sk.tables) {
        for (const auto& c : t.columns) {
            column_names.insert(join(identifier_tokens(c.name), " "));
            vocabulary.insert(to_lower(c.name));
            for (auto& tok : identifier_tokens(c.name)) vocabulary.insert(tok);
            for (const auto& a : c.semantics.aliases)
                for (auto& tok : word_tokens(a)) vocabulary.insert(tok);
            for (const auto& v : c.profile.sample_values) {
                if (is_null(v)) continue;
                for (auto& tok : word_tokens(to_text(v))) vocabulary.insert(tok);
            }
        }
    }
    for (const auto& t : sk.tables) {
        for (const auto& c : t.columns) {
            for (const auto& [key, label] : c.semantics.enum_glossary)
                if (!enumv && phrase_in(tokens, label)) enumv = true;
            if (c.profile.is_enumeration)
                for (const auto& vc : c.profile.top_values)
                    if (!enumv && !is_null(vc.value) && phrase_in(tokens, to_text(vc.value))) enumv = true;
            for (const auto& a : c.semantics.aliases) {
                if (synonym || !phrase_in(tokens, a)) continue;
                if (!column_names.count(join(word_tokens(a), " "))) synonym = true;
            }
        }
    }

    bool any_grounded = false;
    for (const auto& tok : tokens) {
        if (is_stopword(tok)) continue;
        if (vocabulary.count(tok)) {
            any_grounded = true;
            break;
        }
    }

    std::map<EvidenceType, double> conf{
        {EvidenceType::numeric_reasoning, numeric ? 1.0 : 0.0},
        {EvidenceType::domain_knowledge, any_grounded ? 0.0 : 1.0},
        {EvidenceType::synonym_alias, synonym ? 1.0 : 0.0},
        {EvidenceType::enum_value, enumv ? 1.0 : 0.0},
    };
    return make_decision(std::move(conf), tau, RoutingSource::heuristic);
}

RoutingDecision route(std::string_view question, const SchemaKnowledge& sk, LlmGateway* gateway, double tau) {
    check_tau(tau);
    if (!gateway) return heuristic_route(question, sk, tau);
    std::string reply;
    try {
        reply = gateway->complete(std::string(prompts::routing_system()), routing_user_prompt(question, sk));
    } catch (const std::exception&) {
        return heuristic_route(question, sk, tau);
    }
    auto parsed = parse_routing_reply(reply);
    if (!parsed) return heuristic_route(question, sk, tau);
    return make_decision(std::move(*parsed), tau, RoutingSource::llm);
}

} // namespace ca
