#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "kgplan/actions.hpp"
#include "kgplan/config.hpp"
#include "kgplan/core.hpp"
#include "kgplan/embedding.hpp"
#include "kgplan/knowledge.hpp"
#include "kgplan/llm.hpp"

namespace kgplan::urp {

/// Reasoning plus the executable command list produced for one request.
struct StructuredRequest {
    std::string reasoning;
    std::vector<std::string> commands;  // canonical action serializations

    nlohmann::json to_json() const {
        return {{"reasoning", reasoning}, {"commands", commands}};
    }
};

/// Everything the system message is assembled from. Relation lists must
/// already be theta-filtered.
struct ContextBundle {
    std::string robot_capabilities;
    std::string properties_document;  // P_obj as serialized JSON
    std::vector<Triple> keyword_relations;
    std::vector<Triple> object_relations;
    std::vector<std::string> examples;
};

// ── Keyword extraction ──────────────────────────────────────────

inline std::string keyword_system_message(size_t max_keywords) {
    return "You extract the key concepts from a user request to a robot assistant. List at most " +
           std::to_string(max_keywords) +
           " keywords or short phrases, comma-separated, lowercase. Reply with only the keywords.";
}

/// LLM-backed keyword extraction: 1..max lowercase keywords, deduplicated,
/// order-preserving. An unusable reply falls back to the whole request as
/// a single keyword.
inline std::vector<std::string> extract_keywords(const std::string& request,
                                                 llm::ChatBackend& backend, size_t max_keywords = 5,
                                                 llm::UsageLog* usage = nullptr) {
    if (trim(request).empty()) throw InvalidArgumentError("extract_keywords: empty request");
    llm::CompletionRequest req{{keyword_system_message(max_keywords), request}, 0.0, 1};
    std::string reply = backend.complete(req).at(0);
    if (usage) usage->add({"urp.keywords", req.context.concatenated().size(), reply.size(), 1});

    std::vector<std::string> keywords;
    std::set<std::string> seen;
    for (const std::string& chunk : split(reply, '\n')) {
        for (const std::string& piece : split(chunk, ',')) {
            std::string kw = to_lower(trim(piece));
            while (!kw.empty() && (kw.front() == '-' || kw.front() == '*' || kw.front() == '"' ||
                                   kw.front() == '\''))
                kw = trim(kw.substr(1));
            while (!kw.empty() && (kw.back() == '"' || kw.back() == '\'' || kw.back() == '.'))
                kw = trim(kw.substr(0, kw.size() - 1));
            if (kw.empty() || seen.count(kw)) continue;
            seen.insert(kw);
            keywords.push_back(kw);
            if (keywords.size() >= max_keywords) break;
        }
        if (keywords.size() >= max_keywords) break;
    }
    if (keywords.empty()) {
        log::warn("urp: no keywords extracted, falling back to the whole request");
        keywords.push_back(to_lower(trim(request)));
    }
    return keywords;
}

// ── Relation gathering ──────────────────────────────────────────

/// Relations for each keyword, filtered against the full user request.
/// Knowledge-unavailable propagates only when every keyword fails.
inline std::vector<Triple> gather_keyword_relations(const std::vector<std::string>& keywords,
                                                    const std::string& request,
                                                    knowledge::KnowledgeBase& kb,
                                                    embedding::Embedder& embedder,
                                                    double theta = 0.75) {
    if (keywords.empty())
        throw InvalidArgumentError("gather_keyword_relations: keywords must be non-empty");
    embedding::FilterConfig filter{theta, {request}};
    std::vector<Triple> gathered;
    size_t failures = 0;
    std::string last_error;
    for (const std::string& kw : keywords) {
        try {
            auto triples = kb.fetch_relations(normalize_term(kw));
            for (Triple& t : embedding::filter_triples(embedder, triples, filter))
                gathered.push_back(std::move(t));
        } catch (const KnowledgeUnavailableError& e) {
            ++failures;
            last_error = e.what();
            log::warn("urp: knowledge unavailable for keyword '" + kw + "'");
        }
    }
    if (failures == keywords.size())
        throw KnowledgeUnavailableError("all keywords failed: " + last_error);
    return dedup_triples(gathered);
}

/// Relations for each detected object, filtered against the keyword set
/// (best match over keywords). Objects without coverage contribute nothing.
inline std::vector<Triple> gather_object_relations(const std::vector<ConceptKey>& objects,
                                                   const std::vector<std::string>& keywords,
                                                   knowledge::KnowledgeBase& kb,
                                                   embedding::Embedder& embedder,
                                                   double theta = 0.75) {
    if (keywords.empty()) return {};
    embedding::FilterConfig filter{theta, keywords};
    std::vector<Triple> gathered;
    for (const ConceptKey& object : objects) {
        try {
            auto triples = kb.fetch_relations(object);
            for (Triple& t : embedding::filter_triples(embedder, triples, filter))
                gathered.push_back(std::move(t));
        } catch (const KnowledgeUnavailableError&) {
            log::warn("urp: knowledge unavailable for object '" + object + "'");
        }
    }
    return dedup_triples(gathered);
}

// ── System message ──────────────────────────────────────────────

inline std::string default_capabilities(const ActionVocabulary& vocab) {
    std::string actions;
    for (const auto& [name, arity] : vocab) {
        if (!actions.empty()) actions += "; ";
        actions += name + "(";
        for (size_t i = 0; i < arity; ++i) {
            if (i) actions += ", ";
            actions += "arg" + std::to_string(i + 1);
        }
        actions += ")";
    }
    return "The robot is a tabletop manipulator. It can execute exactly these actions: " +
           actions + ". Commands may reference only detected objects and declared zones.";
}

inline std::string render_relation_lines(const std::vector<Triple>& relations) {
    if (relations.empty()) return "(none)\n";
    std::string out;
    for (const Triple& t : relations) out += "- " + t.render() + "\n";
    return out;
}

/// Deterministic section concatenation: capabilities, object properties,
/// request knowledge, object knowledge, examples.
inline std::string build_system_message(const ContextBundle& bundle) {
    if (bundle.examples.empty())
        throw InvalidArgumentError("context bundle needs at least one output example");
    std::string msg;
    msg += "## Robot Capabilities\n" + bundle.robot_capabilities + "\n\n";
    msg += "## Object Properties\n" + bundle.properties_document + "\n\n";
    msg += "## Request Knowledge\n" + render_relation_lines(bundle.keyword_relations) + "\n";
    msg += "## Object Knowledge\n" + render_relation_lines(bundle.object_relations) + "\n";
    msg += "## Examples\n";
    for (size_t i = 0; i < bundle.examples.size(); ++i) {
        if (i) msg += "\n";
        msg += bundle.examples[i] + "\n";
    }
    return msg;
}

inline std::string default_exemplar() {
    return "Request: Bring me an apple.\n"
           "Reasoning: The user wants the apple delivered; it is in the scene, so one transfer "
           "to the user fulfills the request.\n"
           "Commands:\n"
           "1. pick_and_place(apple, user)";
}

// ── Interpretation ──────────────────────────────────────────────

/// Parses the model reply into reasoning plus commands and validates every
/// command argument against the detected objects and zones.
inline StructuredRequest parse_reply(const std::string& reply,
                                     const std::set<ConceptKey>& known_keys,
                                     const ActionVocabulary& vocab) {
    StructuredRequest out;
    bool in_commands = false;
    std::vector<std::string> offenders;
    for (const std::string& raw : split(reply, '\n')) {
        std::string line = trim(raw);
        if (line.empty()) continue;
        std::string lower = to_lower(line);
        if (lower.rfind("reasoning:", 0) == 0) {
            out.reasoning = trim(line.substr(10));
            continue;
        }
        if (lower.rfind("commands:", 0) == 0) {
            in_commands = true;
            continue;
        }
        if (!in_commands) {
            if (!out.reasoning.empty()) out.reasoning += " ";
            out.reasoning += line;
            continue;
        }
        auto action = parse_action(line, vocab);
        if (!action)
            throw StructuredParseError("unparseable command line: " + line);
        for (const ConceptKey& arg : action->args)
            if (!known_keys.count(arg)) offenders.push_back(arg);
        out.commands.push_back(action->canonical());
    }
    if (!offenders.empty()) {
        std::string what = "commands reference undetected objects:";
        for (const std::string& o : offenders) what += " " + o;
        throw HallucinationError(what, offenders);
    }
    if (out.commands.empty())
        throw StructuredParseError("reply contains no commands section");
    return out;
}

inline StructuredRequest interpret(const std::string& request, const ContextBundle& bundle,
                                   llm::ChatBackend& backend,
                                   const std::set<ConceptKey>& known_keys,
                                   const ActionVocabulary& vocab = default_vocabulary(),
                                   llm::UsageLog* usage = nullptr) {
    llm::CompletionRequest req{{build_system_message(bundle), request}, 0.0, 1};
    std::string reply = backend.complete(req).at(0);
    if (usage) usage->add({"urp.interpret", req.context.concatenated().size(), reply.size(), 1});
    return parse_reply(reply, known_keys, vocab);
}

}  // namespace kgplan::urp
