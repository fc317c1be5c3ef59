#pragma once

#include <map>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "kgplan/core.hpp"

namespace kgplan {

/// Action vocabulary: name -> arity. Defaults cover the tabletop domain;
/// richer environments extend it through configuration.
using ActionVocabulary = std::map<std::string, size_t>;

inline ActionVocabulary default_vocabulary() {
    return {{"pick_and_place", 2}, {"done", 0}};
}

struct Action {
    std::string kind;
    std::vector<ConceptKey> args;

    bool is_done() const { return kind == "done"; }

    /// Canonical form "kind(arg1, arg2)"; also the deterministic tie-break
    /// order in action selection.
    std::string canonical() const {
        std::string out = kind + "(";
        for (size_t i = 0; i < args.size(); ++i) {
            if (i) out += ", ";
            out += args[i];
        }
        out += ")";
        return out;
    }

    bool operator==(const Action& o) const { return kind == o.kind && args == o.args; }
    bool operator<(const Action& o) const { return canonical() < o.canonical(); }
};

inline Action make_done() { return Action{"done", {}}; }

/// Parses one command of the form `action_name(arg1[, arg2])`.
/// Whitespace-insensitive; arguments are normalized to concept keys; an
/// optional leading enumeration ("2." or "-") is tolerated. Returns
/// nullopt for text outside the grammar or vocabulary.
inline std::optional<Action> parse_action(const std::string& text,
                                          const ActionVocabulary& vocab = default_vocabulary()) {
    static const std::regex call_pattern(
        R"(^\s*(?:\d+[\.\)]\s*|-\s*)?([A-Za-z_][A-Za-z0-9_]*)\s*\(([^)]*)\)\s*\.?\s*$)");
    std::string line = trim(text);
    std::smatch m;
    if (!std::regex_match(line, m, call_pattern)) {
        // Bare "done" without parentheses is accepted.
        std::string bare = to_lower(trim(line));
        if (bare == "done" && vocab.count("done")) return make_done();
        return std::nullopt;
    }
    Action a;
    a.kind = to_lower(m[1].str());
    auto it = vocab.find(a.kind);
    if (it == vocab.end()) return std::nullopt;
    std::string argtext = trim(m[2].str());
    if (!argtext.empty()) {
        for (const std::string& piece : split(argtext, ',')) {
            std::string arg = trim(piece);
            if (arg.empty()) return std::nullopt;
            a.args.push_back(normalize_term(arg));
        }
    }
    if (a.args.size() != it->second) return std::nullopt;
    return a;
}

}  // namespace kgplan
