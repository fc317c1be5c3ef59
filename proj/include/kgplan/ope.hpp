#pragma once

#include <map>
#include <regex>
#include <string>
#include <vector>

#include <json.hpp>

#include "kgplan/config.hpp"
#include "kgplan/core.hpp"
#include "kgplan/llm.hpp"

namespace kgplan::ope {

using json = nlohmann::json;

// ── Ternary properties ──────────────────────────────────────────

enum class Ternary { Yes, No, Unknown };

inline std::string_view ternary_label(Ternary t) {
    switch (t) {
        case Ternary::Yes: return "Yes";
        case Ternary::No: return "No";
        case Ternary::Unknown: return "Unknown";
    }
    return "Unknown";
}

inline std::optional<Ternary> parse_ternary(const std::string& s) {
    std::string t = to_lower(trim(s));
    if (t == "yes") return Ternary::Yes;
    if (t == "no") return Ternary::No;
    if (t == "unknown") return Ternary::Unknown;
    return std::nullopt;
}

struct PropertyAssignment {
    ConceptKey object;
    std::map<std::string, Ternary> values;

    Ternary value(const std::string& property) const {
        auto it = values.find(to_lower(property));
        return it == values.end() ? Ternary::Unknown : it->second;
    }
};

using PropertyMap = std::map<ConceptKey, PropertyAssignment>;

inline json properties_to_json(const PropertyMap& props) {
    json out = json::object();
    for (const auto& [name, assignment] : props) {
        json values = json::object();
        for (const auto& [prop, v] : assignment.values) values[prop] = ternary_label(v);
        out[name] = values;
    }
    return out;
}

/// Multiplier applied to S_prop for one property value on one object.
/// Unknown counts as No except on dangerous/poisonous, where it applies
/// half the Yes penalty.
inline double property_factor(const PropertyPenalties& penalties, const std::string& property,
                              Ternary value) {
    auto it = penalties.yes.find(to_lower(property));
    if (it == penalties.yes.end()) return 1.0;
    switch (value) {
        case Ternary::Yes: return 1.0 - it->second;
        case Ternary::No: return 1.0;
        case Ternary::Unknown:
            if (to_lower(property) == "dangerous" || to_lower(property) == "poisonous")
                return 1.0 - it->second / 2.0;
            return 1.0;
    }
    return 1.0;
}

// ── Risk assessment ─────────────────────────────────────────────

struct RiskAssessment {
    ConceptKey object;
    int individual = 1;  // 1..5
    std::vector<std::pair<ConceptKey, int>> dangerous_with;

    std::optional<int> interaction_with(const ConceptKey& other) const {
        for (const auto& [partner, score] : dangerous_with)
            if (partner == other) return score;
        return std::nullopt;
    }
};

using RiskMap = std::map<ConceptKey, RiskAssessment>;

inline json risks_to_json(const RiskMap& risks) {
    json out = json::object();
    for (const auto& [name, r] : risks) {
        json partners = json::array();
        for (const auto& [partner, score] : r.dangerous_with)
            partners.push_back(json{{"object", partner}, {"score", score}});
        out[name] = json{{"individual", r.individual}, {"dangerous_with", partners}};
    }
    return out;
}

inline void validate_score(int score, const std::string& where) {
    if (score < 1 || score > 5)
        throw ValidationError("risk score outside 1..5 in " + where + ": " +
                              std::to_string(score));
}

/// Canonical risk block:
///   Object: plastic cup
///   Dangerous: 1
///   DangerousWith: [microwave oven (3)]
inline std::string serialize_risk(const RiskAssessment& r) {
    std::string out = "Object: " + key_to_words(r.object) + "\n";
    out += "Dangerous: " + std::to_string(r.individual) + "\n";
    out += "DangerousWith: [";
    for (size_t i = 0; i < r.dangerous_with.size(); ++i) {
        if (i) out += ", ";
        out += key_to_words(r.dangerous_with[i].first) + " (" +
               std::to_string(r.dangerous_with[i].second) + ")";
    }
    out += "]";
    return out;
}

inline std::string serialize_risks(const std::vector<RiskAssessment>& list) {
    std::string out;
    for (size_t i = 0; i < list.size(); ++i) {
        if (i) out += "\n\n";
        out += serialize_risk(list[i]);
    }
    return out;
}

/// Parses one or more risk blocks. Scores are validated to 1..5; a
/// malformed block raises a parse error naming the offending line.
inline std::vector<RiskAssessment> parse_risk_blocks(const std::string& text) {
    static const std::regex object_line(R"(^\s*Object:\s*(.+?)\s*$)", std::regex::icase);
    static const std::regex danger_line(R"(^\s*Dangerous:\s*(-?\d+)\s*$)", std::regex::icase);
    static const std::regex with_line(R"(^\s*DangerousWith:\s*\[(.*)\]\s*$)", std::regex::icase);
    static const std::regex partner_item(R"(^\s*(.+?)\s*\(\s*(-?\d+)\s*\)\s*$)");

    std::vector<std::string> lines;
    for (const std::string& raw : split(text, '\n')) {
        if (!trim(raw).empty()) lines.push_back(raw);
    }

    std::vector<RiskAssessment> out;
    for (size_t i = 0; i < lines.size();) {
        std::smatch m;
        if (!std::regex_match(lines[i], m, object_line))
            throw StructuredParseError("expected 'Object:' line, got: " + lines[i]);
        RiskAssessment r;
        r.object = normalize_term(m[1].str());
        ++i;
        if (i >= lines.size() || !std::regex_match(lines[i], m, danger_line))
            throw StructuredParseError("expected 'Dangerous:' line after object '" +
                                       r.object + "'" +
                                       (i < lines.size() ? ", got: " + lines[i] : ""));
        r.individual = std::stoi(m[1].str());
        validate_score(r.individual, "'Dangerous:' line for " + r.object);
        ++i;
        if (i >= lines.size() || !std::regex_match(lines[i], m, with_line))
            throw StructuredParseError("expected 'DangerousWith:' line for object '" +
                                       r.object + "'" +
                                       (i < lines.size() ? ", got: " + lines[i] : ""));
        std::string inner = trim(m[1].str());
        if (!inner.empty()) {
            for (const std::string& item : split(inner, ',')) {
                std::smatch pm;
                std::string entry = trim(item);
                if (!std::regex_match(entry, pm, partner_item))
                    throw StructuredParseError("malformed interaction entry '" + entry +
                                               "' for object '" + r.object + "'");
                int score = std::stoi(pm[2].str());
                validate_score(score, "interaction entry for " + r.object);
                r.dangerous_with.emplace_back(normalize_term(pm[1].str()), score);
            }
        }
        ++i;
        out.push_back(std::move(r));
    }
    return out;
}

// ── Prompt templates ────────────────────────────────────────────

inline std::string property_system_message(const std::vector<std::string>& properties) {
    std::string list;
    for (size_t i = 0; i < properties.size(); ++i) {
        if (i) list += ", ";
        list += properties[i];
    }
    return "You assign object properties for robot manipulation. Decide each property from the "
           "knowledge provided and common sense. Reply with a single line of the form:\n"
           "<object>: <property> [Yes], <property> [No], ...\n"
           "Cover every property from this list: " + list + ".";
}

inline std::string property_user_message(const ConceptKey& object,
                                         const std::vector<Triple>& relations) {
    std::string msg = "Object: " + object + "\nKnowledge:\n";
    if (relations.empty()) {
        msg += "(none)\n";
    } else {
        for (const Triple& t : relations) msg += "- " + t.render() + "\n";
    }
    return msg;
}

inline std::string risk_rubric() {
    return "Individual risk scale:\n"
           "Score 1 - Not dangerous: the object is completely safe under all circumstances and "
           "poses no risk of damage or harm.\n"
           "Score 2 - Low danger: minimal risk in normal conditions; slightly harmful or damaged "
           "only in rare situations.\n"
           "Score 3 - Moderate danger: can cause harm or become damaged if mishandled or used "
           "improperly in some scenarios.\n"
           "Score 4 - High danger: significant risk of harm or damage even in normal conditions, "
           "requiring careful handling.\n"
           "Score 5 - Extremely dangerous: highly risky or fragile; severe danger in almost all "
           "situations.\n"
           "Interaction risk scale:\n"
           "Score 1 - No added danger: the combination is completely safe.\n"
           "Score 2 - Low additional danger: minimal risk, occurring only in rare cases.\n"
           "Score 3 - Moderate additional danger: harm or damage under improper use or specific "
           "conditions.\n"
           "Score 4 - High additional danger: significant risk even in normal conditions, "
           "requiring caution.\n"
           "Score 5 - Extremely dangerous: highly unsafe combination; severe risk in almost all "
           "situations.";
}

inline std::string risk_system_message() {
    return "You assess object risk for robot manipulation using a 1-5 scale.\n" + risk_rubric() +
           "\nReply with one block per object, exactly in this form:\n"
           "Object: <name>\nDangerous: <1-5>\nDangerousWith: [<other object> (<1-5>), ...]";
}

inline std::string risk_user_message(const std::vector<ConceptKey>& objects,
                                     const std::string& request,
                                     const std::map<ConceptKey, std::vector<Triple>>& relations) {
    std::string msg = "Request: " + request + "\nObjects:";
    for (const ConceptKey& o : objects) msg += " " + o;
    msg += "\nKnowledge:\n";
    bool any = false;
    for (const ConceptKey& o : objects) {
        auto it = relations.find(o);
        if (it == relations.end()) continue;
        for (const Triple& t : it->second) {
            msg += "- " + t.render() + "\n";
            any = true;
        }
    }
    if (!any) msg += "(none)\n";
    return msg;
}

// ── Operations ──────────────────────────────────────────────────

/// Single-line property reply parser. Properties the reply does not cover
/// (or covers unreadably) default to Unknown with a logged warning.
inline PropertyAssignment parse_property_line(const ConceptKey& object, const std::string& reply,
                                              const std::vector<std::string>& properties) {
    PropertyAssignment out;
    out.object = object;
    for (const std::string& prop : properties) {
        std::regex value_pattern(prop + R"(\s*\[\s*(Yes|No|Unknown)\s*\])", std::regex::icase);
        std::smatch m;
        if (std::regex_search(reply, m, value_pattern)) {
            out.values[to_lower(prop)] = *parse_ternary(m[1].str());
        } else {
            log::warn("ope: property '" + prop + "' unreadable for '" + object +
                      "', defaulting to Unknown");
            out.values[to_lower(prop)] = Ternary::Unknown;
        }
    }
    return out;
}

/// One LLM call per object; the relations map must hold the already
/// filtered triples. Returns one assignment per input object.
inline PropertyMap extract_properties(const std::vector<ConceptKey>& objects,
                                      const std::map<ConceptKey, std::vector<Triple>>& relations,
                                      llm::ChatBackend& backend,
                                      const std::vector<std::string>& properties,
                                      llm::UsageLog* usage = nullptr) {
    PropertyMap out;
    std::string sys = property_system_message(properties);
    for (const ConceptKey& object : objects) {
        static const std::vector<Triple> kNone;
        auto it = relations.find(object);
        const std::vector<Triple>& rels = it == relations.end() ? kNone : it->second;
        llm::CompletionRequest req{{sys, property_user_message(object, rels)}, 0.0, 1};
        std::string reply = backend.complete(req).at(0);
        if (usage)
            usage->add({"ope.properties", req.context.concatenated().size(), reply.size(), 1});
        out[object] = parse_property_line(object, reply, properties);
    }
    return out;
}

/// Single LLM call covering every object; replies must use the canonical
/// block format. Partners are validated against the object set and stored
/// symmetrically (if A lists B at k, B acquires A at k; conflicting
/// directions keep the higher score).
inline RiskMap assess_risk(const std::vector<ConceptKey>& objects, const std::string& request,
                           const std::map<ConceptKey, std::vector<Triple>>& relations,
                           llm::ChatBackend& backend, llm::UsageLog* usage = nullptr) {
    if (objects.empty()) return {};
    llm::CompletionRequest req{{risk_system_message(),
                                risk_user_message(objects, request, relations)},
                               0.0, 1};
    std::string reply = backend.complete(req).at(0);
    if (usage) usage->add({"ope.risk", req.context.concatenated().size(), reply.size(), 1});

    RiskMap out;
    for (RiskAssessment& r : parse_risk_blocks(reply)) {
        if (std::find(objects.begin(), objects.end(), r.object) == objects.end())
            throw ValidationError("risk block for undetected object: " + r.object);
        for (const auto& [partner, score] : r.dangerous_with) {
            (void)score;
            if (std::find(objects.begin(), objects.end(), partner) == objects.end())
                throw ValidationError("risk partner is not a detected object: " + partner);
        }
        out[r.object] = std::move(r);
    }
    for (const ConceptKey& o : objects) {
        auto it = out.find(o);
        if (it == out.end())
            throw ValidationError("risk reply omits detected object: " + o);
    }
    // Symmetric closure over interaction scores.
    for (auto& [name, r] : out) {
        for (const auto& [partner, score] : r.dangerous_with) {
            RiskAssessment& other = out[partner];
            auto existing = other.interaction_with(name);
            if (!existing) {
                other.dangerous_with.emplace_back(name, score);
            } else if (*existing < score) {
                for (auto& entry : other.dangerous_with)
                    if (entry.first == name) entry.second = score;
            }
        }
    }
    return out;
}

/// Highest risk the planner must respect when `source` is involved with
/// `target`: the source's individual score, raised by any recorded
/// interaction between the two.
inline int effective_risk(const RiskMap& risks, const ConceptKey& source,
                          const ConceptKey& target) {
    int k = 1;
    auto it = risks.find(source);
    if (it != risks.end()) {
        k = std::max(k, it->second.individual);
        if (auto inter = it->second.interaction_with(target)) k = std::max(k, *inter);
    }
    return k;
}

}  // namespace kgplan::ope
