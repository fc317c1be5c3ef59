#pragma once

#include <algorithm>
#include <cctype>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace kgplan {

// ── Errors ──────────────────────────────────────────────────────

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class InvalidTermError : public Error {
public:
    using Error::Error;
};

class InvalidArgumentError : public Error {
public:
    using Error::Error;
};

/// Remote payload could not be parsed; carries the offending fragment.
class PayloadParseError : public Error {
public:
    PayloadParseError(const std::string& what, std::string fragment)
        : Error(what + ": " + fragment), fragment_(std::move(fragment)) {}
    const std::string& fragment() const { return fragment_; }

private:
    std::string fragment_;
};

class TransportError : public Error {
public:
    using Error::Error;
};

class KnowledgeUnavailableError : public Error {
public:
    using Error::Error;
};

class EmbeddingUnavailableError : public Error {
public:
    using Error::Error;
};

class UnmatchedPromptError : public Error {
public:
    using Error::Error;
};

class StructuredParseError : public Error {
public:
    using Error::Error;
};

/// A generated command referenced objects that are not in the scene.
class HallucinationError : public Error {
public:
    HallucinationError(const std::string& what, std::vector<std::string> offenders)
        : Error(what), offenders_(std::move(offenders)) {}
    const std::vector<std::string>& offenders() const { return offenders_; }

private:
    std::vector<std::string> offenders_;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class PlanningStalledError : public Error {
public:
    using Error::Error;
};

class NoFeasibleActionError : public Error {
public:
    using Error::Error;
};

class SceneLoadError : public Error {
public:
    using Error::Error;
};

class ExecutionError : public Error {
public:
    using Error::Error;
};

class SuiteError : public Error {
public:
    using Error::Error;
};

// ── Logging ─────────────────────────────────────────────────────

namespace log {

enum class Level { debug = 0, info = 1, warn = 2, error = 3, off = 4 };

inline Level& threshold() {
    static Level lvl = Level::warn;
    return lvl;
}

inline std::mutex& sink_mutex() {
    static std::mutex m;
    return m;
}

inline void write(Level lvl, std::string_view tag, const std::string& msg) {
    if (lvl < threshold()) return;
    std::lock_guard<std::mutex> lock(sink_mutex());
    std::cerr << "[" << tag << "] " << msg << "\n";
}

inline void debug(const std::string& msg) { write(Level::debug, "debug", msg); }
inline void info(const std::string& msg) { write(Level::info, "info", msg); }
inline void warn(const std::string& msg) { write(Level::warn, "warn", msg); }
inline void error(const std::string& msg) { write(Level::error, "error", msg); }

}  // namespace log

// ── String helpers ──────────────────────────────────────────────

inline std::string trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

inline std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> parts;
    size_t start = 0;
    while (start <= s.size()) {
        size_t pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            parts.emplace_back(s.substr(start));
            break;
        }
        parts.emplace_back(s.substr(start, pos - start));
        start = pos + 1;
    }
    return parts;
}

inline bool contains_ci(std::string_view haystack, std::string_view needle) {
    if (needle.empty()) return false;
    std::string h = to_lower(haystack);
    std::string n = to_lower(needle);
    return h.find(n) != std::string::npos;
}

// ── ConceptKey ──────────────────────────────────────────────────

/// Lowercase label with internal whitespace collapsed to single '_'.
/// Idempotent: normalizing a key yields the same key.
using ConceptKey = std::string;

inline ConceptKey normalize_term(std::string_view text) {
    std::string t = trim(text);
    if (t.empty()) throw InvalidTermError("cannot normalize empty term");
    std::string out;
    out.reserve(t.size());
    bool pending_sep = false;
    for (char raw : t) {
        unsigned char c = static_cast<unsigned char>(raw);
        if (std::isspace(c) || raw == '_') {
            pending_sep = true;
            continue;
        }
        if (pending_sep && !out.empty()) out.push_back('_');
        pending_sep = false;
        out.push_back(static_cast<char>(std::tolower(c)));
    }
    if (out.empty()) throw InvalidTermError("term has no usable characters");
    return out;
}

/// ConceptKey rendered back as natural words ("paper_cup" -> "paper cup").
inline std::string key_to_words(const ConceptKey& key) {
    std::string out = key;
    std::replace(out.begin(), out.end(), '_', ' ');
    return out;
}

// ── Triple ──────────────────────────────────────────────────────

enum class Predicate {
    IsA,
    PartOf,
    MadeOf,
    HasProperty,
    UsedFor,
    CapableOf,
    RelatedTo,
};

inline constexpr Predicate kAllPredicates[] = {
    Predicate::IsA,       Predicate::PartOf,    Predicate::MadeOf,
    Predicate::HasProperty, Predicate::UsedFor, Predicate::CapableOf,
    Predicate::RelatedTo,
};

inline std::string_view predicate_label(Predicate p) {
    switch (p) {
        case Predicate::IsA: return "IsA";
        case Predicate::PartOf: return "PartOf";
        case Predicate::MadeOf: return "MadeOf";
        case Predicate::HasProperty: return "HasProperty";
        case Predicate::UsedFor: return "UsedFor";
        case Predicate::CapableOf: return "CapableOf";
        case Predicate::RelatedTo: return "RelatedTo";
    }
    return "RelatedTo";
}

/// Natural-word rendering used when a triple is embedded or prompted.
inline std::string_view predicate_words(Predicate p) {
    switch (p) {
        case Predicate::IsA: return "is a";
        case Predicate::PartOf: return "part of";
        case Predicate::MadeOf: return "made of";
        case Predicate::HasProperty: return "has property";
        case Predicate::UsedFor: return "used for";
        case Predicate::CapableOf: return "capable of";
        case Predicate::RelatedTo: return "related to";
    }
    return "related to";
}

inline std::optional<Predicate> parse_predicate(std::string_view label) {
    std::string norm;
    for (char raw : label) {
        unsigned char c = static_cast<unsigned char>(raw);
        if (std::isalpha(c)) norm.push_back(static_cast<char>(std::tolower(c)));
    }
    for (Predicate p : kAllPredicates) {
        std::string cand;
        for (char c : predicate_label(p)) cand.push_back(static_cast<char>(std::tolower(c)));
        if (norm == cand) return p;
    }
    return std::nullopt;
}

enum class TripleOrigin { kg, fallback };

/// One knowledge-graph relation. Head and tail are normalized concept keys.
struct Triple {
    ConceptKey head;
    Predicate predicate = Predicate::RelatedTo;
    ConceptKey tail;
    double weight = 0.0;
    TripleOrigin origin = TripleOrigin::kg;

    bool operator==(const Triple& o) const {
        return head == o.head && predicate == o.predicate && tail == o.tail &&
               weight == o.weight && origin == o.origin;
    }

    /// Identity used for deduplication (weight and origin excluded).
    std::string relation_key() const {
        std::string out = head;
        out += '|';
        out += predicate_label(predicate);
        out += '|';
        out += tail;
        return out;
    }

    /// Surface text for embedding and prompts: "knife is a sharp object".
    std::string render() const {
        std::string out = key_to_words(head);
        out += ' ';
        out += predicate_words(predicate);
        out += ' ';
        out += key_to_words(tail);
        return out;
    }
};

inline std::vector<Triple> dedup_triples(const std::vector<Triple>& triples) {
    std::vector<Triple> out;
    std::vector<std::string> seen;
    for (const Triple& t : triples) {
        std::string key = t.relation_key();
        if (std::find(seen.begin(), seen.end(), key) != seen.end()) continue;
        seen.push_back(std::move(key));
        out.push_back(t);
    }
    return out;
}

}  // namespace kgplan
