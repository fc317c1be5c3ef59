#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include <json.hpp>

#include "kgplan/core.hpp"

namespace kgplan::fallback {

using json = nlohmann::json;

/// Unfiltered (subject, relation, object) extraction before predicate
/// mapping and keyword filtering.
struct RawTriple {
    std::string subject;
    std::string relation;
    std::string object;
};

// ── Document source ─────────────────────────────────────────────

class DocumentSource {
public:
    virtual ~DocumentSource() = default;
    /// Candidate documents for a term, best match first. Empty when the
    /// source has no page for the term.
    virtual std::vector<std::string> candidates(const ConceptKey& term) = 0;
};

/// Wikipedia-style source replayed from a JSON document. Values are either
/// a single text or an array of candidate texts.
class FixtureDocumentSource : public DocumentSource {
public:
    FixtureDocumentSource() = default;
    explicit FixtureDocumentSource(json docs) : docs_(std::move(docs)) {}

    static FixtureDocumentSource from_file(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw InvalidArgumentError("document fixture not found: " + path.string());
        return FixtureDocumentSource(json::parse(in));
    }

    std::vector<std::string> candidates(const ConceptKey& term) override {
        if (!docs_.contains(term)) return {};
        const json& entry = docs_.at(term);
        if (entry.is_string()) return {entry.get<std::string>()};
        std::vector<std::string> out;
        for (const json& doc : entry) out.push_back(doc.get<std::string>());
        return out;
    }

private:
    json docs_ = json::object();
};

// ── Triple extraction ───────────────────────────────────────────

class TripleExtractor {
public:
    virtual ~TripleExtractor() = default;
    virtual std::vector<RawTriple> extract(const std::string& text) = 0;
};

/// Minimal open-information-extraction stand-in: splits sentences and
/// matches copula/verb patterns. Good enough for fixture documents.
class PatternExtractor : public TripleExtractor {
public:
    std::vector<RawTriple> extract(const std::string& text) override {
        static const std::regex verb_pattern(
            R"(^(.{1,120}?)\s+(is|are|was|were|has|have|contains?|can|may|causes?)\s+(.+)$)",
            std::regex::icase);
        std::vector<RawTriple> out;
        for (const std::string& sentence : split_sentences(text)) {
            std::smatch m;
            if (!std::regex_match(sentence, m, verb_pattern)) continue;
            RawTriple t;
            t.subject = to_lower(trim(m[1].str()));
            t.relation = to_lower(trim(m[2].str()));
            t.object = to_lower(trim(m[3].str()));
            if (t.subject.empty() || t.object.empty()) continue;
            out.push_back(std::move(t));
        }
        return out;
    }

private:
    static std::vector<std::string> split_sentences(const std::string& text) {
        std::vector<std::string> out;
        std::string current;
        for (char c : text) {
            if (c == '.' || c == '!' || c == '?' || c == ';' || c == '\n') {
                std::string s = trim(current);
                if (!s.empty()) out.push_back(std::move(s));
                current.clear();
            } else {
                current.push_back(c);
            }
        }
        std::string s = trim(current);
        if (!s.empty()) out.push_back(std::move(s));
        return out;
    }
};

inline Predicate map_relation_verb(const std::string& verb) {
    std::string v = to_lower(trim(verb));
    if (v == "is" || v == "are" || v == "was" || v == "were") return Predicate::IsA;
    if (v == "has" || v == "have" || v == "contains" || v == "contain")
        return Predicate::HasProperty;
    if (v == "can" || v == "may") return Predicate::CapableOf;
    return Predicate::RelatedTo;
}

// ── Fallback pipeline ───────────────────────────────────────────

/// Document-based triple extraction for terms the KG does not cover.
/// A triple survives only when at least one filter keyword appears as a
/// substring of its subject, relation, or object text. Never throws:
/// missing documents and extractor failures degrade to an empty result.
inline std::vector<Triple> fallback_relations(const ConceptKey& term,
                                              const std::vector<std::string>& filter_keywords,
                                              DocumentSource& docs, TripleExtractor& extractor) {
    if (filter_keywords.empty()) return {};

    std::vector<std::string> pages;
    try {
        pages = docs.candidates(term);
    } catch (const std::exception& e) {
        log::error("fallback: document source failed for '" + term + "': " + e.what());
        return {};
    }
    if (pages.empty()) {
        log::info("fallback: no document found for '" + term + "'");
        return {};
    }
    if (pages.size() > 1)
        log::warn("fallback: " + std::to_string(pages.size()) + " candidate documents for '" +
                  term + "', taking the first (non-interactive mode)");

    std::vector<RawTriple> raw;
    try {
        raw = extractor.extract(pages.front());
    } catch (const std::exception& e) {
        log::error("fallback: extractor failed for '" + term + "': " + e.what());
        return {};
    }

    std::vector<Triple> out;
    for (const RawTriple& r : raw) {
        bool keep = false;
        for (const std::string& kw : filter_keywords) {
            if (contains_ci(r.subject, kw) || contains_ci(r.relation, kw) ||
                contains_ci(r.object, kw)) {
                keep = true;
                break;
            }
        }
        if (!keep) continue;
        Triple t;
        t.head = normalize_term(r.subject);
        t.predicate = map_relation_verb(r.relation);
        t.tail = normalize_term(r.object);
        t.weight = 1.0;
        t.origin = TripleOrigin::fallback;
        out.push_back(std::move(t));
    }
    return out;
}

}  // namespace kgplan::fallback
