#include <catch2/catch_amalgamated.hpp>

#include "kgplan/fallback.hpp"

using namespace kgplan;
using namespace kgplan::fallback;
using nlohmann::json;

namespace {

const char* kGladiolusText =
    "Gladiolus is a genus of perennial flowering plants. "
    "The bulbs are highly toxic if ingested. "
    "The flower spikes are large and colorful.";

class ThrowingExtractor : public TripleExtractor {
public:
    std::vector<RawTriple> extract(const std::string&) override {
        throw std::runtime_error("extractor exploded");
    }
};

}  // namespace

TEST_CASE("pattern extractor pulls copula triples from sentences") {
    PatternExtractor extractor;
    auto raw = extractor.extract(kGladiolusText);
    REQUIRE(raw.size() >= 2);
    CHECK(raw[0].subject == "gladiolus");
    CHECK(raw[0].relation == "is");
    bool found_toxic = false;
    for (const RawTriple& t : raw)
        if (t.object.find("toxic") != std::string::npos) found_toxic = true;
    CHECK(found_toxic);
}

TEST_CASE("fallback keeps only keyword-bearing triples and marks origin") {
    FixtureDocumentSource docs(json{{"gladiolus", kGladiolusText}});
    PatternExtractor extractor;
    auto triples = fallback_relations("gladiolus", {"toxic"}, docs, extractor);
    REQUIRE_FALSE(triples.empty());
    for (const Triple& t : triples) {
        CHECK(t.origin == TripleOrigin::fallback);
        bool hit = contains_ci(t.head, "toxic") || contains_ci(t.tail, "toxic") ||
                   contains_ci(std::string(predicate_words(t.predicate)), "toxic");
        CHECK(hit);
    }
}

TEST_CASE("retained set is a subset of the raw extraction") {
    FixtureDocumentSource docs(json{{"gladiolus", kGladiolusText}});
    PatternExtractor extractor;
    auto raw = extractor.extract(kGladiolusText);
    auto kept = fallback_relations("gladiolus", {"toxic", "fragile"}, docs, extractor);
    CHECK(kept.size() <= raw.size());
    for (const Triple& t : kept) {
        bool matches_raw = false;
        for (const RawTriple& r : raw)
            if (normalize_term(r.subject) == t.head && normalize_term(r.object) == t.tail)
                matches_raw = true;
        CHECK(matches_raw);
    }
}

TEST_CASE("empty keyword list retains nothing") {
    FixtureDocumentSource docs(json{{"gladiolus", kGladiolusText}});
    PatternExtractor extractor;
    CHECK(fallback_relations("gladiolus", {}, docs, extractor).empty());
}

TEST_CASE("missing document yields an empty list, not an error") {
    FixtureDocumentSource docs(json::object());
    PatternExtractor extractor;
    CHECK(fallback_relations("unheard_of", {"toxic"}, docs, extractor).empty());
}

TEST_CASE("extractor failure degrades to an empty list") {
    FixtureDocumentSource docs(json{{"gladiolus", kGladiolusText}});
    ThrowingExtractor extractor;
    CHECK(fallback_relations("gladiolus", {"toxic"}, docs, extractor).empty());
}

TEST_CASE("ambiguous documents use the first candidate") {
    FixtureDocumentSource docs(json{
        {"mercury",
         json::array({"Mercury is a toxic heavy metal.", "Mercury is a planet."})}});
    PatternExtractor extractor;
    auto triples = fallback_relations("mercury", {"toxic"}, docs, extractor);
    REQUIRE(triples.size() == 1);
    CHECK(triples[0].tail == "a_toxic_heavy_metal");
}

TEST_CASE("verb mapping lands inside the predicate whitelist") {
    PatternExtractor extractor;
    FixtureDocumentSource docs(json{
        {"oleander",
         "Oleander is a poisonous shrub. It contains toxic compounds. "
         "Contact can cause dangerous reactions."}});
    for (const Triple& t :
         fallback_relations("oleander", {"toxic", "poisonous", "dangerous"}, docs, extractor)) {
        bool whitelisted = false;
        for (Predicate p : kAllPredicates)
            if (t.predicate == p) whitelisted = true;
        CHECK(whitelisted);
    }
}
