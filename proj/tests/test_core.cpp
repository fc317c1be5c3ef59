#include <catch2/catch_amalgamated.hpp>

#include "kgplan/actions.hpp"
#include "kgplan/core.hpp"

using namespace kgplan;

TEST_CASE("normalize_term applies the lowercase/separator rule") {
    CHECK(normalize_term("Jack Bean") == "jack_bean");
    CHECK(normalize_term("apple") == "apple");
    CHECK(normalize_term("  Paper  Cup ") == "paper_cup");
    CHECK(normalize_term("Microwave\tOven") == "microwave_oven");
}

TEST_CASE("normalize_term is idempotent") {
    for (const char* term : {"Jack Bean", "  Paper  Cup ", "a  b   c", "X"}) {
        ConceptKey once = normalize_term(term);
        CHECK(normalize_term(once) == once);
    }
}

TEST_CASE("normalize_term rejects empty input") {
    CHECK_THROWS_AS(normalize_term(""), InvalidTermError);
    CHECK_THROWS_AS(normalize_term("   "), InvalidTermError);
}

TEST_CASE("predicate labels round-trip") {
    for (Predicate p : kAllPredicates) {
        auto parsed = parse_predicate(std::string(predicate_label(p)));
        REQUIRE(parsed.has_value());
        CHECK(*parsed == p);
    }
    CHECK(parse_predicate("is a").has_value());
    CHECK_FALSE(parse_predicate("Antonym").has_value());
    CHECK_FALSE(parse_predicate("").has_value());
}

TEST_CASE("triple renders as natural words") {
    Triple t{"knife", Predicate::IsA, "sharp_object", 2.0, TripleOrigin::kg};
    CHECK(t.render() == "knife is a sharp object");
    Triple r{"paper_cup", Predicate::RelatedTo, "wax", 1.0, TripleOrigin::kg};
    CHECK(r.render() == "paper cup related to wax");
}

TEST_CASE("dedup_triples keeps first occurrence and drops repeats") {
    Triple a{"a", Predicate::IsA, "b", 1.0, TripleOrigin::kg};
    Triple a2 = a;
    a2.weight = 3.0;  // same relation identity
    Triple c{"a", Predicate::RelatedTo, "b", 1.0, TripleOrigin::kg};
    auto out = dedup_triples({a, a2, c, a});
    REQUIRE(out.size() == 2);
    CHECK(out[0].weight == 1.0);
    CHECK(out[1].predicate == Predicate::RelatedTo);
}

TEST_CASE("parse_action accepts the command grammar") {
    auto a = parse_action("pick_and_place(sponge, user)");
    REQUIRE(a.has_value());
    CHECK(a->kind == "pick_and_place");
    CHECK(a->args == std::vector<ConceptKey>{"sponge", "user"});
    CHECK(a->canonical() == "pick_and_place(sponge, user)");

    SECTION("whitespace and case insensitivity") {
        auto b = parse_action("  Pick_And_Place( Ceramic Bowl ,  table )");
        REQUIRE(b.has_value());
        CHECK(b->canonical() == "pick_and_place(ceramic_bowl, table)");
    }
    SECTION("leading enumeration tolerated") {
        CHECK(parse_action("2. pick_and_place(apple, user)").has_value());
        CHECK(parse_action("- done()").has_value());
    }
    SECTION("done with and without parentheses") {
        CHECK(parse_action("done()")->is_done());
        CHECK(parse_action("done")->is_done());
    }
    SECTION("rejects arity mismatch and unknown kinds") {
        CHECK_FALSE(parse_action("pick_and_place(apple)").has_value());
        CHECK_FALSE(parse_action("done(apple)").has_value());
        CHECK_FALSE(parse_action("throw(apple, user)").has_value());
        CHECK_FALSE(parse_action("just some words").has_value());
    }
    SECTION("extended vocabulary") {
        ActionVocabulary vocab = default_vocabulary();
        vocab["open"] = 1;
        auto c = parse_action("open(fridge)", vocab);
        REQUIRE(c.has_value());
        CHECK(c->canonical() == "open(fridge)");
    }
}

TEST_CASE("actions order by canonical serialization") {
    Action a{"pick_and_place", {"apple", "user"}};
    Action b{"pick_and_place", {"sponge", "user"}};
    CHECK(a < b);
    CHECK_FALSE(b < a);
}
