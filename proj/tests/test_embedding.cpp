#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <random>

#include "kgplan/embedding.hpp"
#include "kgplan/knowledge.hpp"

using namespace kgplan;
using namespace kgplan::embedding;
using Catch::Approx;
using nlohmann::json;

namespace {

std::vector<Triple> sample_triples(int n) {
    std::vector<Triple> out;
    for (int i = 0; i < n; ++i)
        out.push_back(Triple{"object_" + std::to_string(i), Predicate::RelatedTo,
                             "concept_" + std::to_string(i), 1.0, TripleOrigin::kg});
    return out;
}

std::filesystem::path temp_file(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "kgplan_test";
    std::filesystem::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST_CASE("cosine identities") {
    EmbeddingVector u{1.0, 0.0};
    EmbeddingVector v{1.0, 1.0};
    CHECK(cosine(u, u) == Approx(1.0).margin(1e-9));
    CHECK(cosine(u, {0.0, 1.0}) == Approx(0.0).margin(1e-12));
    CHECK(cosine(u, v) == Approx(0.7071).margin(1e-4));
    CHECK(cosine(u, v) == Approx(cosine(v, u)).margin(1e-15));
}

TEST_CASE("cosine rejects bad input") {
    CHECK_THROWS_AS(cosine({1.0, 0.0}, {1.0, 0.0, 0.0}), InvalidArgumentError);
    CHECK_THROWS_AS(cosine({0.0, 0.0}, {1.0, 0.0}), InvalidArgumentError);
}

TEST_CASE("hash provider is deterministic with unit vectors of fixed dimension") {
    HashProvider provider(64, 7);
    auto a = provider.embed("ceramic bowl");
    auto b = provider.embed("ceramic bowl");
    CHECK(a == b);
    CHECK(a.size() == 64);
    double norm2 = 0.0;
    for (double x : a) norm2 += x * x;
    CHECK(norm2 == Approx(1.0).margin(1e-12));
    CHECK(provider.embed("something else") != a);
}

TEST_CASE("embedder caches: two embeds, one provider call") {
    auto provider = std::make_shared<HashProvider>(64);
    Embedder embedder(provider);
    auto first = embedder.embed("knife is a sharp object");
    CHECK(embedder.provider_calls() == 1);
    auto second = embedder.embed("knife is a sharp object");
    CHECK(embedder.provider_calls() == 1);
    CHECK(first == second);
}

TEST_CASE("embed rejects empty text") {
    Embedder embedder(std::make_shared<HashProvider>(16));
    CHECK_THROWS_AS(embedder.embed(""), InvalidArgumentError);
    CHECK_THROWS_AS(embedder.embed("   "), InvalidArgumentError);
}

TEST_CASE("provider failure with cache miss raises embedding-unavailable") {
    Embedder embedder(std::make_shared<FailingProvider>(16));
    CHECK_THROWS_AS(embedder.embed("anything"), EmbeddingUnavailableError);
}

TEST_CASE("cache round-trip reproduces vectors bit-exactly") {
    auto path = temp_file("embeddings_roundtrip.jsonl");
    std::filesystem::remove(path);
    EmbeddingVector original;
    {
        Embedder embedder(std::make_shared<HashProvider>(64), path);
        original = embedder.embed("hollandaise sauce related to butter");
    }
    {
        // Failing provider proves the reload never recomputes.
        Embedder embedder(std::make_shared<FailingProvider>(64), path);
        EmbeddingVector reloaded = embedder.embed("hollandaise sauce related to butter");
        REQUIRE(reloaded.size() == original.size());
        for (size_t i = 0; i < original.size(); ++i) CHECK(reloaded[i] == original[i]);
    }
    std::filesystem::remove(path);
}

TEST_CASE("fixture provider hits requested anchor similarities exactly") {
    std::map<std::string, FixtureProvider::Entry> entries{
        {"hungry", {"food", 1.0}},
        {"apple related to eating", {"food", 0.81}},
        {"apple related to red fruit", {"food", 0.76}},
        {"apple related to adam eve", {"food", 0.74}},
    };
    FixtureProvider provider(entries, 64);
    auto anchor = provider.embed("hungry");
    CHECK(cosine(provider.embed("apple related to eating"), anchor) == Approx(0.81).margin(1e-12));
    CHECK(cosine(provider.embed("apple related to red fruit"), anchor) ==
          Approx(0.76).margin(1e-12));
    CHECK(cosine(provider.embed("apple related to adam eve"), anchor) ==
          Approx(0.74).margin(1e-12));
    // Unlisted text stays essentially orthogonal to the group.
    CHECK(std::abs(cosine(provider.embed("unrelated clutter"), anchor)) < 0.5);
}

TEST_CASE("filter_triples keeps relations above theta, preserving order") {
    std::map<std::string, FixtureProvider::Entry> entries{
        {"hungry", {"food", 1.0}},
        {"apple related to eating", {"food", 0.81}},
        {"apple related to red fruit", {"food", 0.76}},
        {"apple related to adam eve", {"food", 0.74}},
    };
    auto provider = std::make_shared<FixtureProvider>(entries, 64);
    Embedder embedder(provider);

    std::vector<Triple> triples{
        {"apple", Predicate::RelatedTo, "adam_eve", 1.0, TripleOrigin::kg},
        {"apple", Predicate::RelatedTo, "eating", 1.0, TripleOrigin::kg},
        {"apple", Predicate::RelatedTo, "red_fruit", 1.0, TripleOrigin::kg},
    };
    FilterConfig cfg{0.75, {"hungry"}};
    auto kept = filter_triples(embedder, triples, cfg);
    REQUIRE(kept.size() == 2);
    CHECK(kept[0].tail == "eating");      // input order preserved
    CHECK(kept[1].tail == "red_fruit");   // 0.74 item dropped

    SECTION("theta sweep is antitone in the threshold") {
        FilterConfig c70{0.70, {"hungry"}};
        FilterConfig c80{0.80, {"hungry"}};
        auto k70 = filter_triples(embedder, triples, c70);
        auto k80 = filter_triples(embedder, triples, c80);
        CHECK(k70.size() >= kept.size());
        CHECK(kept.size() >= k80.size());
        CHECK(k70.size() == 3);
        CHECK(k80.size() == 1);
    }
    SECTION("idempotence") {
        auto twice = filter_triples(embedder, kept, cfg);
        CHECK(json(twice).dump() == json(kept).dump());
    }
    SECTION("empty input stays empty") {
        CHECK(filter_triples(embedder, {}, cfg).empty());
    }
    SECTION("anchors are required") {
        CHECK_THROWS_AS(filter_triples(embedder, triples, FilterConfig{0.75, {}}),
                        InvalidArgumentError);
    }
}

TEST_CASE("near-one theta empties random fixture relation sets") {
    Embedder embedder(std::make_shared<HashProvider>(64));
    FilterConfig cfg{0.999, {"anything at all"}};
    CHECK(filter_triples(embedder, sample_triples(40), cfg).empty());
}

TEST_CASE("antitone and idempotence properties over random inputs") {
    std::mt19937 rng(99);
    Embedder embedder(std::make_shared<HashProvider>(16, 3));
    for (int round = 0; round < 20; ++round) {
        auto triples = sample_triples(static_cast<int>(rng() % 25));
        double lo = 0.05 + 0.3 * (rng() % 100) / 100.0;
        double hi = lo + 0.2;
        FilterConfig flo{lo, {"anchor text"}};
        FilterConfig fhi{hi, {"anchor text"}};
        auto keep_lo = filter_triples(embedder, triples, flo);
        auto keep_hi = filter_triples(embedder, triples, fhi);
        CHECK(keep_hi.size() <= keep_lo.size());
        for (const Triple& t : keep_hi) {
            bool in_lo = false;
            for (const Triple& s : keep_lo)
                if (s == t) in_lo = true;
            CHECK(in_lo);  // raising theta never adds elements
        }
        auto again = filter_triples(embedder, keep_lo, flo);
        CHECK(json(again).dump() == json(keep_lo).dump());
    }
}

TEST_CASE("filter outputs are byte-stable across embedder instances") {
    auto run = [] {
        Embedder embedder(std::make_shared<HashProvider>(64));
        auto triples = sample_triples(30);
        FilterConfig cfg{0.2, {"stability anchor"}};
        return json(filter_triples(embedder, triples, cfg)).dump();
    };
    CHECK(run() == run());
}

TEST_CASE("fixture provider round-trips through its JSON form") {
    json doc = {{"dim", 32},
                {"entries",
                 {{"toxic", {{"group", "danger"}, {"alpha", 1.0}}},
                  {"jack bean related to toxic", {{"group", "danger"}, {"alpha", 0.79}}}}}};
    FixtureProvider provider = FixtureProvider::from_json(doc);
    CHECK(provider.dimension() == 32);
    CHECK(cosine(provider.embed("jack bean related to toxic"), provider.embed("toxic")) ==
          Approx(0.79).margin(1e-12));
}
