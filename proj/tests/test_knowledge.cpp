#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <random>
#include <thread>

#include <httplib.h>

#include "kgplan/http.hpp"
#include "kgplan/knowledge.hpp"

using namespace kgplan;
using namespace kgplan::knowledge;
using nlohmann::json;

namespace {

json edge(const std::string& rel, const std::string& start, const std::string& end,
          double weight = 1.0) {
    return json{{"rel", {{"label", rel}}},
                {"start", {{"label", start}}},
                {"end", {{"label", end}}},
                {"weight", weight}};
}

json knife_payload() {
    return json{{"edges",
                 json::array({edge("IsA", "knife", "sharp object", 2.0),
                              edge("UsedFor", "knife", "cutting", 1.5),
                              edge("Antonym", "knife", "spoon", 1.0),  // outside whitelist
                              edge("RelatedTo", "blade", "knife", 0.5),
                              edge("IsA", "fork", "utensil", 1.0)})}};  // knife absent
}

std::filesystem::path temp_file(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "kgplan_test";
    std::filesystem::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST_CASE("fetch_relations keeps whitelisted triples naming the term") {
    auto transport = std::make_shared<FixtureTransport>(json{{"knife", knife_payload()}});
    KnowledgeBase kb(transport);
    auto triples = kb.fetch_relations("knife");
    REQUIRE(triples.size() == 3);
    CHECK(triples[0].head == "knife");
    CHECK(triples[0].predicate == Predicate::IsA);
    CHECK(triples[0].tail == "sharp_object");
    // term may appear as tail
    CHECK(triples[2].head == "blade");
    CHECK(triples[2].tail == "knife");
    for (const Triple& t : triples) CHECK((t.head == "knife" || t.tail == "knife"));
}

TEST_CASE("fetch_relations of an absent entity yields an empty list") {
    auto transport = std::make_shared<FixtureTransport>(json::object());
    KnowledgeBase kb(transport);
    CHECK(kb.fetch_relations("unobtainium").empty());
}

TEST_CASE("second fetch is served from cache with zero remote calls") {
    auto transport = std::make_shared<FixtureTransport>(json{{"knife", knife_payload()}});
    KnowledgeBase kb(transport);
    auto first = kb.fetch_relations("knife");
    REQUIRE(transport->calls() == 1);
    auto second = kb.fetch_relations("knife");
    CHECK(transport->calls() == 1);
    CHECK(first == second);
}

TEST_CASE("limit caps the returned list, cached or not") {
    auto transport = std::make_shared<FixtureTransport>(json{{"knife", knife_payload()}});
    KnowledgeBase kb(transport);
    CHECK(kb.fetch_relations("knife", 1).size() == 1);
    CHECK(kb.fetch_relations("knife", 2).size() == 2);  // served from cache
    CHECK(transport->calls() == 1);
}

TEST_CASE("unreachable transport with cache miss raises knowledge-unavailable") {
    auto transport = std::make_shared<FixtureTransport>(json{{"knife", knife_payload()}});
    transport->set_unreachable(true);
    KnowledgeBase kb(transport);
    CHECK_THROWS_AS(kb.fetch_relations("knife"), KnowledgeUnavailableError);

    SECTION("a warm cache hides the outage") {
        transport->set_unreachable(false);
        kb.fetch_relations("knife");
        transport->set_unreachable(true);
        CHECK(kb.fetch_relations("knife").size() == 3);
    }
}

TEST_CASE("malformed payload raises a parse error with the fragment") {
    json broken = json{{"edges", json::array({json{{"rel", {{"label", "IsA"}}}}})}};
    auto transport = std::make_shared<FixtureTransport>(json{{"thing", broken}});
    KnowledgeBase kb(transport);
    try {
        kb.fetch_relations("thing");
        FAIL("expected PayloadParseError");
    } catch (const PayloadParseError& e) {
        CHECK_FALSE(e.fragment().empty());
    }
}

TEST_CASE("cache round-trip reproduces triple lists byte-identically") {
    auto path = temp_file("triples_roundtrip.jsonl");
    std::filesystem::remove(path);
    auto transport = std::make_shared<FixtureTransport>(json{{"knife", knife_payload()}});

    json before, after;
    {
        KnowledgeBase kb(transport, path);
        before = json(kb.fetch_relations("knife"));
    }
    {
        // Fresh knowledge base, unreachable transport: must serve from disk.
        auto dead = std::make_shared<FixtureTransport>();
        dead->set_unreachable(true);
        KnowledgeBase kb(dead, path);
        after = json(kb.fetch_relations("knife"));
        CHECK(dead->calls() == 0);
    }
    CHECK(before.dump() == after.dump());
    std::filesystem::remove(path);
}

TEST_CASE("whitelist property holds over randomized fixture payloads") {
    std::mt19937 rng(20240817);
    const char* rels[] = {"IsA",     "PartOf",   "MadeOf",  "HasProperty", "UsedFor",
                          "CapableOf", "RelatedTo", "Antonym", "Synonym",   "DerivedFrom"};
    for (int round = 0; round < 50; ++round) {
        json edges = json::array();
        int n = static_cast<int>(rng() % 20);
        for (int i = 0; i < n; ++i) {
            std::string other = "obj" + std::to_string(rng() % 7);
            bool as_head = rng() % 2 == 0;
            edges.push_back(edge(rels[rng() % 10], as_head ? "term" : other,
                                 as_head ? other : "term", double(rng() % 100) / 10.0));
        }
        auto transport =
            std::make_shared<FixtureTransport>(json{{"term", json{{"edges", edges}}}});
        KnowledgeBase kb(transport);
        for (const Triple& t : kb.fetch_relations("term")) {
            bool whitelisted = false;
            for (Predicate p : kAllPredicates)
                if (t.predicate == p) whitelisted = true;
            CHECK(whitelisted);
            CHECK((t.head == "term" || t.tail == "term"));
            CHECK(t.weight >= 0.0);
            CHECK_FALSE(t.head.empty());
            CHECK_FALSE(t.tail.empty());
        }
    }
}

TEST_CASE("concurrent fetches for one key coalesce into a single remote call") {
    auto transport = std::make_shared<FixtureTransport>(json{{"knife", knife_payload()}},
                                                        std::chrono::milliseconds(20));
    KnowledgeBase kb(transport);
    std::vector<std::thread> threads;
    std::atomic<int> sizes{0};
    for (int i = 0; i < 8; ++i)
        threads.emplace_back([&]() { sizes += static_cast<int>(kb.fetch_relations("knife").size()); });
    for (auto& t : threads) t.join();
    CHECK(sizes.load() == 8 * 3);
    CHECK(transport->calls() == 1);
}

TEST_CASE("http transport speaks the /c/en/<key>?limit=N wire shape") {
    httplib::Server server;
    std::string seen_path;
    server.Get("/c/en/knife", [&](const httplib::Request& req, httplib::Response& res) {
        seen_path = req.path + "?limit=" + req.get_param_value("limit");
        res.set_content(knife_payload().dump(), "application/json");
    });
    int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread server_thread([&]() { server.listen_after_bind(); });
    server.wait_until_ready();

    auto transport = std::make_shared<HttpConceptNetTransport>("http://127.0.0.1:" +
                                                               std::to_string(port));
    KnowledgeBase kb(transport);
    auto triples = kb.fetch_relations("knife");
    CHECK(triples.size() == 3);
    CHECK(seen_path == "/c/en/knife?limit=100");

    SECTION("non-200 statuses surface as unavailability") {
        auto bad = std::make_shared<HttpConceptNetTransport>("http://127.0.0.1:" +
                                                             std::to_string(port));
        KnowledgeBase kb2(bad);
        CHECK_THROWS_AS(kb2.fetch_relations("missing_route"), KnowledgeUnavailableError);
    }

    server.stop();
    server_thread.join();
}
