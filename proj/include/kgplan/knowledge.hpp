#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "kgplan/cache.hpp"
#include "kgplan/core.hpp"

namespace kgplan {

inline void to_json(nlohmann::json& j, const Triple& t) {
    j = nlohmann::json{{"head", t.head},
                       {"predicate", std::string(predicate_label(t.predicate))},
                       {"tail", t.tail},
                       {"weight", t.weight},
                       {"origin", t.origin == TripleOrigin::kg ? "kg" : "fallback"}};
}

inline void from_json(const nlohmann::json& j, Triple& t) {
    t.head = j.at("head").get<std::string>();
    auto pred = parse_predicate(j.at("predicate").get<std::string>());
    if (!pred) throw ValidationError("unknown predicate: " + j.at("predicate").dump());
    t.predicate = *pred;
    t.tail = j.at("tail").get<std::string>();
    t.weight = j.value("weight", 0.0);
    t.origin = j.value("origin", "kg") == "fallback" ? TripleOrigin::fallback : TripleOrigin::kg;
}

namespace knowledge {

using json = nlohmann::json;

/// Parses a ConceptNet-style edge list payload. Edges whose predicate is
/// outside the whitelist are skipped; structurally broken edges raise a
/// parse error carrying the offending fragment.
inline std::vector<Triple> parse_edge_payload(const json& payload) {
    if (!payload.is_object() || !payload.contains("edges") || !payload.at("edges").is_array())
        throw PayloadParseError("payload has no edge list", payload.dump().substr(0, 200));
    std::vector<Triple> out;
    for (const json& edge : payload.at("edges")) {
        if (!edge.is_object() || !edge.contains("rel") || !edge.contains("start") ||
            !edge.contains("end"))
            throw PayloadParseError("malformed edge", edge.dump().substr(0, 200));
        const json& rel = edge.at("rel");
        const json& start = edge.at("start");
        const json& end = edge.at("end");
        if (!rel.contains("label") || !start.contains("label") || !end.contains("label"))
            throw PayloadParseError("edge missing labels", edge.dump().substr(0, 200));
        auto pred = parse_predicate(rel.at("label").get<std::string>());
        if (!pred) continue;  // predicate outside the whitelist
        Triple t;
        t.head = normalize_term(start.at("label").get<std::string>());
        t.predicate = *pred;
        t.tail = normalize_term(end.at("label").get<std::string>());
        t.weight = edge.value("weight", 1.0);
        if (t.weight < 0) throw PayloadParseError("negative edge weight", edge.dump().substr(0, 200));
        t.origin = TripleOrigin::kg;
        out.push_back(std::move(t));
    }
    return out;
}

// ── Transports ──────────────────────────────────────────────────

class Transport {
public:
    virtual ~Transport() = default;
    /// Fetches the raw edge payload for a concept key. Throws
    /// TransportError when the remote is unreachable.
    virtual json get(const ConceptKey& key, size_t limit) = 0;
    virtual std::string kind() const = 0;
};

/// Replays recorded payloads from a JSON document {"<key>": {"edges": [...]}}.
/// Unknown keys yield an empty edge list (absent KG entity). Optional
/// latency models remote round-trip time; the call counter instruments
/// cache contracts.
class FixtureTransport : public Transport {
public:
    FixtureTransport() = default;

    explicit FixtureTransport(json payloads, std::chrono::milliseconds latency = {})
        : payloads_(std::move(payloads)), latency_(latency) {}

    static FixtureTransport from_file(const std::filesystem::path& path,
                                      std::chrono::milliseconds latency = {}) {
        std::ifstream in(path);
        if (!in) throw InvalidArgumentError("kg fixture not found: " + path.string());
        return FixtureTransport(json::parse(in), latency);
    }

    json get(const ConceptKey& key, size_t) override {
        ++calls_;
        if (latency_.count() > 0) std::this_thread::sleep_for(latency_);
        if (unreachable_) throw TransportError("fixture transport marked unreachable");
        if (!payloads_.contains(key)) return json{{"edges", json::array()}};
        return payloads_.at(key);
    }

    std::string kind() const override { return "fixture"; }

    size_t calls() const { return calls_.load(); }
    void set_unreachable(bool v) { unreachable_ = v; }
    void set_latency(std::chrono::milliseconds ms) { latency_ = ms; }

private:
    json payloads_ = json::object();
    std::chrono::milliseconds latency_{};
    std::atomic<size_t> calls_{0};
    bool unreachable_ = false;
};

/// Live HTTP client for a ConceptNet-compatible endpoint:
/// GET <base>/c/en/<key>?limit=N. Declared here, defined in http.hpp to
/// keep httplib out of translation units that never talk to a network.
class HttpTransport;

// ── Knowledge base ──────────────────────────────────────────────

struct KnowledgeConfig {
    size_t default_limit = 100;
    /// Fallback triggers when a fetch yields fewer triples than this.
    size_t min_triples = 1;
};

/// Cache-first relation lookup over a pluggable transport. A cache hit
/// performs zero transport calls; concurrent misses for one key are
/// coalesced into a single fetch.
class KnowledgeBase {
public:
    KnowledgeBase(std::shared_ptr<Transport> transport, std::filesystem::path cache_path = {},
                  KnowledgeConfig config = {})
        : transport_(std::move(transport)), cache_(std::move(cache_path)), config_(config) {}

    /// Returns at most `limit` whitelisted triples in which `term` appears
    /// as head or tail.
    std::vector<Triple> fetch_relations(const ConceptKey& term, size_t limit = 0) {
        if (limit == 0) limit = config_.default_limit;
        if (limit < 1) throw InvalidArgumentError("fetch_relations: limit must be >= 1");
        if (auto rec = cache_.get(term)) return truncated(*rec, limit);

        bool owner = flight_.acquire(term);
        if (!owner) {
            if (auto rec = cache_.get(term)) return truncated(*rec, limit);
            owner = flight_.acquire(term);
            if (!owner) throw KnowledgeUnavailableError("coalesced fetch failed for " + term);
        }

        json payload;
        try {
            payload = transport_->get(term, config_.default_limit);
        } catch (const TransportError& e) {
            flight_.release(term);
            throw KnowledgeUnavailableError("remote unreachable and cache miss for '" + term +
                                            "': " + e.what());
        } catch (...) {
            flight_.release(term);
            throw;
        }

        std::vector<Triple> triples;
        try {
            for (Triple& t : parse_edge_payload(payload)) {
                if (t.head != term && t.tail != term) continue;
                triples.push_back(std::move(t));
                if (triples.size() >= config_.default_limit) break;
            }
        } catch (...) {
            flight_.release(term);
            throw;
        }

        auto now = std::chrono::system_clock::now().time_since_epoch();
        cache_.put(term, {{"fetched_at",
                           std::chrono::duration_cast<std::chrono::seconds>(now).count()},
                          {"triples", triples}});
        flight_.release(term);
        if (triples.size() > limit) triples.resize(limit);
        return triples;
    }

    size_t cache_size() const { return cache_.size(); }
    void clear_cache() { cache_.clear(); }
    const std::filesystem::path& cache_path() const { return cache_.path(); }
    std::string transport_kind() const { return transport_->kind(); }
    const KnowledgeConfig& config() const { return config_; }

private:
    std::vector<Triple> truncated(const json& rec, size_t limit) const {
        auto triples = rec.at("triples").get<std::vector<Triple>>();
        if (triples.size() > limit) triples.resize(limit);
        return triples;
    }

    std::shared_ptr<Transport> transport_;
    JsonlCache cache_;
    SingleFlight flight_;
    KnowledgeConfig config_;
};

}  // namespace knowledge
}  // namespace kgplan
