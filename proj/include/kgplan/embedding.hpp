#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "kgplan/cache.hpp"
#include "kgplan/core.hpp"

namespace kgplan::embedding {

using EmbeddingVector = std::vector<double>;

inline double cosine(const EmbeddingVector& u, const EmbeddingVector& v) {
    if (u.size() != v.size())
        throw InvalidArgumentError("cosine: dimension mismatch (" + std::to_string(u.size()) +
                                   " vs " + std::to_string(v.size()) + ")");
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    if (nu == 0.0 || nv == 0.0) throw InvalidArgumentError("cosine: zero-norm vector");
    return dot / (std::sqrt(nu) * std::sqrt(nv));
}

/// Stable 64-bit FNV-1a, used for cache keys and provider seeding.
inline uint64_t fnv1a(std::string_view s) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string hash_hex(std::string_view s) {
    static const char* digits = "0123456789abcdef";
    uint64_t h = fnv1a(s);
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<size_t>(i)] = digits[h & 0xF];
        h >>= 4;
    }
    return out;
}

// ── Providers ───────────────────────────────────────────────────

class Provider {
public:
    virtual ~Provider() = default;
    virtual EmbeddingVector embed(const std::string& text) = 0;
    virtual size_t dimension() const = 0;
    virtual std::string name() const = 0;
};

namespace detail {

inline EmbeddingVector seeded_unit_vector(uint64_t seed, size_t dim) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    EmbeddingVector v(dim);
    double norm2 = 0.0;
    do {
        norm2 = 0.0;
        for (double& x : v) {
            x = gauss(rng);
            norm2 += x * x;
        }
    } while (norm2 == 0.0);
    double inv = 1.0 / std::sqrt(norm2);
    for (double& x : v) x *= inv;
    return v;
}

}  // namespace detail

/// Deterministic test provider: one seeded pseudo-random unit vector per
/// distinct text. Distinct texts land nearly orthogonal at dimension 64.
class HashProvider : public Provider {
public:
    explicit HashProvider(size_t dim = 64, uint64_t seed = 0x9e3779b97f4a7c15ULL,
                          std::chrono::milliseconds latency = {})
        : dim_(dim), seed_(seed), latency_(latency) {}

    EmbeddingVector embed(const std::string& text) override {
        if (latency_.count() > 0) std::this_thread::sleep_for(latency_);
        return detail::seeded_unit_vector(seed_ ^ fnv1a(text), dim_);
    }

    size_t dimension() const override { return dim_; }
    std::string name() const override { return "hash"; }

private:
    size_t dim_;
    uint64_t seed_;
    std::chrono::milliseconds latency_;
};

/// Fixture provider with controlled pairwise similarity. Listed texts are
/// placed at an exact cosine `alpha` from their group's anchor direction;
/// unlisted texts fall back to the plain hashed vector. An entry with
/// alpha = 1 sits exactly on the anchor, so cosine(text, anchor) == alpha
/// up to floating-point rounding.
class FixtureProvider : public Provider {
public:
    struct Entry {
        std::string group;
        double alpha = 1.0;
    };

    FixtureProvider(std::map<std::string, Entry> entries, size_t dim = 64,
                    uint64_t seed = 0x9e3779b97f4a7c15ULL,
                    std::chrono::milliseconds latency = {})
        : entries_(std::move(entries)), dim_(dim), seed_(seed), latency_(latency) {}

    static FixtureProvider from_json(const nlohmann::json& doc) {
        std::map<std::string, Entry> entries;
        if (doc.contains("entries")) {
            for (auto it = doc.at("entries").begin(); it != doc.at("entries").end(); ++it) {
                Entry e;
                e.group = it.value().at("group").get<std::string>();
                e.alpha = it.value().value("alpha", 1.0);
                entries[it.key()] = e;
            }
        }
        return FixtureProvider(std::move(entries), doc.value("dim", size_t{64}),
                               doc.value("seed", uint64_t{0x9e3779b97f4a7c15ULL}));
    }

    static FixtureProvider from_file(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw InvalidArgumentError("embedding fixture not found: " + path.string());
        nlohmann::json doc = nlohmann::json::parse(in);
        return from_json(doc);
    }

    EmbeddingVector embed(const std::string& text) override {
        if (latency_.count() > 0) std::this_thread::sleep_for(latency_);
        auto it = entries_.find(text);
        if (it == entries_.end())
            return detail::seeded_unit_vector(seed_ ^ fnv1a(text), dim_);
        const Entry& e = it->second;
        EmbeddingVector anchor = detail::seeded_unit_vector(seed_ ^ fnv1a("group:" + e.group), dim_);
        if (e.alpha >= 1.0) return anchor;
        // Orthogonalize the text's own direction against the anchor so the
        // resulting cosine with the anchor is exactly alpha.
        EmbeddingVector noise = detail::seeded_unit_vector(seed_ ^ fnv1a(text), dim_);
        double proj = 0.0;
        for (size_t i = 0; i < dim_; ++i) proj += noise[i] * anchor[i];
        double norm2 = 0.0;
        for (size_t i = 0; i < dim_; ++i) {
            noise[i] -= proj * anchor[i];
            norm2 += noise[i] * noise[i];
        }
        double beta = std::sqrt(std::max(0.0, 1.0 - e.alpha * e.alpha));
        double inv = norm2 > 0.0 ? 1.0 / std::sqrt(norm2) : 0.0;
        EmbeddingVector out(dim_);
        for (size_t i = 0; i < dim_; ++i) out[i] = e.alpha * anchor[i] + beta * inv * noise[i];
        return out;
    }

    size_t dimension() const override { return dim_; }
    std::string name() const override { return "fixture"; }

private:
    std::map<std::string, Entry> entries_;
    size_t dim_;
    uint64_t seed_;
    std::chrono::milliseconds latency_;
};

/// Provider that always fails; stands in for an unreachable backend.
class FailingProvider : public Provider {
public:
    explicit FailingProvider(size_t dim = 64) : dim_(dim) {}
    EmbeddingVector embed(const std::string&) override {
        throw TransportError("embedding backend unreachable");
    }
    size_t dimension() const override { return dim_; }
    std::string name() const override { return "failing"; }

private:
    size_t dim_;
};

// ── Caching front-end ───────────────────────────────────────────

/// Memoizing text-to-vector service. Cache hits perform zero provider
/// calls; misses are computed once per key even under concurrency.
class Embedder {
public:
    explicit Embedder(std::shared_ptr<Provider> provider, std::filesystem::path cache_path = {})
        : provider_(std::move(provider)), cache_(std::move(cache_path)) {}

    EmbeddingVector embed(const std::string& text) {
        if (trim(text).empty()) throw InvalidArgumentError("embed: empty text");
        std::string key = hash_hex(text);
        if (auto rec = cache_.get(key)) return rec->at("vector").get<EmbeddingVector>();
        bool owner = flight_.acquire(key);
        if (!owner) {
            if (auto rec = cache_.get(key)) return rec->at("vector").get<EmbeddingVector>();
            owner = flight_.acquire(key);
            if (!owner) throw EmbeddingUnavailableError("embedding never materialized: " + text);
        }
        EmbeddingVector v;
        try {
            v = provider_->embed(text);
            ++provider_calls_;
        } catch (const std::exception& e) {
            flight_.release(key);
            throw EmbeddingUnavailableError(std::string("provider failed with cache miss: ") +
                                            e.what());
        }
        cache_.put(key, {{"text", text}, {"vector", v}});
        flight_.release(key);
        return v;
    }

    size_t dimension() const { return provider_->dimension(); }
    size_t provider_calls() const { return provider_calls_.load(); }
    size_t cache_size() const { return cache_.size(); }
    void clear_cache() { cache_.clear(); }
    const std::filesystem::path& cache_path() const { return cache_.path(); }
    const std::string provider_name() const { return provider_->name(); }

private:
    std::shared_ptr<Provider> provider_;
    JsonlCache cache_;
    SingleFlight flight_;
    std::atomic<size_t> provider_calls_{0};
};

// ── Threshold filtering ─────────────────────────────────────────

struct FilterConfig {
    double theta = 0.75;
    std::vector<std::string> anchors;
};

/// Keeps a triple when the best cosine between its rendered text and any
/// anchor strictly exceeds theta. Input order is preserved.
inline std::vector<Triple> filter_triples(Embedder& embedder, const std::vector<Triple>& triples,
                                          const FilterConfig& config) {
    if (config.anchors.empty())
        throw InvalidArgumentError("filter_triples: anchors must be non-empty");
    std::vector<EmbeddingVector> anchor_vecs;
    anchor_vecs.reserve(config.anchors.size());
    for (const std::string& a : config.anchors) anchor_vecs.push_back(embedder.embed(a));

    std::vector<Triple> kept;
    for (const Triple& t : triples) {
        EmbeddingVector v = embedder.embed(t.render());
        double best = -1.0;
        for (const EmbeddingVector& a : anchor_vecs) best = std::max(best, cosine(v, a));
        if (best > config.theta) kept.push_back(t);
    }
    return kept;
}

}  // namespace kgplan::embedding
