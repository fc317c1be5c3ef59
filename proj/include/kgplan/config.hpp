#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "kgplan/actions.hpp"
#include "kgplan/core.hpp"

namespace kgplan {

using json = nlohmann::json;

/// Penalty subtracted from 1 per object for a Yes on the named property.
/// Unknown on dangerous/poisonous applies half the Yes penalty; every
/// other Unknown counts as No.
struct PropertyPenalties {
    std::map<std::string, double> yes = {
        {"fragile", 0.3}, {"dangerous", 0.3}, {"poisonous", 0.4}};
};

struct ProviderConfig {
    std::string kind;  // "scripted" | "http" (llm); "hash" | "fixture" (embedding)
    std::string path;  // script file or fixture groups file
    std::string base_url;
    std::string model;
    size_t dimension = 64;
    uint64_t seed = 0x9e3779b97f4a7c15ULL;
};

struct KgConfig {
    std::string kind = "fixture";  // "fixture" | "http"
    std::string path;              // fixture payload file
    std::string base_url = "https://api.conceptnet.io";
    size_t limit = 100;
    size_t min_triples = 1;  // below this, the fallback engages
};

struct PipelineConfig {
    double theta = 0.75;
    size_t n_completions = 5;
    size_t max_keywords = 5;
    size_t max_steps = 20;
    double gripper_max_opening = 0.085;  // meters
    double risk_penalty_step = 0.2;      // penalty(k) = step * (k - 1)

    PropertyPenalties penalties;
    bool use_property_penalty = true;  // false = the no-risk ablation
    bool kg_enrichment = true;         // false = empty relation context
    bool risk_mode = false;
    bool materials_mode = false;

    std::vector<std::string> target_properties = {
        "fragile", "hold liquid", "dangerous", "safe", "deformable", "stable", "poisonous"};
    std::vector<std::string> material_labels = {"glass", "plastic", "paper", "wax", "metal"};
    std::vector<std::string> fallback_keywords = {
        "dangerous", "fragile", "toxic", "flammable", "poisonous"};

    ActionVocabulary vocabulary = default_vocabulary();
    std::string robot_capabilities;  // empty = derived from the vocabulary

    std::filesystem::path triple_cache;
    std::filesystem::path embedding_cache;
    std::filesystem::path docs_path;       // fallback document fixture
    std::filesystem::path exemplars_path;  // few-shot exemplar directory

    ProviderConfig llm{.kind = "scripted"};
    ProviderConfig embedding_provider{.kind = "hash"};
    KgConfig kg;

    /// Property names active for the current mode.
    const std::vector<std::string>& active_properties() const {
        return materials_mode ? material_labels : target_properties;
    }
};

inline PipelineConfig config_from_json(const json& doc) {
    PipelineConfig cfg;
    cfg.theta = doc.value("theta", cfg.theta);
    cfg.n_completions = doc.value("n_completions", cfg.n_completions);
    cfg.max_keywords = doc.value("max_keywords", cfg.max_keywords);
    cfg.max_steps = doc.value("max_steps", cfg.max_steps);
    cfg.gripper_max_opening = doc.value("gripper_max_opening", cfg.gripper_max_opening);
    cfg.risk_penalty_step = doc.value("risk_penalty_step", cfg.risk_penalty_step);
    if (doc.contains("penalties"))
        cfg.penalties.yes = doc.at("penalties").get<std::map<std::string, double>>();
    cfg.use_property_penalty = doc.value("use_property_penalty", cfg.use_property_penalty);
    cfg.kg_enrichment = doc.value("kg_enrichment", cfg.kg_enrichment);
    cfg.risk_mode = doc.value("risk_mode", cfg.risk_mode);
    cfg.materials_mode = doc.value("materials_mode", cfg.materials_mode);
    if (doc.contains("target_properties"))
        cfg.target_properties = doc.at("target_properties").get<std::vector<std::string>>();
    if (doc.contains("material_labels"))
        cfg.material_labels = doc.at("material_labels").get<std::vector<std::string>>();
    if (doc.contains("fallback_keywords"))
        cfg.fallback_keywords = doc.at("fallback_keywords").get<std::vector<std::string>>();
    if (doc.contains("vocabulary"))
        cfg.vocabulary = doc.at("vocabulary").get<ActionVocabulary>();
    cfg.robot_capabilities = doc.value("robot_capabilities", cfg.robot_capabilities);
    cfg.triple_cache = doc.value("triple_cache", std::string{});
    cfg.embedding_cache = doc.value("embedding_cache", std::string{});
    cfg.docs_path = doc.value("docs_path", std::string{});
    cfg.exemplars_path = doc.value("exemplars_path", std::string{});

    auto read_provider = [](const json& p, ProviderConfig& out) {
        out.kind = p.value("kind", out.kind);
        out.path = p.value("path", out.path);
        out.base_url = p.value("base_url", out.base_url);
        out.model = p.value("model", out.model);
        out.dimension = p.value("dimension", out.dimension);
        out.seed = p.value("seed", out.seed);
    };
    if (doc.contains("llm")) read_provider(doc.at("llm"), cfg.llm);
    if (doc.contains("embedding")) read_provider(doc.at("embedding"), cfg.embedding_provider);
    if (doc.contains("kg")) {
        const json& k = doc.at("kg");
        cfg.kg.kind = k.value("kind", cfg.kg.kind);
        cfg.kg.path = k.value("path", cfg.kg.path);
        cfg.kg.base_url = k.value("base_url", cfg.kg.base_url);
        cfg.kg.limit = k.value("limit", cfg.kg.limit);
        cfg.kg.min_triples = k.value("min_triples", cfg.kg.min_triples);
    }
    return cfg;
}

/// Rebases the config's relative file references onto `base_dir`.
inline void resolve_config_paths(PipelineConfig& cfg, const std::filesystem::path& base_dir) {
    auto rebase = [&](std::filesystem::path& p) {
        if (!p.empty() && p.is_relative()) p = base_dir / p;
    };
    auto rebase_str = [&](std::string& s) {
        if (s.empty()) return;
        std::filesystem::path p = s;
        if (p.is_relative()) s = (base_dir / p).string();
    };
    rebase(cfg.triple_cache);
    rebase(cfg.embedding_cache);
    rebase(cfg.docs_path);
    rebase(cfg.exemplars_path);
    rebase_str(cfg.kg.path);
    rebase_str(cfg.llm.path);
    rebase_str(cfg.embedding_provider.path);
}

inline PipelineConfig config_from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgumentError("config file not found: " + path.string());
    PipelineConfig cfg = config_from_json(json::parse(in));
    resolve_config_paths(cfg, path.parent_path());
    return cfg;
}

}  // namespace kgplan
