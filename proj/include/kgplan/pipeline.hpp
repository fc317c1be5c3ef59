#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "kgplan/config.hpp"
#include "kgplan/core.hpp"
#include "kgplan/embedding.hpp"
#include "kgplan/fallback.hpp"
#include "kgplan/knowledge.hpp"
#include "kgplan/llm.hpp"
#include "kgplan/ope.hpp"
#include "kgplan/planner.hpp"
#include "kgplan/sim.hpp"
#include "kgplan/urp.hpp"

namespace kgplan {

struct PipelineResult {
    ope::PropertyMap properties;
    ope::RiskMap risks;
    std::vector<std::string> keywords;
    urp::StructuredRequest structured;
    planner::Policy policy;

    json to_json() const {
        return {{"properties", ope::properties_to_json(properties)},
                {"risks", ope::risks_to_json(risks)},
                {"keywords", keywords},
                {"structured_request", structured.to_json()},
                {"policy", policy.to_json()}};
    }
};

/// Loads exemplar blocks separated by lines containing only "---".
inline std::vector<std::string> load_exemplars(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgumentError("exemplar file not found: " + path.string());
    std::vector<std::string> blocks;
    std::string current, line;
    while (std::getline(in, line)) {
        if (trim(line) == "---") {
            if (!trim(current).empty()) blocks.push_back(trim(current));
            current.clear();
        } else {
            current += line + "\n";
        }
    }
    if (!trim(current).empty()) blocks.push_back(trim(current));
    return blocks;
}

/// End-to-end engine: object property extraction, request processing and
/// action planning over shared knowledge/embedding caches.
class Pipeline {
public:
    Pipeline(PipelineConfig cfg, std::shared_ptr<knowledge::KnowledgeBase> kb,
             std::shared_ptr<embedding::Embedder> embedder,
             std::shared_ptr<llm::ChatBackend> backend,
             std::shared_ptr<fallback::DocumentSource> docs = nullptr,
             std::shared_ptr<fallback::TripleExtractor> extractor = nullptr)
        : cfg_(std::move(cfg)),
          kb_(std::move(kb)),
          embedder_(std::move(embedder)),
          backend_(std::move(backend)),
          docs_(std::move(docs)),
          extractor_(std::move(extractor)) {}

    /// KG relations for one object, engaging the document fallback when
    /// the graph yields fewer triples than the configured minimum.
    std::vector<Triple> relations_for(const ConceptKey& object) {
        if (!cfg_.kg_enrichment) return {};
        std::vector<Triple> rels;
        try {
            rels = kb_->fetch_relations(object, cfg_.kg.limit);
        } catch (const KnowledgeUnavailableError& e) {
            log::warn(std::string("ope: ") + e.what());
        }
        if (rels.size() < cfg_.kg.min_triples && docs_ && extractor_) {
            for (Triple& t :
                 fallback::fallback_relations(object, cfg_.fallback_keywords, *docs_, *extractor_))
                rels.push_back(std::move(t));
        }
        return rels;
    }

    /// Theta-filtered relations per object, anchored on the active
    /// property set (Algorithm 2 step 1 filtering).
    std::map<ConceptKey, std::vector<Triple>> gather_property_relations(
        const std::vector<ConceptKey>& objects) {
        std::map<ConceptKey, std::vector<Triple>> out;
        embedding::FilterConfig filter{cfg_.theta, cfg_.active_properties()};
        for (const ConceptKey& object : objects) {
            std::vector<Triple> rels = relations_for(object);
            out[object] = rels.empty() ? rels
                                       : embedding::filter_triples(*embedder_, rels, filter);
        }
        return out;
    }

    ope::PropertyMap run_ope(const sim::SceneState& scene) {
        auto objects = scene.movable_names();
        auto relations = gather_property_relations(objects);
        return ope::extract_properties(objects, relations, *backend_, cfg_.active_properties(),
                                       &usage_);
    }

    ope::RiskMap run_risk(const sim::SceneState& scene, const std::string& request) {
        auto objects = scene.movable_names();
        auto relations = gather_property_relations(objects);
        return ope::assess_risk(objects, request, relations, *backend_, &usage_);
    }

    urp::ContextBundle build_bundle(const std::string& request, const sim::SceneState& scene,
                                    const std::string& properties_document,
                                    const std::vector<std::string>& keywords) {
        urp::ContextBundle bundle;
        bundle.robot_capabilities = cfg_.robot_capabilities.empty()
                                        ? urp::default_capabilities(cfg_.vocabulary)
                                        : cfg_.robot_capabilities;
        bundle.properties_document = properties_document;
        if (cfg_.kg_enrichment) {
            bundle.keyword_relations =
                urp::gather_keyword_relations(keywords, request, *kb_, *embedder_, cfg_.theta);
            bundle.object_relations = urp::gather_object_relations(
                scene.movable_names(), keywords, *kb_, *embedder_, cfg_.theta);
        }
        bundle.examples = cfg_.exemplars_path.empty()
                              ? std::vector<std::string>{urp::default_exemplar()}
                              : load_exemplars(cfg_.exemplars_path);
        return bundle;
    }

    /// Full episode: OPE (properties or risk), URP, then the action loop.
    PipelineResult run(const std::string& request, const sim::SceneState& scene) {
        PipelineResult result;
        std::string properties_document;
        if (cfg_.risk_mode) {
            result.risks = run_risk(scene, request);
            properties_document = ope::risks_to_json(result.risks).dump();
        } else {
            result.properties = run_ope(scene);
            properties_document = ope::properties_to_json(result.properties).dump();
        }

        result.keywords = urp::extract_keywords(request, *backend_, cfg_.max_keywords, &usage_);
        urp::ContextBundle bundle = build_bundle(request, scene, properties_document,
                                                 result.keywords);
        std::set<ConceptKey> known;
        for (const ConceptKey& name : scene.names()) known.insert(name);
        result.structured = urp::interpret(request, bundle, *backend_, known, cfg_.vocabulary,
                                           &usage_);

        result.policy = planner::plan(result.structured, scene, *backend_, result.properties,
                                      result.risks, cfg_, &usage_);
        return result;
    }

    const PipelineConfig& config() const { return cfg_; }
    knowledge::KnowledgeBase& kb() { return *kb_; }
    embedding::Embedder& embedder() { return *embedder_; }
    llm::ChatBackend& backend() { return *backend_; }
    const llm::UsageLog& usage() const { return usage_; }

private:
    PipelineConfig cfg_;
    std::shared_ptr<knowledge::KnowledgeBase> kb_;
    std::shared_ptr<embedding::Embedder> embedder_;
    std::shared_ptr<llm::ChatBackend> backend_;
    std::shared_ptr<fallback::DocumentSource> docs_;
    std::shared_ptr<fallback::TripleExtractor> extractor_;
    llm::UsageLog usage_;
};

}  // namespace kgplan
