#pragma once

#include <memory>

#include "kgplan/http.hpp"
#include "kgplan/pipeline.hpp"

namespace kgplan {

inline std::shared_ptr<knowledge::Transport> build_transport(const KgConfig& kg) {
    if (kg.kind == "fixture") {
        if (kg.path.empty())
            return std::make_shared<knowledge::FixtureTransport>();
        return std::make_shared<knowledge::FixtureTransport>(
            knowledge::FixtureTransport::from_file(kg.path));
    }
    if (kg.kind == "http")
        return std::make_shared<knowledge::HttpConceptNetTransport>(kg.base_url);
    throw InvalidArgumentError("unknown kg transport kind: " + kg.kind);
}

inline std::shared_ptr<embedding::Provider> build_embedding_provider(const ProviderConfig& cfg) {
    if (cfg.kind == "hash")
        return std::make_shared<embedding::HashProvider>(cfg.dimension, cfg.seed);
    if (cfg.kind == "fixture") {
        if (cfg.path.empty())
            throw InvalidArgumentError("fixture embedding provider needs a groups file");
        return std::make_shared<embedding::FixtureProvider>(
            embedding::FixtureProvider::from_file(cfg.path));
    }
    throw InvalidArgumentError("unknown embedding provider kind: " + cfg.kind);
}

inline std::shared_ptr<llm::ChatBackend> build_backend(const ProviderConfig& cfg) {
    if (cfg.kind == "scripted") {
        if (cfg.path.empty())
            throw InvalidArgumentError("scripted backend needs a script file");
        return std::make_shared<llm::ScriptedBackend>(
            std::make_shared<const llm::Script>(llm::Script::from_file(cfg.path)));
    }
    if (cfg.kind == "http") {
        const char* key = std::getenv("KGPLAN_API_KEY");
        return std::make_shared<llm::HttpChatBackend>(cfg.base_url, cfg.model,
                                                      key ? key : "");
    }
    throw InvalidArgumentError("unknown llm backend kind: " + cfg.kind);
}

inline std::shared_ptr<knowledge::KnowledgeBase> build_knowledge_base(const PipelineConfig& cfg) {
    knowledge::KnowledgeConfig kcfg{cfg.kg.limit, cfg.kg.min_triples};
    return std::make_shared<knowledge::KnowledgeBase>(build_transport(cfg.kg), cfg.triple_cache,
                                                      kcfg);
}

inline std::shared_ptr<embedding::Embedder> build_embedder(const PipelineConfig& cfg) {
    return std::make_shared<embedding::Embedder>(build_embedding_provider(cfg.embedding_provider),
                                                 cfg.embedding_cache);
}

/// Builds a full pipeline from configuration alone.
inline Pipeline build_pipeline(const PipelineConfig& cfg) {
    std::shared_ptr<fallback::DocumentSource> docs;
    std::shared_ptr<fallback::TripleExtractor> extractor;
    if (!cfg.docs_path.empty()) {
        docs = std::make_shared<fallback::FixtureDocumentSource>(
            fallback::FixtureDocumentSource::from_file(cfg.docs_path));
        extractor = std::make_shared<fallback::PatternExtractor>();
    }
    return Pipeline(cfg, build_knowledge_base(cfg), build_embedder(cfg), build_backend(cfg),
                    std::move(docs), std::move(extractor));
}

}  // namespace kgplan
