#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "kgplan/factory.hpp"
#include "kgplan/pipeline.hpp"

namespace kgplan::harness {

namespace fs = std::filesystem;
using json = nlohmann::json;

// ── Metrics ─────────────────────────────────────────────────────

/// 2sr/(s+r) over safe-task success s and unsafe-task rejection r;
/// defined as 0 when both are 0.
inline double harmonic_mean(double safe_success, double unsafe_rejection) {
    if (safe_success < 0.0 || safe_success > 1.0 || unsafe_rejection < 0.0 ||
        unsafe_rejection > 1.0)
        throw InvalidArgumentError("harmonic_mean: inputs must lie in [0,1]");
    if (safe_success == 0.0 && unsafe_rejection == 0.0) return 0.0;
    return 2.0 * safe_success * unsafe_rejection / (safe_success + unsafe_rejection);
}

// ── Fixtures ────────────────────────────────────────────────────

inline const std::vector<std::string>& known_categories() {
    static const std::vector<std::string> cats = {"unambiguous", "ambiguous", "implicit",
                                                  "risk_aware",  "materials", "toxic",
                                                  "safe",        "unsafe"};
    return cats;
}

struct TaskFixture {
    std::string id;
    std::string category;
    std::string request;
    std::string mode = "properties";  // properties | materials | risk
    fs::path scene;
    fs::path expectation;
    fs::path script;
    fs::path exemplars;
};

struct SuiteManifest {
    std::string name;
    fs::path config;  // pipeline config shared by the suite
    std::vector<TaskFixture> tasks;

    static SuiteManifest from_file(const fs::path& path) {
        std::ifstream in(path);
        if (!in) throw SuiteError("suite manifest not found: " + path.string());
        json doc = json::parse(in, nullptr, false);
        if (doc.is_discarded()) throw SuiteError("suite manifest is not JSON: " + path.string());

        fs::path base = path.parent_path();
        SuiteManifest m;
        m.name = doc.value("name", path.stem().string());
        if (doc.contains("config")) m.config = base / doc.at("config").get<std::string>();
        for (const json& t : doc.value("tasks", json::array())) {
            TaskFixture task;
            task.id = t.at("id").get<std::string>();
            task.category = t.at("category").get<std::string>();
            task.request = t.at("request").get<std::string>();
            task.mode = t.value("mode", std::string("properties"));
            task.scene = base / t.at("scene").get<std::string>();
            task.expectation = base / t.at("expectation").get<std::string>();
            task.script = base / t.at("script").get<std::string>();
            if (t.contains("exemplars"))
                task.exemplars = base / t.at("exemplars").get<std::string>();
            m.tasks.push_back(std::move(task));
        }
        return m;
    }
};

/// Validates every reference before the first trial runs.
inline void preflight(const SuiteManifest& manifest) {
    if (manifest.tasks.empty()) throw SuiteError("suite has no tasks: " + manifest.name);
    for (const TaskFixture& t : manifest.tasks) {
        if (std::find(known_categories().begin(), known_categories().end(), t.category) ==
            known_categories().end())
            throw SuiteError("task " + t.id + " has unknown category: " + t.category);
        for (const fs::path& p : {t.scene, t.expectation, t.script})
            if (!fs::exists(p))
                throw SuiteError("task " + t.id + " references missing file: " + p.string());
        if (!t.exemplars.empty() && !fs::exists(t.exemplars))
            throw SuiteError("task " + t.id + " references missing file: " + t.exemplars.string());
    }
    if (!manifest.config.empty() && !fs::exists(manifest.config))
        throw SuiteError("suite config missing: " + manifest.config.string());
}

// ── Reports ─────────────────────────────────────────────────────

struct TrialResult {
    size_t index = 0;
    bool success = false;
    std::string error;
    json policy;  // null when the pipeline failed before planning
};

struct TrialReport {
    std::string id;
    std::string category;
    std::string request;
    size_t trials = 0;
    size_t successes = 0;
    double success_rate = 0.0;
    std::vector<TrialResult> results;

    json to_json() const {
        json arr = json::array();
        for (const TrialResult& r : results)
            arr.push_back(json{{"trial", r.index},
                               {"success", r.success},
                               {"error", r.error},
                               {"policy", r.policy}});
        return {{"id", id},           {"category", category},
                {"request", request}, {"trials", trials},
                {"successes", successes}, {"success_rate", success_rate},
                {"trial_results", arr}};
    }
};

struct SuiteReport {
    std::string suite;
    size_t trials_per_task = 0;
    std::vector<TrialReport> tasks;

    std::map<std::string, std::vector<double>> rates_by_category() const {
        std::map<std::string, std::vector<double>> out;
        for (const TrialReport& t : tasks) out[t.category].push_back(t.success_rate);
        return out;
    }

    double category_mean(const std::string& category) const {
        auto by_cat = rates_by_category();
        auto it = by_cat.find(category);
        if (it == by_cat.end() || it->second.empty()) return 0.0;
        double sum = 0.0;
        for (double r : it->second) sum += r;
        return sum / static_cast<double>(it->second.size());
    }

    json to_json() const {
        json task_arr = json::array();
        for (const TrialReport& t : tasks) task_arr.push_back(t.to_json());
        json categories = json::object();
        for (const auto& [cat, rates] : rates_by_category())
            categories[cat] = json{{"tasks", rates.size()},
                                   {"mean_success_rate", category_mean(cat)}};
        json out = {{"suite", suite},
                    {"trials_per_task", trials_per_task},
                    {"tasks", task_arr},
                    {"categories", categories}};
        auto by_cat = rates_by_category();
        if (by_cat.count("safe") && by_cat.count("unsafe")) {
            double s = category_mean("safe");
            double r = category_mean("unsafe");
            out["safety"] = json{{"safe_success", s},
                                 {"unsafe_rejection", r},
                                 {"harmonic_mean", harmonic_mean(s, r)}};
        }
        return out;
    }
};

// ── Suite runner ────────────────────────────────────────────────

struct SuiteOptions {
    size_t trials_per_task = 10;
    size_t jobs = 4;
};

namespace detail {

inline PipelineConfig task_config(PipelineConfig base, const TaskFixture& task) {
    if (task.mode == "materials") {
        base.materials_mode = true;
        base.risk_mode = false;
    } else if (task.mode == "risk") {
        base.risk_mode = true;
        base.materials_mode = false;
    } else if (task.mode != "properties") {
        throw SuiteError("task " + task.id + " has unknown mode: " + task.mode);
    }
    if (!task.exemplars.empty()) base.exemplars_path = task.exemplars;
    return base;
}

inline TrialReport run_task(const TaskFixture& task, const PipelineConfig& base_cfg,
                            const std::shared_ptr<knowledge::KnowledgeBase>& kb,
                            const std::shared_ptr<embedding::Embedder>& embedder,
                            const std::shared_ptr<fallback::DocumentSource>& docs,
                            const std::shared_ptr<fallback::TripleExtractor>& extractor,
                            size_t trials) {
    TrialReport report;
    report.id = task.id;
    report.category = task.category;
    report.request = task.request;
    report.trials = trials;

    PipelineConfig cfg = task_config(base_cfg, task);
    sim::SceneState scene_template = sim::load_scene_file(task.scene);
    sim::Expectation expectation = sim::Expectation::from_file(task.expectation);
    auto script = std::make_shared<const llm::Script>(llm::Script::from_file(task.script));

    for (size_t trial = 0; trial < trials; ++trial) {
        TrialResult result;
        result.index = trial;
        try {
            // Fresh backend per trial so script cursors restart; caches
            // stay shared across trials and tasks.
            auto backend = std::make_shared<llm::ScriptedBackend>(script);
            Pipeline pipeline(cfg, kb, embedder, backend, docs, extractor);
            PipelineResult outcome = pipeline.run(task.request, scene_template);
            result.policy = outcome.policy.to_json();
            sim::SceneState world = scene_template;
            sim::run_actions(outcome.policy.actions(), world);
            result.success = sim::judge(world, expectation);
        } catch (const Error& e) {
            result.success = false;
            result.error = e.what();
            log::warn("trial " + task.id + "#" + std::to_string(trial) + " failed: " + e.what());
        }
        if (!result.success && result.error.empty()) result.error = "expectation not met";
        report.results.push_back(std::move(result));
    }
    for (const TrialResult& r : report.results)
        if (r.success) ++report.successes;
    report.success_rate =
        static_cast<double>(report.successes) / static_cast<double>(report.trials);
    return report;
}

}  // namespace detail

/// Runs every task of the suite `options.trials_per_task` times and
/// aggregates per-category success rates. Tasks execute on a worker pool;
/// results merge deterministically in manifest order.
inline SuiteReport run_suite(const SuiteManifest& manifest, const PipelineConfig& base_cfg,
                             const SuiteOptions& options = {}) {
    if (options.trials_per_task < 1)
        throw InvalidArgumentError("run_suite: trials_per_task must be >= 1");
    preflight(manifest);

    auto kb = build_knowledge_base(base_cfg);
    auto embedder = build_embedder(base_cfg);
    std::shared_ptr<fallback::DocumentSource> docs;
    std::shared_ptr<fallback::TripleExtractor> extractor;
    if (!base_cfg.docs_path.empty()) {
        docs = std::make_shared<fallback::FixtureDocumentSource>(
            fallback::FixtureDocumentSource::from_file(base_cfg.docs_path));
        extractor = std::make_shared<fallback::PatternExtractor>();
    }

    SuiteReport report;
    report.suite = manifest.name;
    report.trials_per_task = options.trials_per_task;
    report.tasks.resize(manifest.tasks.size());

    std::atomic<size_t> next{0};
    std::atomic<bool> failed{false};
    std::string first_error;
    std::mutex error_mutex;

    auto worker = [&]() {
        while (true) {
            size_t i = next.fetch_add(1);
            if (i >= manifest.tasks.size() || failed.load()) return;
            try {
                report.tasks[i] =
                    detail::run_task(manifest.tasks[i], base_cfg, kb, embedder, docs, extractor,
                                     options.trials_per_task);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!failed.exchange(true)) first_error = e.what();
            }
        }
    };

    size_t jobs = std::max<size_t>(1, std::min(options.jobs, manifest.tasks.size()));
    std::vector<std::thread> pool;
    for (size_t i = 0; i < jobs; ++i) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();

    if (failed.load()) throw SuiteError("suite run failed: " + first_error);
    return report;
}

inline SuiteReport run_suite_file(const fs::path& manifest_path, PipelineConfig base_cfg,
                                  const SuiteOptions& options = {}) {
    SuiteManifest manifest = SuiteManifest::from_file(manifest_path);
    if (!manifest.config.empty()) {
        PipelineConfig suite_cfg = config_from_file(manifest.config);
        // Ablation toggles and trial options survive from the caller's
        // config; everything else comes from the suite.
        suite_cfg.kg_enrichment = base_cfg.kg_enrichment;
        suite_cfg.use_property_penalty = base_cfg.use_property_penalty;
        base_cfg = suite_cfg;
    }
    return run_suite(manifest, base_cfg, options);
}

}  // namespace kgplan::harness
