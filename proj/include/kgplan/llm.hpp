#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <regex>
#include <string>
#include <vector>

#include <json.hpp>

#include "kgplan/core.hpp"

namespace kgplan::llm {

using json = nlohmann::json;

struct PromptContext {
    std::string system_message;
    std::string user_message;

    /// Full context processed by the model: system then user.
    std::string concatenated() const { return system_message + "\n" + user_message; }
};

struct CompletionRequest {
    PromptContext context;
    double temperature = 0.0;
    size_t n = 1;
};

struct UsageRecord {
    std::string stage;
    size_t prompt_chars = 0;
    size_t completion_chars = 0;
    size_t completions = 0;
};

/// Per-call token/cost style accounting. Recorded, never enforced.
class UsageLog {
public:
    void add(UsageRecord rec) {
        std::lock_guard<std::mutex> lock(mutex_);
        records_.push_back(std::move(rec));
    }
    std::vector<UsageRecord> snapshot() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return records_;
    }
    size_t total_calls() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return records_.size();
    }

private:
    mutable std::mutex mutex_;
    std::vector<UsageRecord> records_;
};

class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    /// Returns exactly req.n completion texts.
    virtual std::vector<std::string> complete(const CompletionRequest& req) = 0;
    virtual std::string name() const = 0;
};

inline void validate_request(const CompletionRequest& req) {
    if (trim(req.context.system_message).empty() || trim(req.context.user_message).empty())
        throw InvalidArgumentError("completion request needs non-empty system and user messages");
    if (req.temperature < 0) throw InvalidArgumentError("temperature must be >= 0");
    if (req.n < 1) throw InvalidArgumentError("completion count must be >= 1");
}

// ── Scripted backend ────────────────────────────────────────────

/// One rule of a completion script: an ECMAScript regex searched against
/// the concatenated context, and the responses it serves.
struct ScriptRule {
    std::string pattern;
    std::vector<std::string> responses;
};

/// Script parsed from JSON. Accepts either a bare array of rules or an
/// object {"imports": [paths...], "rules": [...]}; imports expand in place
/// before local rules, relative to the importing file.
class Script {
public:
    Script() = default;
    explicit Script(std::vector<ScriptRule> rules) : rules_(std::move(rules)) { compile(); }

    static Script from_json(const json& doc, const std::filesystem::path& base_dir = {}) {
        std::vector<ScriptRule> rules;
        collect(doc, base_dir, rules);
        return Script(std::move(rules));
    }

    static Script from_file(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw InvalidArgumentError("script not found: " + path.string());
        return from_json(json::parse(in), path.parent_path());
    }

    size_t size() const { return rules_.size(); }
    const ScriptRule& rule(size_t i) const { return rules_[i]; }

    /// Index of the first rule whose pattern matches, or nullopt.
    std::optional<size_t> match(const std::string& context) const {
        for (size_t i = 0; i < rules_.size(); ++i)
            if (std::regex_search(context, compiled_[i])) return i;
        return std::nullopt;
    }

private:
    static void collect(const json& doc, const std::filesystem::path& base_dir,
                        std::vector<ScriptRule>& out) {
        const json* rules = &doc;
        if (doc.is_object()) {
            if (doc.contains("imports")) {
                for (const json& imp : doc.at("imports")) {
                    std::filesystem::path p = base_dir / imp.get<std::string>();
                    std::ifstream in(p);
                    if (!in) throw InvalidArgumentError("script import not found: " + p.string());
                    collect(json::parse(in), p.parent_path(), out);
                }
            }
            if (!doc.contains("rules")) return;
            rules = &doc.at("rules");
        }
        for (const json& r : *rules) {
            ScriptRule rule;
            rule.pattern = r.at("pattern").get<std::string>();
            for (const json& resp : r.at("responses")) rule.responses.push_back(resp.get<std::string>());
            if (rule.responses.empty())
                throw InvalidArgumentError("script rule with empty responses: " + rule.pattern);
            out.push_back(std::move(rule));
        }
    }

    void compile() {
        compiled_.reserve(rules_.size());
        for (const ScriptRule& r : rules_)
            compiled_.emplace_back(r.pattern, std::regex::ECMAScript | std::regex::icase);
    }

    std::vector<ScriptRule> rules_;
    std::vector<std::regex> compiled_;
};

/// Deterministic chat backend driven by a script. The first matching rule
/// serves the request; its responses cycle across calls, so one rule can
/// feed successive planning steps. A pure function of
/// (script, prompt, per-rule call index).
class ScriptedBackend : public ChatBackend {
public:
    explicit ScriptedBackend(std::shared_ptr<const Script> script)
        : script_(std::move(script)), cursors_(script_->size()) {
        for (auto& c : cursors_) c = std::make_unique<std::atomic<size_t>>(0);
    }

    explicit ScriptedBackend(std::vector<ScriptRule> rules)
        : ScriptedBackend(std::make_shared<const Script>(std::move(rules))) {}

    std::vector<std::string> complete(const CompletionRequest& req) override {
        validate_request(req);
        std::string context = req.context.concatenated();
        auto idx = script_->match(context);
        if (!idx)
            throw UnmatchedPromptError("no script rule matches prompt: " +
                                       context.substr(0, 160));
        const ScriptRule& rule = script_->rule(*idx);
        size_t start = cursors_[*idx]->fetch_add(req.n);
        std::vector<std::string> out;
        out.reserve(req.n);
        for (size_t i = 0; i < req.n; ++i)
            out.push_back(rule.responses[(start + i) % rule.responses.size()]);
        return out;
    }

    std::string name() const override { return "scripted"; }

private:
    std::shared_ptr<const Script> script_;
    // One cycling cursor per rule; unique_ptr keeps atomics in a vector.
    std::vector<std::unique_ptr<std::atomic<size_t>>> cursors_;
};

/// Counts calls and delegates; used to assert call budgets in tests.
class CountingBackend : public ChatBackend {
public:
    explicit CountingBackend(std::shared_ptr<ChatBackend> inner) : inner_(std::move(inner)) {}
    std::vector<std::string> complete(const CompletionRequest& req) override {
        ++calls_;
        return inner_->complete(req);
    }
    std::string name() const override { return inner_->name(); }
    size_t calls() const { return calls_.load(); }

private:
    std::shared_ptr<ChatBackend> inner_;
    std::atomic<size_t> calls_{0};
};

}  // namespace kgplan::llm
