#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "kgplan/actions.hpp"
#include "kgplan/config.hpp"
#include "kgplan/core.hpp"
#include "kgplan/llm.hpp"
#include "kgplan/ope.hpp"
#include "kgplan/sim.hpp"
#include "kgplan/urp.hpp"

namespace kgplan::planner {

using json = nlohmann::json;

struct ScoredAction {
    Action action;
    double s_llm = 0.0;
    double s_pick = 0.0;
    double s_place = 0.0;
    double s_bbox = 0.0;
    double s_prop = 0.0;
    double s_aff = 0.0;
    double s_comb = 0.0;

    json to_json() const {
        return {{"action", action.canonical()}, {"s_llm", s_llm},   {"s_pick", s_pick},
                {"s_place", s_place},           {"s_bbox", s_bbox}, {"s_prop", s_prop},
                {"s_aff", s_aff},               {"s_comb", s_comb}};
    }
};

struct PolicyStep {
    ScoredAction chosen;
    std::vector<Action> history;  // actions executed before this step
};

struct Policy {
    std::vector<PolicyStep> steps;
    bool terminal = false;

    std::vector<Action> actions() const {
        std::vector<Action> out;
        for (const PolicyStep& s : steps) out.push_back(s.chosen.action);
        return out;
    }

    json to_json() const {
        json steps_json = json::array();
        for (const PolicyStep& s : steps) {
            json step = s.chosen.to_json();
            json hist = json::array();
            for (const Action& a : s.history) hist.push_back(a.canonical());
            step["history"] = hist;
            steps_json.push_back(step);
        }
        return {{"terminal", terminal}, {"steps", steps_json}};
    }
};

// ── LLM vote ────────────────────────────────────────────────────

inline std::string vote_system_message(const urp::StructuredRequest& goal,
                                       const ActionVocabulary& vocab) {
    std::string actions;
    for (const auto& [name, arity] : vocab) {
        if (!actions.empty()) actions += ", ";
        actions += name + "/" + std::to_string(arity);
    }
    std::string msg =
        "You choose exactly one next action for the robot. Reply with a single action call such "
        "as pick_and_place(object, destination), or done() when the goal is complete. "
        "Available actions: " + actions + ".\n";
    msg += "Goal reasoning: " + goal.reasoning + "\n";
    msg += "Goal commands:\n";
    if (goal.commands.empty()) msg += "(none)\n";
    for (size_t i = 0; i < goal.commands.size(); ++i)
        msg += std::to_string(i + 1) + ". " + goal.commands[i] + "\n";
    return msg;
}

inline std::string vote_user_message(const std::vector<Action>& history,
                                     const sim::SceneState& scene) {
    std::string msg = "Objects:";
    for (const ConceptKey& name : scene.movable_names()) msg += " " + name;
    msg += "\nZones:";
    for (const ConceptKey& name : scene.zone_names()) msg += " " + name;
    msg += "\nHistory:\n";
    if (history.empty()) msg += "(none)\n";
    for (size_t i = 0; i < history.size(); ++i)
        msg += std::to_string(i + 1) + ". " + history[i].canonical() + "\n";
    msg += "Next action:";
    return msg;
}

/// n completions at temperature 0; S_LLM(a) = occurrences of a / n.
/// Unparseable completions are dropped while the denominator stays n, so
/// fractions remain comparable across candidates.
inline std::map<Action, double> llm_vote(const urp::StructuredRequest& goal,
                                         const std::vector<Action>& history,
                                         const sim::SceneState& scene, llm::ChatBackend& backend,
                                         const PipelineConfig& cfg,
                                         llm::UsageLog* usage = nullptr) {
    llm::CompletionRequest req{{vote_system_message(goal, cfg.vocabulary),
                                vote_user_message(history, scene)},
                               0.0, cfg.n_completions};
    std::vector<std::string> completions = backend.complete(req);
    if (usage) {
        size_t chars = 0;
        for (const std::string& c : completions) chars += c.size();
        usage->add({"planner.vote", req.context.concatenated().size(), chars,
                    completions.size()});
    }

    std::map<Action, size_t> counts;
    size_t parsed = 0;
    for (const std::string& text : completions) {
        auto action = parse_action(text, cfg.vocabulary);
        if (!action) {
            log::warn("planner: dropping unparseable completion: " + trim(text));
            continue;
        }
        ++counts[*action];
        ++parsed;
    }
    if (parsed == 0)
        throw PlanningStalledError("all " + std::to_string(completions.size()) +
                                   " completions were unparseable");
    std::map<Action, double> votes;
    for (const auto& [action, count] : counts)
        votes[action] = static_cast<double>(count) / static_cast<double>(req.n);
    return votes;
}

// ── Affordance ──────────────────────────────────────────────────

struct AffordanceContext {
    const sim::SceneState& scene;
    const ope::PropertyMap& properties;
    const ope::RiskMap& risks;
    const PipelineConfig& cfg;
};

/// Gripper-fit score over the picked object's larger bbox extent m:
/// 1 for m <= g/2, linear down to 0 at m = g, 0 beyond.
inline double bbox_score(double max_extent, double gripper_opening) {
    double half = gripper_opening / 2.0;
    if (max_extent <= half) return 1.0;
    if (max_extent >= gripper_opening) return 0.0;
    return (gripper_opening - max_extent) / (gripper_opening - half);
}

struct AffordanceScores {
    double s_pick = 0.0;
    double s_place = 0.0;
    double s_bbox = 0.0;
    double s_prop = 0.0;

    double product() const { return s_pick * s_place * s_bbox * s_prop; }
};

/// Detection-confidence, gripper-fit and property-penalty components for
/// one action. done scores all ones; an action whose arguments do not
/// resolve in the scene is infeasible and scores all zeros.
inline AffordanceScores affordance(const Action& action, const AffordanceContext& ctx) {
    if (action.is_done()) return {1.0, 1.0, 1.0, 1.0};

    for (const ConceptKey& arg : action.args)
        if (!ctx.scene.contains(arg)) return {0.0, 0.0, 0.0, 0.0};
    if (action.args.size() != 2) return {0.0, 0.0, 0.0, 0.0};
    const sim::SceneObject& source = ctx.scene.at(action.args[0]);
    const sim::SceneObject& target = ctx.scene.at(action.args[1]);
    if (source.is_zone()) return {0.0, 0.0, 0.0, 0.0};

    AffordanceScores s;
    s.s_pick = source.detection_confidence;
    s.s_place = target.detection_confidence;
    s.s_bbox = bbox_score(source.max_extent(), ctx.cfg.gripper_max_opening);

    if (!ctx.cfg.use_property_penalty) {
        s.s_prop = 1.0;
        return s;
    }
    double prop = 1.0;
    for (const ConceptKey& name : {source.name, target.name}) {
        auto it = ctx.properties.find(name);
        if (it == ctx.properties.end()) continue;
        for (const auto& [property, value] : it->second.values)
            prop *= ope::property_factor(ctx.cfg.penalties, property, value);
    }
    int k = ope::effective_risk(ctx.risks, source.name, target.name);
    prop *= std::max(0.0, 1.0 - ctx.cfg.risk_penalty_step * (k - 1));
    s.s_prop = std::clamp(prop, 0.0, 1.0);
    return s;
}

// ── Selection ───────────────────────────────────────────────────

inline std::vector<ScoredAction> score_candidates(const std::map<Action, double>& votes,
                                                  const AffordanceContext& ctx) {
    std::vector<ScoredAction> out;
    for (const auto& [action, s_llm] : votes) {
        AffordanceScores aff = affordance(action, ctx);
        ScoredAction scored;
        scored.action = action;
        scored.s_llm = s_llm;
        scored.s_pick = aff.s_pick;
        scored.s_place = aff.s_place;
        scored.s_bbox = aff.s_bbox;
        scored.s_prop = aff.s_prop;
        scored.s_aff = aff.product();
        scored.s_comb = s_llm * scored.s_aff;
        out.push_back(std::move(scored));
    }
    return out;
}

/// Argmax of S_comb. Ties break toward the lexicographically smallest
/// canonical serialization; a table of all-zero scores is an error.
inline ScoredAction select_action(const std::map<Action, double>& votes,
                                  const AffordanceContext& ctx) {
    if (votes.empty()) throw NoFeasibleActionError("no candidate actions");
    std::vector<ScoredAction> scored = score_candidates(votes, ctx);
    // std::map iteration already orders candidates canonically, so the
    // first strict maximum is the tie-break winner.
    const ScoredAction* best = &scored.front();
    for (const ScoredAction& s : scored)
        if (s.s_comb > best->s_comb) best = &s;
    if (best->s_comb <= 0.0)
        throw NoFeasibleActionError("every candidate has zero combined score");
    return *best;
}

// ── Planning loop ───────────────────────────────────────────────

/// Vote, score, select, append; repeats until done or max_steps. A policy
/// cut off by max_steps is flagged non-terminal.
inline Policy plan(const urp::StructuredRequest& goal, const sim::SceneState& scene,
                   llm::ChatBackend& backend, const ope::PropertyMap& properties,
                   const ope::RiskMap& risks, const PipelineConfig& cfg,
                   llm::UsageLog* usage = nullptr) {
    AffordanceContext ctx{scene, properties, risks, cfg};
    Policy policy;
    std::vector<Action> history;
    for (size_t step = 0; step < cfg.max_steps; ++step) {
        auto votes = llm_vote(goal, history, scene, backend, cfg, usage);
        ScoredAction chosen = select_action(votes, ctx);
        policy.steps.push_back({chosen, history});
        if (chosen.action.is_done()) {
            policy.terminal = true;
            return policy;
        }
        history.push_back(chosen.action);
    }
    log::warn("planner: max_steps reached without done; policy truncated");
    policy.terminal = false;
    return policy;
}

}  // namespace kgplan::planner
