#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "kgplan/actions.hpp"
#include "kgplan/core.hpp"

namespace kgplan::sim {

using json = nlohmann::json;

// ── Scene ───────────────────────────────────────────────────────

enum class Tag { fragile, rigid, container, zone, heat_source };

inline std::optional<Tag> parse_tag(const std::string& s) {
    std::string t = to_lower(trim(s));
    if (t == "fragile") return Tag::fragile;
    if (t == "rigid") return Tag::rigid;
    if (t == "container") return Tag::container;
    if (t == "zone") return Tag::zone;
    if (t == "heat_source") return Tag::heat_source;
    return std::nullopt;
}

inline std::string_view tag_label(Tag t) {
    switch (t) {
        case Tag::fragile: return "fragile";
        case Tag::rigid: return "rigid";
        case Tag::container: return "container";
        case Tag::zone: return "zone";
        case Tag::heat_source: return "heat_source";
    }
    return "zone";
}

struct SceneObject {
    ConceptKey name;
    double detection_confidence = 1.0;
    double bbox_width = 0.0;   // meters
    double bbox_height = 0.0;  // meters
    /// Zone key or carrier object; empty means loose on the workspace.
    ConceptKey position;
    std::set<Tag> tags;
    /// Stacking order proxy; derived from bbox area terciles when absent.
    int size_class = 0;
    /// Material/property labels ("metal", ...) consumed by the hazard rule.
    std::vector<std::string> properties;

    bool has(Tag t) const { return tags.count(t) > 0; }
    bool is_zone() const { return has(Tag::zone); }
    bool has_property(const std::string& p) const {
        for (const auto& q : properties)
            if (to_lower(q) == to_lower(p)) return true;
        return false;
    }
    double max_extent() const { return std::max(bbox_width, bbox_height); }
};

enum class EventKind { ok, broken, unstable_stack, hazard };

inline std::string_view event_label(EventKind k) {
    switch (k) {
        case EventKind::ok: return "ok";
        case EventKind::broken: return "broken";
        case EventKind::unstable_stack: return "unstable_stack";
        case EventKind::hazard: return "hazard";
    }
    return "ok";
}

inline std::optional<EventKind> parse_event(const std::string& s) {
    std::string t = to_lower(trim(s));
    if (t == "ok") return EventKind::ok;
    if (t == "broken") return EventKind::broken;
    if (t == "unstable_stack") return EventKind::unstable_stack;
    if (t == "hazard") return EventKind::hazard;
    return std::nullopt;
}

struct WorldEvent {
    EventKind kind = EventKind::ok;
    ConceptKey subject;
    ConceptKey object;
    std::string detail;  // empty for ok
};

class SceneState {
public:
    SceneState() = default;

    void add(SceneObject obj) {
        if (index_.count(obj.name))
            throw SceneLoadError("duplicate object name: " + obj.name);
        index_[obj.name] = order_.size();
        order_.push_back(std::move(obj));
    }

    bool contains(const ConceptKey& name) const { return index_.count(name) > 0; }

    const SceneObject& at(const ConceptKey& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw ExecutionError("unknown object: " + name);
        return order_[it->second];
    }

    SceneObject& at(const ConceptKey& name) {
        auto it = index_.find(name);
        if (it == index_.end()) throw ExecutionError("unknown object: " + name);
        return order_[it->second];
    }

    const std::vector<SceneObject>& objects() const { return order_; }
    size_t size() const { return order_.size(); }

    std::vector<ConceptKey> names() const {
        std::vector<ConceptKey> out;
        for (const auto& o : order_) out.push_back(o.name);
        return out;
    }

    std::vector<ConceptKey> movable_names() const {
        std::vector<ConceptKey> out;
        for (const auto& o : order_)
            if (!o.is_zone()) out.push_back(o.name);
        return out;
    }

    std::vector<ConceptKey> zone_names() const {
        std::vector<ConceptKey> out;
        for (const auto& o : order_)
            if (o.is_zone()) out.push_back(o.name);
        return out;
    }

    const std::vector<WorldEvent>& events() const { return events_; }
    void record(WorldEvent ev) { events_.push_back(std::move(ev)); }

private:
    std::vector<SceneObject> order_;
    std::map<ConceptKey, size_t> index_;
    std::vector<WorldEvent> events_;
};

// ── Loading ─────────────────────────────────────────────────────

namespace detail {

inline SceneObject load_object(const json& doc, bool zone, const std::string& path) {
    SceneObject obj;
    if (!doc.contains("name"))
        throw SceneLoadError("scene object without name at " + path);
    obj.name = normalize_term(doc.at("name").get<std::string>());
    obj.detection_confidence = doc.value("confidence", 1.0);
    if (obj.detection_confidence < 0.0 || obj.detection_confidence > 1.0)
        throw SceneLoadError("confidence outside [0,1] for " + obj.name);
    if (doc.contains("bbox")) {
        const json& bb = doc.at("bbox");
        if (!bb.is_array() || bb.size() != 2)
            throw SceneLoadError("bbox must be [width, height] for " + obj.name);
        obj.bbox_width = bb[0].get<double>();
        obj.bbox_height = bb[1].get<double>();
    } else if (zone) {
        obj.bbox_width = obj.bbox_height = 1.0;  // zones are never picked
    }
    if (obj.bbox_width <= 0.0 || obj.bbox_height <= 0.0)
        throw SceneLoadError("bbox must be positive for " + obj.name);
    obj.position = doc.contains("position")
                       ? normalize_term(doc.at("position").get<std::string>())
                       : ConceptKey{};
    for (const json& t : doc.value("tags", json::array())) {
        auto tag = parse_tag(t.get<std::string>());
        if (!tag) throw SceneLoadError("unknown tag '" + t.get<std::string>() + "' on " + obj.name);
        obj.tags.insert(*tag);
    }
    if (zone) obj.tags.insert(Tag::zone);
    if (doc.contains("size_class")) obj.size_class = doc.at("size_class").get<int>();
    for (const json& p : doc.value("properties", json::array()))
        obj.properties.push_back(to_lower(p.get<std::string>()));
    return obj;
}

inline void derive_size_classes(SceneState& state) {
    std::vector<std::pair<double, ConceptKey>> areas;
    for (const SceneObject& o : state.objects())
        if (!o.is_zone() && o.size_class == 0) areas.push_back({o.bbox_width * o.bbox_height, o.name});
    if (areas.empty()) return;
    std::sort(areas.begin(), areas.end());
    for (size_t i = 0; i < areas.size(); ++i) {
        int tercile = static_cast<int>((i * 3) / areas.size()) + 1;
        state.at(areas[i].second).size_class = tercile;
    }
}

}  // namespace detail

/// Loads and validates a scene document:
/// {"objects": [{name, confidence, bbox:[w,h], tags, position, ...}],
///  "zones": [...]}. Zones are immovable and acquire the zone tag.
inline SceneState load_scene(const json& doc) {
    if (!doc.is_object()) throw SceneLoadError("scene document must be an object");
    SceneState state;
    size_t i = 0;
    for (const json& z : doc.value("zones", json::array()))
        state.add(detail::load_object(z, true, "zones[" + std::to_string(i++) + "]"));
    i = 0;
    for (const json& o : doc.value("objects", json::array()))
        state.add(detail::load_object(o, false, "objects[" + std::to_string(i++) + "]"));
    detail::derive_size_classes(state);
    return state;
}

inline SceneState load_scene_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw SceneLoadError("scene file not found: " + path.string());
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw SceneLoadError("scene file is not JSON: " + path.string());
    return load_scene(doc);
}

// ── Execution rules ─────────────────────────────────────────────

/// Topmost object resting on `base` (following carrier chains), or `base`
/// itself when nothing sits on it.
inline const SceneObject& stack_top(const SceneState& state, const ConceptKey& base) {
    const SceneObject* top = &state.at(base);
    bool grew = true;
    while (grew) {
        grew = false;
        for (const SceneObject& o : state.objects()) {
            if (o.position == top->name) {
                top = &o;
                grew = true;
                break;
            }
        }
    }
    return *top;
}

/// Applies the world rules to one action, in fixed order; the first
/// matching rule wins:
///   1. rigid object placed into/onto a fragile container -> broken
///   2. larger size_class placed onto a smaller support -> unstable_stack
///   3. metal-property object placed into a heat source -> hazard
/// Otherwise ok, and the object's position is updated.
inline WorldEvent execute(const Action& action, SceneState& state) {
    if (action.is_done()) {
        WorldEvent ev{EventKind::ok, "", "", ""};
        state.record(ev);
        return ev;
    }
    if (action.kind != "pick_and_place")
        throw ExecutionError("unsupported action kind: " + action.kind);
    if (action.args.size() != 2)
        throw ExecutionError("pick_and_place expects two arguments");

    const ConceptKey& src_name = action.args[0];
    const ConceptKey& tgt_name = action.args[1];
    if (!state.contains(src_name)) throw ExecutionError("unknown object: " + src_name);
    if (!state.contains(tgt_name)) throw ExecutionError("unknown object: " + tgt_name);
    const SceneObject& src = state.at(src_name);
    const SceneObject& tgt = state.at(tgt_name);
    if (src.is_zone()) throw ExecutionError("cannot pick a zone: " + src_name);

    // Containers receive the object directly; anything else supports it on
    // top of the existing stack.
    const SceneObject& support = tgt.has(Tag::container) ? tgt : stack_top(state, tgt_name);

    WorldEvent ev{EventKind::ok, src_name, tgt_name, ""};
    if (src.has(Tag::rigid) && support.has(Tag::fragile) && support.has(Tag::container)) {
        ev.kind = EventKind::broken;
        ev.detail = support.name + " breaks under " + src_name;
    } else if (!support.has(Tag::container) && !support.is_zone() &&
               src.size_class > support.size_class) {
        ev.kind = EventKind::unstable_stack;
        ev.detail = src_name + " does not rest stably on " + support.name;
    } else if (src.has_property("metal") && tgt.has(Tag::heat_source)) {
        ev.kind = EventKind::hazard;
        ev.detail = src_name + " must not be heated in " + tgt_name;
    } else {
        state.at(src_name).position = tgt_name;
    }
    state.record(ev);
    return ev;
}

inline std::vector<WorldEvent> run_actions(const std::vector<Action>& actions, SceneState& state) {
    std::vector<WorldEvent> out;
    for (const Action& a : actions) out.push_back(execute(a, state));
    return out;
}

// ── Judging ─────────────────────────────────────────────────────

struct Placement {
    ConceptKey object;
    ConceptKey target;
};

/// What a correct episode must and must not do: required final placements,
/// placements that must not hold, and event kinds that must not occur.
struct Expectation {
    std::vector<Placement> required;
    std::vector<Placement> forbidden;
    std::vector<EventKind> forbidden_events;

    static Expectation from_json(const json& doc) {
        Expectation e;
        auto read = [](const json& arr, std::vector<Placement>& out) {
            for (const json& p : arr)
                out.push_back({normalize_term(p.at("object").get<std::string>()),
                               normalize_term(p.at("target").get<std::string>())});
        };
        read(doc.value("required", json::array()), e.required);
        read(doc.value("forbidden", json::array()), e.forbidden);
        for (const json& ev : doc.value("forbidden_events", json::array())) {
            auto kind = parse_event(ev.get<std::string>());
            if (!kind || *kind == EventKind::ok)
                throw ValidationError("bad forbidden event: " + ev.dump());
            e.forbidden_events.push_back(*kind);
        }
        return e;
    }

    static Expectation from_file(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw ValidationError("expectation file not found: " + path.string());
        return from_json(json::parse(in));
    }
};

/// Success iff every required placement holds in the final state, no
/// forbidden placement holds, and no forbidden event was emitted.
inline bool judge(const SceneState& final_state, const Expectation& expectation) {
    for (const Placement& p : expectation.required) {
        if (!final_state.contains(p.object)) return false;
        if (final_state.at(p.object).position != p.target) return false;
    }
    for (const Placement& p : expectation.forbidden) {
        if (final_state.contains(p.object) && final_state.at(p.object).position == p.target)
            return false;
    }
    for (const WorldEvent& ev : final_state.events())
        for (EventKind k : expectation.forbidden_events)
            if (ev.kind == k) return false;
    return true;
}

}  // namespace kgplan::sim
