#include "gplan/policy.hpp"

#include "gplan/parallel.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <random>
#include <unordered_map>
#include <utility>

namespace gplan {

void Policy::validate() const {
    const int nf = static_cast<int>(features.size());
    for (std::size_t r = 0; r < rules.size(); ++r) {
        const auto where = "rule " + std::to_string(r);
        std::vector<char> seen_c(features.size(), 0), seen_e(features.size(), 0);
        for (const auto& c : rules[r].conds) {
            if (c.feature < 0 || c.feature >= nf) throw PolicyError(where + ": condition on unknown feature");
            const auto& f = features[static_cast<std::size_t>(c.feature)];
            const bool boolean = c.kind == CondKind::IsTrue || c.kind == CondKind::IsFalse;
            if (boolean != (f.kind == FeatureKind::Boolean))
                throw PolicyError(where + ": condition kind does not match feature '" + f.name + "'");
            if (std::exchange(seen_c[static_cast<std::size_t>(c.feature)], 1))
                throw PolicyError(where + ": two conditions on feature '" + f.name + "'");
        }
        for (const auto& e : rules[r].effs) {
            if (e.feature < 0 || e.feature >= nf) throw PolicyError(where + ": effect on unknown feature");
            const auto& f = features[static_cast<std::size_t>(e.feature)];
            const bool boolean = e.kind == EffKind::SetTrue || e.kind == EffKind::SetFalse || e.kind == EffKind::AnyBool;
            if (boolean != (f.kind == FeatureKind::Boolean))
                throw PolicyError(where + ": effect kind does not match feature '" + f.name + "'");
            if (std::exchange(seen_e[static_cast<std::size_t>(e.feature)], 1))
                throw PolicyError(where + ": two effects on feature '" + f.name + "'");
        }
    }
}

int Policy::cost() const {
    int c = 0;
    for (const auto& f : features) c += f.cost;
    return c;
}

bool cond_holds(const FeatureValuation& f, const PolicyRule& rule) {
    for (const auto& c : rule.conds) {
        const int v = f[static_cast<std::size_t>(c.feature)];
        const bool ok = (c.kind == CondKind::IsTrue || c.kind == CondKind::GtZero) ? v > 0 : v == 0;
        if (!ok) return false;
    }
    return true;
}

bool pair_satisfies(const FeatureValuation& f, const FeatureValuation& f2, const PolicyRule& rule) {
    if (!cond_holds(f, rule)) return false;
    std::vector<char> touched(f.size(), 0);
    for (const auto& e : rule.effs) {
        const auto i = static_cast<std::size_t>(e.feature);
        touched[i] = 1;
        const int a = f[i];
        const int b = f2[i];
        switch (e.kind) {
            case EffKind::SetTrue:
                if (b == 0) return false;
                break;
            case EffKind::SetFalse:
                if (b != 0) return false;
                break;
            case EffKind::Dec:
                if (b >= a) return false;
                break;
            case EffKind::Inc:
                if (b <= a) return false;
                break;
            case EffKind::AnyBool:
            case EffKind::AnyNum:
                break;
        }
    }
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (!touched[i] && f[i] != f2[i]) return false;
    }
    return true;
}

bool satisfies_some(const FeatureValuation& f, const FeatureValuation& f2, std::span<const PolicyRule> rules) {
    return std::any_of(rules.begin(), rules.end(), [&](const PolicyRule& r) { return pair_satisfies(f, f2, r); });
}

bool compatible(const State& s, const State& s2, const Policy& policy, const Instance& instance) {
    return satisfies_some(valuate(policy.features, s, instance), valuate(policy.features, s2, instance), policy.rules);
}

std::string to_string(Outcome o) {
    switch (o) {
        case Outcome::Solves:
            return "Solves";
        case Outcome::Cycle:
            return "Cycle";
        case Outcome::DeadEnd:
            return "DeadEnd";
        case Outcome::Unknown:
            return "Unknown";
    }
    return {};
}

std::string to_string(ExecOutcome o) {
    switch (o) {
        case ExecOutcome::GoalReached:
            return "GoalReached";
        case ExecOutcome::DeadEnd:
            return "DeadEnd";
        case ExecOutcome::StepLimit:
            return "StepLimit";
    }
    return {};
}

namespace {

// Compatible subgraph in BFS discovery order; node 0 is the root, goal
// nodes have no successors.
struct Explored {
    std::vector<std::vector<int>> succ;
    std::vector<int> parent;
    std::vector<char> goal;
};

std::vector<int> path_to(const Explored& ex, int v) {
    std::vector<int> out;
    for (; v >= 0; v = ex.parent[static_cast<std::size_t>(v)]) out.push_back(v);
    std::reverse(out.begin(), out.end());
    return out;
}

// Iterative Tarjan; component id per node.
std::vector<int> components(const Explored& ex) {
    const int n = static_cast<int>(ex.succ.size());
    std::vector<int> index(static_cast<std::size_t>(n), -1), low(static_cast<std::size_t>(n), 0), comp(static_cast<std::size_t>(n), -1);
    std::vector<char> on_stack(static_cast<std::size_t>(n), 0);
    std::vector<int> stack;
    std::vector<std::pair<int, std::size_t>> call;
    int counter = 0;
    int ncomp = 0;
    for (int root = 0; root < n; ++root) {
        if (index[static_cast<std::size_t>(root)] >= 0) continue;
        call.push_back({root, 0});
        while (!call.empty()) {
            auto& [v, i] = call.back();
            const auto uv = static_cast<std::size_t>(v);
            if (i == 0 && index[uv] < 0) {
                index[uv] = low[uv] = counter++;
                stack.push_back(v);
                on_stack[uv] = 1;
            }
            if (i < ex.succ[uv].size()) {
                const int w = ex.succ[uv][i++];
                const auto uw = static_cast<std::size_t>(w);
                if (index[uw] < 0) {
                    call.push_back({w, 0});
                } else if (on_stack[uw]) {
                    low[uv] = std::min(low[uv], index[uw]);
                }
                continue;
            }
            if (low[uv] == index[uv]) {
                int w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[static_cast<std::size_t>(w)] = 0;
                    comp[static_cast<std::size_t>(w)] = ncomp;
                } while (w != v);
                ++ncomp;
            }
            const int done = v;
            call.pop_back();
            if (!call.empty()) {
                const auto up = static_cast<std::size_t>(call.back().first);
                low[up] = std::min(low[up], low[static_cast<std::size_t>(done)]);
            }
        }
    }
    return comp;
}

std::pair<Outcome, std::vector<int>> analyze(const Explored& ex) {
    const int n = static_cast<int>(ex.succ.size());
    int dead = -1;
    for (int v = 0; v < n && dead < 0; ++v) {
        if (!ex.goal[static_cast<std::size_t>(v)] && ex.succ[static_cast<std::size_t>(v)].empty()) dead = v;
    }
    auto comp = components(ex);
    std::vector<int> comp_size(static_cast<std::size_t>(n), 0);
    for (int c : comp) ++comp_size[static_cast<std::size_t>(c)];
    int cyc = -1;
    for (int v = 0; v < n && cyc < 0; ++v) {
        const auto uv = static_cast<std::size_t>(v);
        const bool self = std::find(ex.succ[uv].begin(), ex.succ[uv].end(), v) != ex.succ[uv].end();
        if (self || comp_size[static_cast<std::size_t>(comp[uv])] > 1) cyc = v;
    }
    // Node ids follow BFS order, so the smaller id has the shorter prefix.
    if (dead >= 0 && (cyc < 0 || dead <= cyc)) return {Outcome::DeadEnd, path_to(ex, dead)};
    if (cyc < 0) return {Outcome::Solves, {}};

    auto witness = path_to(ex, cyc);
    const int c = comp[static_cast<std::size_t>(cyc)];
    std::vector<int> back(static_cast<std::size_t>(n), -2);
    std::deque<int> q{cyc};
    back[static_cast<std::size_t>(cyc)] = -1;
    int last = -1;
    while (!q.empty() && last < 0) {
        const int v = q.front();
        q.pop_front();
        for (int w : ex.succ[static_cast<std::size_t>(v)]) {
            if (w == cyc) {
                last = v;
                break;
            }
            if (comp[static_cast<std::size_t>(w)] != c || back[static_cast<std::size_t>(w)] != -2) continue;
            back[static_cast<std::size_t>(w)] = v;
            q.push_back(w);
        }
    }
    std::vector<int> loop;
    for (int v = last; v != cyc; v = back[static_cast<std::size_t>(v)]) loop.push_back(v);
    std::reverse(loop.begin(), loop.end());
    witness.insert(witness.end(), loop.begin(), loop.end());
    witness.push_back(cyc);
    return {Outcome::Cycle, witness};
}

}  // namespace

VerifyResult verify(const Policy& policy, const Instance& instance, const ExpandLimits& limits, int threads) {
    policy.validate();
    const auto actions = ground(instance);
    std::vector<State> states{instance.initial_state()};
    std::vector<FeatureValuation> vals{valuate(policy.features, states[0], instance)};
    std::unordered_map<State, int, StateHash> index{{states[0], 0}};
    Explored ex;
    ex.succ.emplace_back();
    ex.parent.push_back(-1);
    ex.goal.push_back(instance.is_goal(states[0]));

    VerifyResult result;
    std::size_t layer_begin = 0;
    while (layer_begin < states.size()) {
        const std::size_t layer_end = states.size();
        struct Succ {
            std::vector<std::pair<State, FeatureValuation>> items;
        };
        std::vector<Succ> found(layer_end - layer_begin);
        parallel_for(found.size(), threads, [&](std::size_t k) {
            const std::size_t v = layer_begin + k;
            if (ex.goal[v]) return;
            const State& s = states[v];
            for (std::size_t a : applicable(s, actions)) {
                State t = apply(s, actions[a]);
                auto ft = valuate(policy.features, t, instance);
                if (satisfies_some(vals[v], ft, policy.rules)) found[k].items.emplace_back(std::move(t), std::move(ft));
            }
        });
        for (std::size_t k = 0; k < found.size(); ++k) {
            const std::size_t v = layer_begin + k;
            for (auto& [t, ft] : found[k].items) {
                auto [it, fresh] = index.try_emplace(t, static_cast<int>(states.size()));
                if (fresh) {
                    if (states.size() >= limits.max_states) {
                        result.states = states.size();
                        result.detail = "state limit of " + std::to_string(limits.max_states) + " reached";
                        return result;
                    }
                    ex.goal.push_back(instance.is_goal(t));
                    ex.parent.push_back(static_cast<int>(v));
                    ex.succ.emplace_back();
                    states.push_back(std::move(t));
                    vals.push_back(std::move(ft));
                }
                auto& out = ex.succ[v];
                if (std::find(out.begin(), out.end(), it->second) == out.end()) out.push_back(it->second);
            }
        }
        if (limits.deadline && std::chrono::steady_clock::now() > *limits.deadline) {
            result.states = states.size();
            result.detail = "deadline reached";
            return result;
        }
        layer_begin = layer_end;
    }
    auto [outcome, path] = analyze(ex);
    result.outcome = outcome;
    result.states = states.size();
    for (int v : path) result.witness.push_back(states[static_cast<std::size_t>(v)]);
    return result;
}

GraphVerdict verify_on_space(const StateSpace& space, std::span<const FeatureValuation> values,
                             std::span<const PolicyRule> rules) {
    const auto out_edges = space.graph.out_edges();
    std::vector<int> local(space.states.size(), -1), global;
    Explored ex;
    auto add = [&](int g, int parent) {
        local[static_cast<std::size_t>(g)] = static_cast<int>(global.size());
        global.push_back(g);
        ex.succ.emplace_back();
        ex.parent.push_back(parent);
        ex.goal.push_back(space.goal[static_cast<std::size_t>(g)]);
    };
    add(0, -1);
    for (std::size_t i = 0; i < global.size(); ++i) {
        const int g = global[i];
        if (ex.goal[i]) continue;
        const auto& fv = values[static_cast<std::size_t>(g)];
        for (int e : out_edges[static_cast<std::size_t>(g)]) {
            const int h = space.graph.edges[static_cast<std::size_t>(e)].dst;
            if (!satisfies_some(fv, values[static_cast<std::size_t>(h)], rules)) continue;
            if (local[static_cast<std::size_t>(h)] < 0) add(h, static_cast<int>(i));
            auto& out = ex.succ[i];
            const int l = local[static_cast<std::size_t>(h)];
            if (std::find(out.begin(), out.end(), l) == out.end()) out.push_back(l);
        }
    }
    auto [outcome, path] = analyze(ex);
    GraphVerdict v;
    v.outcome = outcome;
    v.states = global.size();
    for (int l : path) v.witness.push_back(global[static_cast<std::size_t>(l)]);
    return v;
}

Execution execute(const Policy& policy, const Instance& instance, std::size_t max_steps,
                  std::optional<std::uint64_t> tie_break) {
    policy.validate();
    const auto actions = ground(instance);
    std::optional<std::mt19937_64> rng;
    if (tie_break) rng.emplace(*tie_break);
    Execution ex;
    ex.states.push_back(instance.initial_state());
    for (std::size_t step = 0;; ++step) {
        const State& s = ex.states.back();
        if (instance.is_goal(s)) {
            ex.outcome = ExecOutcome::GoalReached;
            return ex;
        }
        if (step >= max_steps) {
            ex.outcome = ExecOutcome::StepLimit;
            return ex;
        }
        const auto fs = valuate(policy.features, s, instance);
        std::vector<std::pair<std::size_t, State>> options;
        for (std::size_t a : applicable(s, actions)) {
            State t = apply(s, actions[a]);
            if (satisfies_some(fs, valuate(policy.features, t, instance), policy.rules)) options.emplace_back(a, std::move(t));
        }
        if (options.empty()) {
            ex.outcome = ExecOutcome::DeadEnd;
            return ex;
        }
        std::size_t pick = 0;
        if (rng) pick = static_cast<std::size_t>((*rng)() % options.size());
        ex.actions.push_back(instance.action_name(actions[options[pick].first]));
        ex.states.push_back(std::move(options[pick].second));
    }
}

// ------------------------------------------------------------ JSON

namespace {

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\n\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\n\r");
    return s.substr(b, e - b + 1);
}

std::string cond_token(const Condition& c, std::span<const Feature> fs) {
    const auto& n = fs[static_cast<std::size_t>(c.feature)].name;
    switch (c.kind) {
        case CondKind::IsTrue:
            return n;
        case CondKind::IsFalse:
            return "-" + n;
        case CondKind::EqZero:
            return n + "=0";
        case CondKind::GtZero:
            return n + ">0";
    }
    return {};
}

std::string eff_token(const Effect& e, std::span<const Feature> fs) {
    const auto& n = fs[static_cast<std::size_t>(e.feature)].name;
    switch (e.kind) {
        case EffKind::SetTrue:
            return n;
        case EffKind::SetFalse:
            return "-" + n;
        case EffKind::AnyBool:
        case EffKind::AnyNum:
            return n + "?";
        case EffKind::Dec:
            return "dec(" + n + ")";
        case EffKind::Inc:
            return "inc(" + n + ")";
    }
    return {};
}

}  // namespace

std::string rule_to_string(const PolicyRule& rule, std::span<const Feature> features) {
    std::string s = "{";
    for (std::size_t i = 0; i < rule.conds.size(); ++i) s += (i ? ", " : "") + cond_token(rule.conds[i], features);
    s += "} -> {";
    for (std::size_t i = 0; i < rule.effs.size(); ++i) s += (i ? ", " : "") + eff_token(rule.effs[i], features);
    return s + "}";
}

nlohmann::json policy_to_json(const Policy& policy) {
    nlohmann::json j;
    j["features"] = nlohmann::json::array();
    for (const auto& f : policy.features) j["features"].push_back(f.name + ": " + f.text);
    j["rules"] = nlohmann::json::array();
    for (const auto& r : policy.rules) {
        nlohmann::json jr{{"cond", nlohmann::json::array()}, {"eff", nlohmann::json::array()}};
        for (const auto& c : r.conds) jr["cond"].push_back(cond_token(c, policy.features));
        for (const auto& e : r.effs) jr["eff"].push_back(eff_token(e, policy.features));
        j["rules"].push_back(std::move(jr));
    }
    return j;
}

Policy policy_from_json(const nlohmann::json& j, const Domain& domain) {
    if (!j.is_object() || !j.contains("features") || !j.contains("rules") || !j["features"].is_array() ||
        !j["rules"].is_array())
        throw PolicyError("policy JSON needs \"features\" and \"rules\" arrays");
    Policy p;
    std::map<std::string, int> by_name;
    for (const auto& jf : j["features"]) {
        if (!jf.is_string()) throw PolicyError("feature entries must be strings");
        const int idx = static_cast<int>(p.features.size());
        auto f = parse_feature(jf.get<std::string>(), domain, "f" + std::to_string(idx));
        if (!by_name.emplace(f.name, idx).second) throw PolicyError("duplicate feature name '" + f.name + "'");
        p.features.push_back(std::move(f));
    }
    auto lookup = [&](const std::string& name) {
        auto it = by_name.find(trim(name));
        if (it == by_name.end()) throw PolicyError("unknown feature '" + trim(name) + "' in rule");
        return it->second;
    };
    auto kind_of = [&](int f) { return p.features[static_cast<std::size_t>(f)].kind; };
    for (const auto& jr : j["rules"]) {
        if (!jr.is_object()) throw PolicyError("rules must be objects");
        PolicyRule rule;
        for (const auto& jc : jr.value("cond", nlohmann::json::array())) {
            if (!jc.is_string()) throw PolicyError("condition tokens must be strings");
            std::string t = trim(jc.get<std::string>());
            Condition c;
            if (t.ends_with("=0")) {
                c = {lookup(t.substr(0, t.size() - 2)), CondKind::EqZero};
            } else if (t.ends_with(">0")) {
                c = {lookup(t.substr(0, t.size() - 2)), CondKind::GtZero};
            } else if (t.starts_with("-")) {
                c = {lookup(t.substr(1)), CondKind::IsFalse};
            } else {
                c = {lookup(t), CondKind::IsTrue};
            }
            rule.conds.push_back(c);
        }
        for (const auto& je : jr.value("eff", nlohmann::json::array())) {
            if (!je.is_string()) throw PolicyError("effect tokens must be strings");
            std::string t = trim(je.get<std::string>());
            Effect e;
            if (t.starts_with("dec(") && t.ends_with(")")) {
                e = {lookup(t.substr(4, t.size() - 5)), EffKind::Dec};
            } else if (t.starts_with("inc(") && t.ends_with(")")) {
                e = {lookup(t.substr(4, t.size() - 5)), EffKind::Inc};
            } else if (t.ends_with("?")) {
                const int f = lookup(t.substr(0, t.size() - 1));
                e = {f, kind_of(f) == FeatureKind::Boolean ? EffKind::AnyBool : EffKind::AnyNum};
            } else if (t.starts_with("-")) {
                e = {lookup(t.substr(1)), EffKind::SetFalse};
            } else {
                e = {lookup(t), EffKind::SetTrue};
            }
            rule.effs.push_back(e);
        }
        p.rules.push_back(std::move(rule));
    }
    p.validate();
    return p;
}

}  // namespace gplan
