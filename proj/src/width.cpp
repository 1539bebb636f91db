#include "gplan/width.hpp"

#include <algorithm>
#include <deque>
#include <stdexcept>
#include <unordered_map>

namespace gplan {

NoveltyTable::NoveltyTable(int k, const Instance& instance)
    : k_(k), n_(instance.num_atoms()), fluent_(instance.num_atoms(), 0), singles_(instance.num_atoms(), 0) {
    if (k < 1) throw std::invalid_argument("novelty needs k >= 1");
    for (std::size_t a = 0; a < n_; ++a) fluent_[a] = instance.is_fluent_atom(static_cast<int>(a));
    if (k >= 2 && n_ * n_ <= (std::size_t{1} << 28)) pairs_.assign(n_ * n_, false);
}

bool NoveltyTable::insert(const State& s) {
    std::vector<int> atoms;
    for (int a : s.atoms()) {
        if (fluent_[static_cast<std::size_t>(a)]) atoms.push_back(a);
    }
    bool fresh = false;
    for (int a : atoms) {
        if (!singles_[static_cast<std::size_t>(a)]) {
            singles_[static_cast<std::size_t>(a)] = 1;
            fresh = true;
        }
    }
    if (k_ == 1) return fresh;
    auto key = [](const std::vector<int>& t) {
        return std::string(reinterpret_cast<const char*>(t.data()), t.size() * sizeof(int));
    };
    const std::size_t m = atoms.size();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            if (!pairs_.empty()) {
                auto idx = static_cast<std::size_t>(atoms[i]) * n_ + static_cast<std::size_t>(atoms[j]);
                if (!pairs_[idx]) {
                    pairs_[idx] = true;
                    fresh = true;
                }
            } else if (tuples_.insert(key({atoms[i], atoms[j]})).second) {
                fresh = true;
            }
        }
    }
    // Sizes 3..k by index combinations.
    for (int size = 3; size <= k_ && static_cast<std::size_t>(size) <= m; ++size) {
        std::vector<std::size_t> idx(static_cast<std::size_t>(size));
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::vector<int> t(idx.size());
        while (true) {
            for (std::size_t i = 0; i < idx.size(); ++i) t[i] = atoms[idx[i]];
            if (tuples_.insert(key(t)).second) fresh = true;
            std::size_t p = idx.size();
            while (p > 0 && idx[p - 1] == m - idx.size() + p - 1) --p;
            if (p == 0) break;
            ++idx[p - 1];
            for (std::size_t q = p; q < idx.size(); ++q) idx[q] = idx[q - 1] + 1;
        }
    }
    return fresh;
}

IwResult iw(const Instance& instance, std::span<const GroundAction> actions, const State& start, int k,
            const StopFn& stop, std::size_t node_budget) {
    IwResult r;
    r.end = start;
    if (stop(start)) {
        r.found = true;
        return r;
    }
    NoveltyTable table(k, instance);
    table.insert(start);
    struct Node {
        State state;
        int parent;
        std::size_t action;
    };
    std::vector<Node> nodes{{start, -1, 0}};
    std::unordered_map<State, int, StateHash> seen{{start, 0}};
    std::deque<int> open{0};
    auto finish = [&](int leaf) {
        for (int v = leaf; nodes[static_cast<std::size_t>(v)].parent >= 0; v = nodes[static_cast<std::size_t>(v)].parent)
            r.plan.push_back(nodes[static_cast<std::size_t>(v)].action);
        std::reverse(r.plan.begin(), r.plan.end());
        r.end = nodes[static_cast<std::size_t>(leaf)].state;
        r.found = true;
    };
    while (!open.empty()) {
        const int v = open.front();
        open.pop_front();
        ++r.expanded;
        const State s = nodes[static_cast<std::size_t>(v)].state;
        for (std::size_t a : applicable(s, actions)) {
            State t = apply(s, actions[a]);
            if (seen.count(t)) continue;
            if (++r.generated > node_budget) {
                r.budget_exhausted = true;
                return r;
            }
            const int id = static_cast<int>(nodes.size());
            seen.emplace(t, id);
            nodes.push_back({t, v, a});
            if (stop(t)) {
                finish(id);
                return r;
            }
            if (table.insert(t)) open.push_back(id);
        }
    }
    return r;
}

IwResult iw(const Instance& instance, int k, const StopFn& stop) {
    const auto actions = ground(instance);
    return iw(instance, actions, instance.initial_state(), k, stop);
}

WidthResult width(const Instance& instance, std::span<const GroundAction> actions, const State& start,
                  const StopFn& stop, int k_max) {
    if (k_max < 1) throw std::invalid_argument("width needs k_max >= 1");
    WidthResult w;
    for (int k = 1; k <= k_max; ++k) {
        w.search = iw(instance, actions, start, k, stop);
        if (w.search.found) {
            w.width = k;
            return w;
        }
    }
    return w;
}

WidthResult width(const Instance& instance, const StopFn& stop, int k_max) {
    const auto actions = ground(instance);
    return width(instance, actions, instance.initial_state(), stop, k_max);
}

SiwResult siw_r(const Instance& instance, const Policy& sketch, const SiwLimits& limits) {
    sketch.validate();
    const auto actions = ground(instance);
    SiwResult out;
    State cur = instance.initial_state();
    std::unordered_map<State, int, StateHash> starts;
    while (!instance.is_goal(cur)) {
        if (out.segments.size() >= limits.max_segments) {
            out.failure = "segment limit reached";
            return out;
        }
        if (!starts.emplace(cur, 0).second) {
            out.failure = "segment start repeated; the sketch does not terminate";
            return out;
        }
        const auto f0 = valuate(sketch.features, cur, instance);
        auto stop = [&](const State& t) {
            if (instance.is_goal(t)) return true;
            if (t == cur) return false;
            return satisfies_some(f0, valuate(sketch.features, t, instance), sketch.rules);
        };
        std::optional<IwResult> hit;
        int k = 1;
        for (; k <= limits.k_max && !hit; ++k) {
            const std::size_t left = limits.node_budget > out.generated ? limits.node_budget - out.generated : 0;
            auto r = iw(instance, actions, cur, k, stop, left);
            out.generated += r.generated;
            if (r.budget_exhausted) {
                out.failure = "node budget exhausted";
                return out;
            }
            if (r.found) hit = std::move(r);
        }
        if (!hit) {
            out.failure = "no segment found with k <= " + std::to_string(limits.k_max) + " after " +
                          std::to_string(out.plan.size()) + " actions";
            return out;
        }
        // Segment endpoints must close a subproblem.
        if (!stop(hit->end)) throw std::logic_error("segment endpoint does not satisfy the stop condition");
        out.segments.push_back({k - 1, hit->plan.size()});
        for (std::size_t a : hit->plan) out.plan.push_back(instance.action_name(actions[a]));
        cur = hit->end;
    }
    out.solved = true;
    return out;
}

}  // namespace gplan
