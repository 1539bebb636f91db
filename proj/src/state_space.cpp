#include "gplan/state_space.hpp"

#include <algorithm>
#include <array>
#include <deque>
#include <functional>
#include <map>
#include <numeric>
#include <stdexcept>
#include <tuple>
#include <unordered_map>

namespace gplan {

void Graph::validate() const {
    if (num_nodes < 0) throw std::invalid_argument("graph: negative node count");
    auto in_range = [&](int v) { return v >= 0 && v < num_nodes; };
    if (init && !in_range(*init)) throw std::invalid_argument("graph: init out of range");
    if (goals) {
        for (int g : *goals) {
            if (!in_range(g)) throw std::invalid_argument("graph: goal out of range");
        }
    }
    for (const auto& e : edges) {
        if (!in_range(e.src) || !in_range(e.dst)) throw std::invalid_argument("graph: edge endpoint out of range");
        if (e.label.has_value() != edges.front().label.has_value())
            throw std::invalid_argument("graph: mixes labeled and unlabeled edges");
    }
}

bool Graph::labeled() const { return !edges.empty() && edges.front().label.has_value(); }

std::vector<std::vector<int>> Graph::out_edges() const {
    std::vector<std::vector<int>> out(static_cast<std::size_t>(num_nodes));
    for (std::size_t i = 0; i < edges.size(); ++i) out[static_cast<std::size_t>(edges[i].src)].push_back(static_cast<int>(i));
    return out;
}

nlohmann::json graph_to_json(const Graph& g) {
    nlohmann::json j;
    j["n"] = g.num_nodes;
    j["init"] = g.init ? nlohmann::json(*g.init) : nlohmann::json(nullptr);
    j["goals"] = g.goals ? nlohmann::json(*g.goals) : nlohmann::json(nullptr);
    auto edges = nlohmann::json::array();
    for (const auto& e : g.edges) {
        edges.push_back({e.src, e.dst, e.label ? nlohmann::json(*e.label) : nlohmann::json(nullptr)});
    }
    j["edges"] = std::move(edges);
    return j;
}

Graph graph_from_json(const nlohmann::json& j) {
    Graph g;
    g.num_nodes = j.at("n").get<int>();
    if (j.contains("init") && !j["init"].is_null()) g.init = j["init"].get<int>();
    if (j.contains("goals") && !j["goals"].is_null()) {
        auto goals = j["goals"].get<std::vector<int>>();
        std::sort(goals.begin(), goals.end());
        goals.erase(std::unique(goals.begin(), goals.end()), goals.end());
        g.goals = std::move(goals);
    }
    for (const auto& e : j.at("edges")) {
        if (!e.is_array() || e.size() < 2 || e.size() > 3) throw std::invalid_argument("graph: malformed edge");
        Edge edge{e[0].get<int>(), e[1].get<int>(), std::nullopt};
        if (e.size() == 3 && !e[2].is_null()) edge.label = e[2].get<std::string>();
        g.edges.push_back(std::move(edge));
    }
    g.validate();
    return g;
}

std::vector<Graph> graphs_from_json(const nlohmann::json& j) {
    std::vector<Graph> out;
    if (j.is_array()) {
        for (const auto& g : j) out.push_back(graph_from_json(g));
    } else {
        out.push_back(graph_from_json(j));
    }
    return out;
}

std::optional<int> StateSpace::find(const State& s) const {
    for (std::size_t i = 0; i < states.size(); ++i) {
        if (states[i] == s) return static_cast<int>(i);
    }
    return std::nullopt;
}

StateSpace expand(const Instance& instance, const ExpandLimits& limits) {
    StateSpace sp;
    sp.actions = ground(instance);
    std::unordered_map<State, int, StateHash> index;
    auto intern = [&](State s) {
        auto [it, fresh] = index.emplace(s, static_cast<int>(sp.states.size()));
        if (fresh) {
            if (sp.states.size() >= limits.max_states)
                throw ExpansionLimitExceeded("state limit exceeded", sp.states.size(), sp.states.size());
            sp.goal.push_back(instance.is_goal(s));
            sp.states.push_back(std::move(s));
        }
        return it->second;
    };
    intern(instance.initial_state());
    std::vector<std::string> names;
    names.reserve(sp.actions.size());
    for (const auto& a : sp.actions) names.push_back(instance.action_name(a));
    for (std::size_t cur = 0; cur < sp.states.size(); ++cur) {
        if (limits.deadline && (cur & 63u) == 0 && std::chrono::steady_clock::now() > *limits.deadline)
            throw ExpansionLimitExceeded("time limit exceeded", cur, sp.states.size() - cur);
        for (std::size_t a = 0; a < sp.actions.size(); ++a) {
            if (!is_applicable(sp.states[cur], sp.actions[a])) continue;
            State next = apply(sp.states[cur], sp.actions[a]);
            int dst;
            try {
                dst = intern(std::move(next));
            } catch (const ExpansionLimitExceeded&) {
                throw ExpansionLimitExceeded("state limit exceeded", sp.states.size(), sp.states.size() - cur);
            }
            sp.graph.edges.push_back({static_cast<int>(cur), dst, names[a]});
            sp.edge_action.push_back(a);
        }
    }
    sp.graph.num_nodes = static_cast<int>(sp.states.size());
    sp.graph.init = 0;
    std::vector<int> goals;
    for (std::size_t i = 0; i < sp.goal.size(); ++i) {
        if (sp.goal[i]) goals.push_back(static_cast<int>(i));
    }
    sp.graph.goals = std::move(goals);
    return sp;
}

std::vector<Distance> distances(const Graph& g) {
    std::vector<Distance> d(static_cast<std::size_t>(g.num_nodes), Unreachable{});
    if (!g.goals) return d;
    std::vector<std::vector<int>> in(static_cast<std::size_t>(g.num_nodes));
    for (const auto& e : g.edges) in[static_cast<std::size_t>(e.dst)].push_back(e.src);
    std::deque<int> queue;
    for (int v : *g.goals) {
        d[static_cast<std::size_t>(v)] = 0;
        queue.push_back(v);
    }
    while (!queue.empty()) {
        int v = queue.front();
        queue.pop_front();
        int dv = std::get<int>(d[static_cast<std::size_t>(v)]);
        for (int u : in[static_cast<std::size_t>(v)]) {
            if (!is_reachable(d[static_cast<std::size_t>(u)])) {
                d[static_cast<std::size_t>(u)] = dv + 1;
                queue.push_back(u);
            }
        }
    }
    return d;
}

namespace {

// Joint color refinement over two graphs; colors are comparable across them
// because signatures are interned in one shared table per round.
class Refiner {
public:
    Refiner(const Graph& a, const Graph& b, bool respect_labels) {
        std::map<std::string, int> label_ids;
        for (const Graph* g : {&a, &b}) {
            Adj adj(static_cast<std::size_t>(g->num_nodes));
            for (const auto& e : g->edges) {
                int l = 0;
                if (respect_labels && e.label) l = label_ids.emplace(*e.label, static_cast<int>(label_ids.size()) + 1).first->second;
                adj[static_cast<std::size_t>(e.src)].push_back({l, 0, e.dst});
                adj[static_cast<std::size_t>(e.dst)].push_back({l, 1, e.src});
            }
            adjs_.push_back(std::move(adj));
        }
    }

    using Coloring = std::array<std::vector<int>, 2>;

    // Refines to a stable partition; returns false if the graphs' color
    // histograms diverge.
    bool refine(Coloring& c) const {
        std::size_t classes = count_classes(c);
        for (;;) {
            std::map<std::vector<int>, int> table;
            std::array<std::vector<std::vector<int>>, 2> sigs;
            for (int side = 0; side < 2; ++side) {
                const auto& adj = adjs_[static_cast<std::size_t>(side)];
                auto& cs = c[static_cast<std::size_t>(side)];
                for (std::size_t v = 0; v < cs.size(); ++v) {
                    std::vector<std::array<int, 3>> nb;
                    nb.reserve(adj[v].size());
                    for (const auto& [l, dir, u] : adj[v]) nb.push_back({l, dir, cs[static_cast<std::size_t>(u)]});
                    std::sort(nb.begin(), nb.end());
                    std::vector<int> sig{cs[v]};
                    for (const auto& t : nb) sig.insert(sig.end(), t.begin(), t.end());
                    table.emplace(sig, 0);
                    sigs[static_cast<std::size_t>(side)].push_back(std::move(sig));
                }
            }
            int next = 0;
            for (auto& [sig, id] : table) id = next++;
            for (int side = 0; side < 2; ++side) {
                auto& cs = c[static_cast<std::size_t>(side)];
                for (std::size_t v = 0; v < cs.size(); ++v) cs[v] = table[sigs[static_cast<std::size_t>(side)][v]];
            }
            if (!same_histogram(c)) return false;
            std::size_t now = count_classes(c);
            if (now == classes) return true;
            classes = now;
        }
    }

    static bool same_histogram(const Coloring& c) {
        auto a = c[0];
        auto b = c[1];
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        return a == b;
    }

private:
    using Adj = std::vector<std::vector<std::array<int, 3>>>;
    std::vector<Adj> adjs_;

    static std::size_t count_classes(const Coloring& c) {
        std::vector<int> all = c[0];
        all.insert(all.end(), c[1].begin(), c[1].end());
        std::sort(all.begin(), all.end());
        return static_cast<std::size_t>(std::unique(all.begin(), all.end()) - all.begin());
    }
};

using EdgeKey = std::tuple<int, int, std::string>;

std::vector<EdgeKey> edge_multiset(const Graph& g, const std::vector<int>* map, bool respect_labels) {
    std::vector<EdgeKey> out;
    out.reserve(g.edges.size());
    for (const auto& e : g.edges) {
        int s = map ? (*map)[static_cast<std::size_t>(e.src)] : e.src;
        int d = map ? (*map)[static_cast<std::size_t>(e.dst)] : e.dst;
        out.emplace_back(s, d, respect_labels && e.label ? *e.label : std::string());
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

std::optional<std::vector<int>> isomorphism(const Graph& g1, const Graph& g2, bool respect_labels) {
    if (g1.num_nodes != g2.num_nodes || g1.edges.size() != g2.edges.size()) return std::nullopt;
    const std::vector<EdgeKey> target = edge_multiset(g2, nullptr, respect_labels);
    Refiner refiner(g1, g2, respect_labels);
    Refiner::Coloring c{std::vector<int>(static_cast<std::size_t>(g1.num_nodes), 0),
                        std::vector<int>(static_cast<std::size_t>(g2.num_nodes), 0)};
    if (!refiner.refine(c)) return std::nullopt;

    std::function<std::optional<std::vector<int>>(const Refiner::Coloring&)> search =
        [&](const Refiner::Coloring& col) -> std::optional<std::vector<int>> {
        std::map<int, std::pair<std::vector<int>, std::vector<int>>> cells;
        for (int v = 0; v < g1.num_nodes; ++v) cells[col[0][static_cast<std::size_t>(v)]].first.push_back(v);
        for (int v = 0; v < g2.num_nodes; ++v) cells[col[1][static_cast<std::size_t>(v)]].second.push_back(v);
        const std::pair<std::vector<int>, std::vector<int>>* branch = nullptr;
        for (const auto& [color, cell] : cells) {
            if (cell.first.size() > 1 && (!branch || cell.first.size() < branch->first.size())) branch = &cell;
        }
        if (!branch) {
            std::vector<int> map(static_cast<std::size_t>(g1.num_nodes));
            for (const auto& [color, cell] : cells) map[static_cast<std::size_t>(cell.first[0])] = cell.second[0];
            if (edge_multiset(g1, &map, respect_labels) == target) return map;
            return std::nullopt;
        }
        const int fresh = static_cast<int>(col[0].size() + col[1].size()) + 1;
        const int v = branch->first.front();
        // Trying the same index first makes the witness for g vs g the identity.
        std::vector<int> candidates = branch->second;
        std::stable_partition(candidates.begin(), candidates.end(), [v](int w) { return w == v; });
        for (int w : candidates) {
            Refiner::Coloring next = col;
            // Individualized pair gets a color above every refined id.
            for (auto& x : next[0]) x += 1;
            for (auto& x : next[1]) x += 1;
            next[0][static_cast<std::size_t>(v)] = fresh;
            next[1][static_cast<std::size_t>(w)] = fresh;
            if (!refiner.refine(next)) continue;
            if (auto r = search(next)) return r;
        }
        return std::nullopt;
    };
    return search(c);
}

Graph permute(const Graph& g, const std::vector<int>& perm) {
    Graph out;
    out.num_nodes = g.num_nodes;
    if (g.init) out.init = perm[static_cast<std::size_t>(*g.init)];
    if (g.goals) {
        std::vector<int> goals;
        for (int v : *g.goals) goals.push_back(perm[static_cast<std::size_t>(v)]);
        std::sort(goals.begin(), goals.end());
        out.goals = std::move(goals);
    }
    for (const auto& e : g.edges) out.edges.push_back({perm[static_cast<std::size_t>(e.src)], perm[static_cast<std::size_t>(e.dst)], e.label});
    return out;
}

Graph action_type_labels(const Graph& g) {
    Graph out = g;
    for (auto& e : out.edges) {
        if (!e.label) continue;
        std::string s = *e.label;
        if (!s.empty() && s.front() == '(') s.erase(0, 1);
        auto cut = s.find_first_of(" ()");
        if (cut != std::string::npos) s.erase(cut);
        e.label = s;
    }
    return out;
}

}  // namespace gplan
