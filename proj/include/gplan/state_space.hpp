#pragma once

// Reachable state spaces G(P), goal distances and (label-preserving) graph
// isomorphism, plus the Graph JSON interchange format.

#include "gplan/strips.hpp"

#include <chrono>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace gplan {

struct Edge {
    int src = 0;
    int dst = 0;
    std::optional<std::string> label;

    friend bool operator==(const Edge&, const Edge&) = default;
};

// Plain or annotated directed multigraph over nodes 0..num_nodes-1.
struct Graph {
    int num_nodes = 0;
    std::optional<int> init;
    std::optional<std::vector<int>> goals;  // sorted, unique
    std::vector<Edge> edges;

    // Throws std::invalid_argument on out-of-range endpoints, init or goals,
    // and on a mix of labeled and unlabeled edges.
    void validate() const;
    [[nodiscard]] bool labeled() const;
    [[nodiscard]] std::vector<std::vector<int>> out_edges() const;  // edge indices per node

    friend bool operator==(const Graph&, const Graph&) = default;
};

nlohmann::json graph_to_json(const Graph& g);
Graph graph_from_json(const nlohmann::json& j);

// A single graph object or an array of them.
std::vector<Graph> graphs_from_json(const nlohmann::json& j);

struct ExpandLimits {
    std::size_t max_states = 2'000'000;
    std::optional<std::chrono::steady_clock::time_point> deadline;
};

class ExpansionLimitExceeded : public std::runtime_error {
public:
    ExpansionLimitExceeded(const std::string& what, std::size_t expanded, std::size_t frontier)
        : std::runtime_error(what), expanded_(expanded), frontier_(frontier) {}
    [[nodiscard]] std::size_t states() const { return expanded_; }
    [[nodiscard]] std::size_t frontier() const { return frontier_; }

private:
    std::size_t expanded_;
    std::size_t frontier_;
};

// G(P) with BFS discovery numbering (node 0 = initial state); successors
// follow the ground-action order, so numbering is deterministic.
struct StateSpace {
    std::vector<GroundAction> actions;
    std::vector<State> states;
    std::vector<std::size_t> edge_action;  // parallel to graph.edges
    std::vector<bool> goal;                // per state
    Graph graph;                           // labels are ground action names

    [[nodiscard]] std::optional<int> find(const State& s) const;
};

StateSpace expand(const Instance& instance, const ExpandLimits& limits = {});

struct Unreachable {
    friend bool operator==(Unreachable, Unreachable) = default;
};
using Distance = std::variant<int, Unreachable>;

[[nodiscard]] inline bool is_reachable(const Distance& d) { return std::holds_alternative<int>(d); }

// Shortest-path distance from each node to the nearest goal (reverse BFS).
// A graph without goals yields Unreachable everywhere.
std::vector<Distance> distances(const Graph& g);

// Witness maps g1 nodes to g2 nodes. Edge multisets must correspond; labels
// must match when respect_labels. init/goals are ignored.
std::optional<std::vector<int>> isomorphism(const Graph& g1, const Graph& g2, bool respect_labels);

[[nodiscard]] inline bool isomorphic(const Graph& g1, const Graph& g2, bool respect_labels) {
    return isomorphism(g1, g2, respect_labels).has_value();
}

// Copy with nodes renumbered: new id of node v is perm[v].
Graph permute(const Graph& g, const std::vector<int>& perm);

// Copy keeping only the action type (text before the first space, with
// parentheses stripped) of each label.
Graph action_type_labels(const Graph& g);

}  // namespace gplan
