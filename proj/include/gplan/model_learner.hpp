#pragma once

// Learning lifted STRIPS domains from edge-labeled state graphs.
//
// A hypothesis fixes a structure (fluent predicate arities, one schema per
// edge label with its arity) and is searched for with SAT: node atom sets,
// edge bindings and schema precondition/effect flags are variables, and the
// constraints make the ground instance's reachable graph label-isomorphic
// to each input graph. Structures are probed in ascending cost, so the
// first satisfiable one is a cheapest domain within the bounds.
//
// Learned schemas use positive fluent preconditions, add and delete lists,
// inequality of parameter pairs and at most one learnable binary static
// predicate named "st" whose extension is chosen per graph. By default "st"
// ranges over strict weak orders, which keeps infeasibility proofs small.
//
// Constraints are added in BFS layers from each graph's initial node and
// solved incrementally; an unsatisfiable layer prefix refutes a structure
// early.

#include "gplan/state_space.hpp"
#include "gplan/strips.hpp"

#include <chrono>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gplan {

struct HypothesisSpace {
    int max_predicates = 1;
    int max_pred_arity = 2;
    int max_schema_arity = 3;                // bound for labels not listed below
    std::map<std::string, int> schema_arity;  // per-label bound
    std::vector<int> objects;                 // per input graph
    bool static_predicate = true;
    bool static_order = true;  // "st" is a strict weak order (a ranking with ties)
};

struct ModelConfig {
    std::optional<std::chrono::steady_clock::time_point> deadline;
    bool ordered_statics = true;  // validation: binary statics range over strict weak orders
};

struct Structure {
    std::vector<int> predicate_arities;  // ascending
    std::vector<std::string> labels;     // sorted
    std::vector<int> schema_arities;     // parallel to labels

    [[nodiscard]] int cost() const;
    [[nodiscard]] std::string to_string() const;
};

// Every structure within the bounds for the given labels, ascending by cost,
// then predicate arities, then schema arities.
std::vector<Structure> enumerate_structures(const std::vector<std::string>& labels, const HypothesisSpace& space);

struct DomainHypothesis {
    std::shared_ptr<const Domain> domain;
    std::vector<Instance> instances;              // per graph, goal left empty
    std::vector<std::vector<State>> node_states;  // per graph, per node
    Structure structure;
    int cost = 0;
};

enum class ModelStatus { Found, Infeasible, Timeout };
std::string to_string(ModelStatus s);

struct ProbeRecord {
    Structure structure;
    std::string verdict;  // "sat", "unsat", "pruned: ...", "timeout"
    double ms = 0;
};

struct ModelResult {
    ModelStatus status = ModelStatus::Timeout;
    std::optional<DomainHypothesis> hypothesis;
    std::vector<ProbeRecord> probes;
    std::string diagnosis;
};

// Throws std::invalid_argument on unlabeled graphs, a mismatched object
// count list, or nodes unreachable from the graph's initial node (node 0
// when unset). A returned hypothesis has been re-expanded and checked for
// label-isomorphism against every input graph.
ModelResult learn_domain(std::span<const Graph> graphs, const HypothesisSpace& space, const ModelConfig& config = {});

// Sum over schemas of 1 + arity plus sum over fluent predicates of 1 + arity.
int cost(const Domain& domain);

struct DomainValidation {
    bool valid = false;
    bool timed_out = false;
    int objects = 0;                  // object count of the witness
    std::optional<Instance> witness;  // static and initial atoms; empty goal
    std::string detail;
};

// Searches object counts max_objects down to 0 for an instance of the frozen domain
// whose reachable graph is label-isomorphic to `graph` (labels compared by
// action type).
DomainValidation validate_domain(std::shared_ptr<const Domain> domain, const Graph& graph, int max_objects,
                                 const ModelConfig& config = {});

}  // namespace gplan
