#pragma once

// Learning of general policies and sketches from expanded training
// instances.
//
// Policy learning picks the cheapest feature set Phi from a generated pool
// for which some rule set over Phi solves every training instance from
// every alive state. Rules are abstractions of transitions: a transition's
// pattern over Phi records, per feature, whether it is zero/false at the
// source and the sign of its change. A rule set is a set of patterns; it
// solves the training data iff
//   - no chosen pattern contains a non-candidate transition,
//   - every alive state has a candidate transition with a chosen pattern,
//   - the transitions with chosen patterns form no cycle among alive states.
// The search alternates a Max-SAT master problem over feature selection
// with a SAT check of the selected Phi. An infeasible Phi yields a cut
// "select one of the features that split a pattern in the unsatisfiable
// core", which every feasible refinement must satisfy.

#include "gplan/features.hpp"
#include "gplan/maxsat.hpp"
#include "gplan/policy.hpp"
#include "gplan/state_space.hpp"
#include "gplan/width.hpp"

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace gplan {

class LearnError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Solvable: a transition from an alive state is a candidate iff its target
// can still reach a goal and differs from the source.
// Decreasing: a candidate iff it strictly decreases the goal distance.
enum class GoodCriterion { Solvable, Decreasing };

enum class TransitionLabel { Candidate, Bad, SelfLoop };

struct LabeledTransition {
    int src = 0;
    int dst = 0;
    TransitionLabel label = TransitionLabel::Bad;
};

struct TrainingSample {
    std::shared_ptr<const Instance> instance;
    StateSpace space;
    std::vector<Distance> distance;
    std::vector<char> alive;                    // reachable, solvable, non-goal
    std::vector<LabeledTransition> transitions;  // out of alive states; distinct (src, dst), sorted

    [[nodiscard]] std::size_t num_alive() const;
};

// Throws LearnError when the initial state cannot reach a goal.
TrainingSample label_transitions(std::shared_ptr<const Instance> instance, GoodCriterion criterion,
                                 const ExpandLimits& limits = {});

// Per-feature transition code: 3 * (value > 0) + (sign of change + 1).
[[nodiscard]] std::uint8_t transition_code(int before, int after);
using Pattern = std::vector<std::uint8_t>;

struct LearnConfig {
    int max_complexity = 8;
    GoodCriterion criterion = GoodCriterion::Solvable;
    bool goal_separation = true;
    std::size_t max_iterations = 100'000;
    std::optional<std::chrono::steady_clock::time_point> deadline;
    int threads = 1;
    std::string external_solver;  // Max-SAT command for the master; empty: built-in
    ExpandLimits expand;
};

// Pool generated over every state of the samples, in sample order.
Pool make_training_pool(const Domain& domain, std::span<const TrainingSample> samples, const LearnConfig& config);

// Weighted clauses of the master problem: one variable per pool feature
// (catalog[v-1] names DIMACS variable v), goal separation, the given cuts
// as hard clauses over those variables and soft unit clauses -select(f) of
// weight cost(f). `infeasible` is set, with an explanation, when goal
// separation alone is impossible.
struct MasterEncoding {
    maxsat::WeightedCnf wcnf;
    std::vector<std::string> catalog;
    std::optional<std::string> infeasible;
};
MasterEncoding encode(std::span<const TrainingSample> samples, const Pool& pool, const LearnConfig& config,
                      std::span<const std::vector<int>> cuts = {});

enum class LearnStatus { Solved, Infeasible, Timeout };
std::string to_string(LearnStatus s);

struct SelectionResult {
    LearnStatus status = LearnStatus::Timeout;
    std::vector<int> features;      // pool indices, ascending
    std::vector<Pattern> patterns;  // chosen patterns over `features`
    std::uint64_t cost = 0;
    std::size_t iterations = 0;
    std::vector<std::vector<int>> cuts;
    std::string diagnosis;
};

// Cheapest feasible feature set of the pool, plus an inclusion-minimal
// pattern set for it.
SelectionResult select_features(std::span<const TrainingSample> samples, const Pool& pool, const LearnConfig& config);

// Feasibility check of one feature set; on success fills `patterns`, on
// failure returns the cut (possibly empty when no refinement in the pool
// can help).
struct FeatureSetCheck {
    bool feasible = false;
    std::vector<Pattern> patterns;
    std::vector<int> cut;
};
FeatureSetCheck check_feature_set(std::span<const TrainingSample> samples, const Pool& pool,
                                  std::span<const int> features);

// Rules from chosen patterns, merged while the merged rule matches exactly
// the union of the merged patterns.
Policy decode(const Pool& pool, std::span<const int> features, std::span<const Pattern> patterns);

struct ValidationEntry {
    std::string name;
    Outcome outcome = Outcome::Unknown;
    std::size_t states = 0;
    std::string detail;
};

struct LearnReport {
    LearnStatus status = LearnStatus::Timeout;
    std::size_t pool_size = 0;
    std::size_t training_states = 0;
    std::size_t iterations = 0;
    std::size_t cuts = 0;
    std::uint64_t cost = 0;
    std::string diagnosis;
    std::vector<ValidationEntry> validation;
    double pool_ms = 0;
    double solve_ms = 0;
    double validate_ms = 0;
};

struct LearnResult {
    std::optional<Policy> policy;
    LearnReport report;
};

// Throws LearnError on unsolvable training instances.
LearnResult learn_policy(const Domain& domain, std::span<const std::shared_ptr<const Instance>> train,
                         std::span<const std::shared_ptr<const Instance>> validate, const LearnConfig& config);

nlohmann::json report_to_json(const LearnReport& r);

struct SketchConfig {
    int max_complexity = 4;
    int k = 1;
    int max_rules = 2;
    int max_features = 2;
    std::size_t node_budget = 2'000'000;  // per instance and candidate
    std::optional<std::chrono::steady_clock::time_point> deadline;
    int threads = 1;
};

struct SketchResult {
    std::optional<Policy> sketch;
    std::size_t candidates_tested = 0;
    std::vector<std::vector<Segment>> segments;  // per training instance
    std::string failure;
};

// Generate-and-test over feature subsets in ascending total cost and, per
// subset, rule sets in ascending size; the first sketch under which siw_r
// with k_max = k solves every training instance wins.
SketchResult learn_sketch(const Domain& domain, std::span<const std::shared_ptr<const Instance>> train,
                          const SketchConfig& config);

}  // namespace gplan
