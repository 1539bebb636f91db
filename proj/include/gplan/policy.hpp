#pragma once

// Rule-based general policies C -> E over features: satisfaction semantics,
// exhaustive verification against an instance and reactive execution.
//
// JSON form:
//   {"features": ["H: Bool(holding)", "n: Num(...)"],
//    "rules": [{"cond": ["-H", "n>0"], "eff": ["H", "dec(n)"]}, ...]}
// Condition tokens: "p", "-p" (boolean), "n=0", "n>0" (numeric).
// Effect tokens: "p", "-p", "p?" (boolean), "dec(n)", "inc(n)", "n?" (numeric).
// A feature without a "name:" prefix is named f<index>.

#include "gplan/features.hpp"
#include "gplan/state_space.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace gplan {

class PolicyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class CondKind { IsTrue, IsFalse, EqZero, GtZero };
enum class EffKind { SetTrue, SetFalse, AnyBool, Dec, Inc, AnyNum };

struct Condition {
    int feature = 0;  // index into the feature set
    CondKind kind = CondKind::IsTrue;
    friend auto operator<=>(const Condition&, const Condition&) = default;
};

struct Effect {
    int feature = 0;
    EffKind kind = EffKind::SetTrue;
    friend auto operator<=>(const Effect&, const Effect&) = default;
};

struct PolicyRule {
    std::vector<Condition> conds;
    std::vector<Effect> effs;
    friend bool operator==(const PolicyRule&, const PolicyRule&) = default;
};

struct Policy {
    std::vector<Feature> features;
    std::vector<PolicyRule> rules;

    // Throws PolicyError on out-of-range references, kind mismatches or
    // repeated features within one rule's conditions or effects.
    void validate() const;
    [[nodiscard]] int cost() const;
};

[[nodiscard]] bool cond_holds(const FeatureValuation& f, const PolicyRule& rule);

// Conditions hold on f, every effect is respected by f -> f2, and every
// feature not mentioned in the effects keeps its value. "?" allows equality.
[[nodiscard]] bool pair_satisfies(const FeatureValuation& f, const FeatureValuation& f2, const PolicyRule& rule);

[[nodiscard]] bool satisfies_some(const FeatureValuation& f, const FeatureValuation& f2,
                                  std::span<const PolicyRule> rules);

[[nodiscard]] bool compatible(const State& s, const State& s2, const Policy& policy, const Instance& instance);

enum class Outcome { Solves, Cycle, DeadEnd, Unknown };
std::string to_string(Outcome o);

struct VerifyResult {
    Outcome outcome = Outcome::Unknown;
    // DeadEnd: path from the initial state to the dead end (last element).
    // Cycle: path from the initial state to a state on a cycle, then around
    // the cycle back to that state (which thus appears twice).
    std::vector<State> witness;
    std::size_t states = 0;  // compatible states explored
    std::string detail;
};

// Explores the policy-compatible part of G(P) from the initial state, cutting
// at goal states. Non-goal states with no compatible successor are dead ends,
// whether or not some rule's condition holds there. Witnesses are
// shortest-prefix (BFS) ones. Limit violations give Unknown.
VerifyResult verify(const Policy& policy, const Instance& instance, const ExpandLimits& limits = {}, int threads = 1);

// Same analysis over an expanded space with precomputed valuations per
// state (values[state][feature]). Witness holds state ids.
struct GraphVerdict {
    Outcome outcome = Outcome::Solves;
    std::vector<int> witness;
    std::size_t states = 0;
};
GraphVerdict verify_on_space(const StateSpace& space, std::span<const FeatureValuation> values,
                             std::span<const PolicyRule> rules);

enum class ExecOutcome { GoalReached, DeadEnd, StepLimit };
std::string to_string(ExecOutcome o);

struct Execution {
    ExecOutcome outcome = ExecOutcome::StepLimit;
    std::vector<State> states;         // visited, starting with the initial state
    std::vector<std::string> actions;  // ground action names
};

// Greedy walk; each step picks a compatible successor, the first in ground
// action order without tie_break, a seeded uniform choice otherwise.
Execution execute(const Policy& policy, const Instance& instance, std::size_t max_steps,
                  std::optional<std::uint64_t> tie_break = std::nullopt);

nlohmann::json policy_to_json(const Policy& policy);
Policy policy_from_json(const nlohmann::json& j, const Domain& domain);
std::string rule_to_string(const PolicyRule& rule, std::span<const Feature> features);

}  // namespace gplan
