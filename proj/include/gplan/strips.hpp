#pragma once

// Lifted STRIPS with negative preconditions/goals: domains, instances,
// closed-world states, grounding and successor semantics.

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gplan {

class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

enum class PredicateKind { Fluent, Static };

// Name of the built-in equality predicate (":equality"); static, arity 2,
// extension implicit.
inline constexpr const char* kEquality = "=";

struct Predicate {
    std::string name;
    int arity = 0;
    PredicateKind kind = PredicateKind::Fluent;

    friend bool operator==(const Predicate&, const Predicate&) = default;
};

// Lifted atoms hold parameter indices; ground atoms hold object indices.
struct Atom {
    int predicate = 0;
    std::vector<int> args;

    friend bool operator==(const Atom&, const Atom&) = default;
    friend auto operator<=>(const Atom&, const Atom&) = default;
};

struct Literal {
    Atom atom;
    bool positive = true;

    friend bool operator==(const Literal&, const Literal&) = default;
    friend auto operator<=>(const Literal&, const Literal&) = default;
};

struct ActionSchema {
    std::string name;
    std::vector<std::string> params;
    std::vector<Literal> static_pre;
    std::vector<Literal> pre;
    std::vector<Literal> eff;

    [[nodiscard]] int arity() const { return static_cast<int>(params.size()); }
    friend bool operator==(const ActionSchema&, const ActionSchema&) = default;
};

class Domain {
public:
    Domain() = default;

    // Classifies predicates (static = never in any effect, unless listed in
    // `static_override`, which replaces the computed set), moves static
    // preconditions into `static_pre`, and validates the result.
    Domain(std::string name, std::vector<Predicate> predicates, std::vector<ActionSchema> schemas,
           std::optional<std::set<std::string>> static_override = std::nullopt);

    [[nodiscard]] const std::string& name() const { return name_; }
    [[nodiscard]] const std::vector<Predicate>& predicates() const { return predicates_; }
    [[nodiscard]] const std::vector<ActionSchema>& schemas() const { return schemas_; }
    [[nodiscard]] const Predicate& predicate(int i) const { return predicates_.at(static_cast<std::size_t>(i)); }
    [[nodiscard]] std::optional<int> find_predicate(const std::string& name) const;
    [[nodiscard]] std::optional<int> find_schema(const std::string& name) const;
    [[nodiscard]] bool is_equality(int predicate) const { return predicate == equality_; }
    [[nodiscard]] bool uses_equality() const { return equality_ >= 0; }
    [[nodiscard]] bool is_static(int predicate) const {
        return predicates_.at(static_cast<std::size_t>(predicate)).kind == PredicateKind::Static;
    }

    friend bool operator==(const Domain&, const Domain&) = default;

private:
    std::string name_;
    std::vector<Predicate> predicates_;
    std::vector<ActionSchema> schemas_;
    int equality_ = -1;
};

// Canonical closed-world state: sorted, duplicate-free fluent atom ids.
class State {
public:
    State() = default;
    explicit State(std::vector<int> atoms);

    [[nodiscard]] const std::vector<int>& atoms() const { return atoms_; }
    [[nodiscard]] bool contains(int atom) const;
    [[nodiscard]] std::size_t size() const { return atoms_.size(); }

    friend bool operator==(const State&, const State&) = default;
    friend auto operator<=>(const State&, const State&) = default;

private:
    std::vector<int> atoms_;
};

struct StateHash {
    std::size_t operator()(const State& s) const noexcept;
};

struct GroundAction {
    int schema = 0;
    std::vector<int> args;
    std::vector<int> pre_pos;
    std::vector<int> pre_neg;
    std::vector<int> add;
    std::vector<int> del;
};

class Instance {
public:
    Instance() = default;

    // Throws ValidationError on unknown predicates, arity mismatches,
    // out-of-range objects and static predicates in the goal.
    Instance(std::shared_ptr<const Domain> domain, std::string name, std::vector<std::string> objects,
             std::vector<Atom> init, std::vector<Literal> goal);

    [[nodiscard]] const Domain& domain() const { return *domain_; }
    [[nodiscard]] const std::shared_ptr<const Domain>& domain_ptr() const { return domain_; }
    [[nodiscard]] const std::string& name() const { return name_; }
    [[nodiscard]] const std::vector<std::string>& objects() const { return objects_; }
    [[nodiscard]] int num_objects() const { return static_cast<int>(objects_.size()); }
    [[nodiscard]] std::optional<int> find_object(const std::string& name) const;
    [[nodiscard]] const std::vector<Atom>& init() const { return init_; }
    [[nodiscard]] const std::vector<Literal>& goal() const { return goal_; }

    // Dense atom numbering over every predicate (fluent and static).
    [[nodiscard]] std::size_t num_atoms() const { return total_atoms_; }
    [[nodiscard]] int atom_id(const Atom& ground) const;
    // Ids of predicate p occupy [offset, offset + |objects|^arity), args in
    // row-major order.
    [[nodiscard]] int predicate_offset(int p) const { return static_cast<int>(offsets_.at(static_cast<std::size_t>(p))); }
    [[nodiscard]] Atom atom(int id) const;
    [[nodiscard]] std::string atom_name(int id) const;
    [[nodiscard]] bool is_fluent_atom(int id) const;

    [[nodiscard]] const State& initial_state() const { return init_state_; }
    [[nodiscard]] bool static_holds(const Atom& ground) const;
    [[nodiscard]] const std::vector<int>& static_atoms() const { return static_true_; }
    [[nodiscard]] bool is_goal(const State& s) const;
    [[nodiscard]] const std::vector<int>& goal_pos() const { return goal_pos_; }
    [[nodiscard]] const std::vector<int>& goal_neg() const { return goal_neg_; }

    [[nodiscard]] std::string action_name(const GroundAction& a) const;

    // Structural equality: same domain contents, name, objects, init and goal lists.
    friend bool operator==(const Instance& a, const Instance& b);

private:
    std::shared_ptr<const Domain> domain_;
    std::string name_;
    std::vector<std::string> objects_;
    std::vector<Atom> init_;
    std::vector<Literal> goal_;
    std::vector<std::size_t> offsets_;
    std::size_t total_atoms_ = 0;
    State init_state_;
    std::vector<int> static_true_;  // sorted ids
    std::vector<int> goal_pos_;
    std::vector<int> goal_neg_;
};

// One action per binding whose static preconditions hold; ordered by schema
// name, then by the tuple of argument object names.
std::vector<GroundAction> ground(const Instance& instance);

[[nodiscard]] bool is_applicable(const State& state, const GroundAction& action);

// Indices into `actions` of the applicable ones, in order.
std::vector<std::size_t> applicable(const State& state, std::span<const GroundAction> actions);

// (state - del) ∪ add. Throws ContractViolation when inapplicable.
State apply(const State& state, const GroundAction& action);

}  // namespace gplan
