#pragma once

// Description-logic concepts and roles over domain predicates, the boolean
// and numeric features built from them, and the costed feature pool.
//
// Text syntax (constructor names are case-sensitive, predicates lower case):
//   concept := Top | Bot | <pred> | <pred>_g | Not(C) | And(C, C)
//            | Exists(R, C) | Forall(R, C)
//   role    := <pred> | <pred>_g | Inverse(R) | Star(R)
//   feature := Bool(C) | Num(C) | Dist(C, R, C)
// <pred>_g reads the goal atoms of the instance. Nullary predicates used as
// concepts denote every object when true and nothing otherwise.
// Cost counts concept and role nodes; Bool/Num add nothing, Dist adds one.

#include "gplan/strips.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gplan {

enum class Op {
    Top,
    Bot,
    Prim,  // unary or nullary predicate as a concept
    Not,
    And,
    Exists,
    Forall,
    RolePrim,  // binary predicate
    Inverse,
    Star,
    Bool,
    Num,
    Dist,
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
    Op op = Op::Top;
    int predicate = -1;  // Prim / RolePrim
    bool goal = false;   // read the goal instead of the state
    std::vector<ExprPtr> kids;
};

class FeatureError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class FeatureKind { Boolean, Numeric };

struct Feature {
    std::string name;
    FeatureKind kind = FeatureKind::Numeric;
    ExprPtr expr;
    int cost = 1;
    std::string text;  // canonical expression text
};

// Builders; validate predicate arities against `domain`.
ExprPtr make_top();
ExprPtr make_bot();
ExprPtr make_prim(const Domain& domain, const std::string& pred, bool goal = false);
ExprPtr make_role(const Domain& domain, const std::string& pred, bool goal = false);
ExprPtr make_unary(Op op, ExprPtr kid);
ExprPtr make_binary(Op op, ExprPtr a, ExprPtr b);
ExprPtr make_dist(ExprPtr from, ExprPtr role, ExprPtr to);

[[nodiscard]] int expr_cost(const Expr& e);
[[nodiscard]] bool is_role(const Expr& e);
[[nodiscard]] std::string to_string(const Expr& e, const Domain& domain);

// Parses a feature ("Bool(...)", "Num(...)", "Dist(...)") or, with an
// optional "name:" prefix, a named one. Throws FeatureError.
Feature parse_feature(std::string_view text, const Domain& domain, std::string default_name = "f");
Feature make_feature(ExprPtr expr, const Domain& domain, std::string name = "f");

// Value that Dist takes when no path exists: |objects|^2 + 1.
[[nodiscard]] int dist_cap(const Instance& instance);

// Booleans evaluate to 0/1, numerics to nonnegative integers.
int eval(const Feature& f, const State& state, const Instance& instance);

using FeatureValuation = std::vector<int>;
FeatureValuation valuate(std::span<const Feature> features, const State& state, const Instance& instance);

// A state of some instance; pointers must outlive the pool computation.
struct Sample {
    const Instance* instance = nullptr;
    const State* state = nullptr;
};

struct PoolConfig {
    int max_complexity = 8;
    bool prune_constant = true;  // drop features constant over the samples
    int threads = 1;
};

struct Pool {
    std::vector<Feature> features;            // ascending cost, then text
    std::vector<std::vector<int>> values;     // values[f][sample]
};

// All features of cost <= max_complexity whose value vectors over the
// samples are pairwise distinct (cheaper kept, ties by text); concepts and
// roles with equal denotations are collapsed during generation.
// Throws FeatureError on empty samples; max_complexity < 1 gives an empty pool.
Pool generate_pool(const Domain& domain, std::span<const Sample> samples, const PoolConfig& config);

}  // namespace gplan
