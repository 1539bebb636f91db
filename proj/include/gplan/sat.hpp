#pragma once

// Incremental CDCL SAT solver: two watched literals, first-UIP learning,
// VSIDS branching, phase saving, Luby restarts and solving under
// assumptions with final-conflict extraction.

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace gplan::sat {

using Var = int;

struct Lit {
    int code = -2;

    static Lit make(Var v, bool negated = false) { return Lit{2 * v + (negated ? 1 : 0)}; }
    [[nodiscard]] Var var() const { return code >> 1; }
    [[nodiscard]] bool negated() const { return (code & 1) != 0; }
    [[nodiscard]] Lit operator~() const { return Lit{code ^ 1}; }
    friend bool operator==(Lit a, Lit b) { return a.code == b.code; }
    friend bool operator!=(Lit a, Lit b) { return a.code != b.code; }
    friend bool operator<(Lit a, Lit b) { return a.code < b.code; }
};

inline Lit pos(Var v) { return Lit::make(v, false); }
inline Lit neg(Var v) { return Lit::make(v, true); }

// DIMACS-style signed integer (1-based) to literal and back.
inline Lit from_dimacs(int d) { return d > 0 ? pos(d - 1) : neg(-d - 1); }
inline int to_dimacs(Lit l) { return l.negated() ? -(l.var() + 1) : l.var() + 1; }

enum class Result { Sat, Unsat, Unknown };

struct Limits {
    std::int64_t conflicts = -1;  // negative: unlimited
    std::optional<std::chrono::steady_clock::time_point> deadline;
};

struct Stats {
    std::uint64_t decisions = 0;
    std::uint64_t propagations = 0;
    std::uint64_t conflicts = 0;
    std::uint64_t restarts = 0;
};

class Solver {
public:
    Solver();

    Var new_var(bool preferred_phase = false);
    [[nodiscard]] int num_vars() const { return static_cast<int>(assigns_.size()); }
    [[nodiscard]] std::size_t num_clauses() const { return num_original_; }

    // Returns false once the clause database is trivially unsatisfiable.
    bool add_clause(std::span<const Lit> lits);
    bool add_clause(std::initializer_list<Lit> lits) {
        return add_clause(std::span<const Lit>(lits.begin(), lits.size()));
    }

    Result solve(std::span<const Lit> assumptions = {}, const Limits& limits = {});

    // Unassigned variables of higher priority are always branched on first;
    // activity orders variables within a priority level. Default 0.
    void set_priority(Var v, int priority);

    // Valid after solve() returned Sat.
    [[nodiscard]] bool value(Var v) const { return model_[static_cast<std::size_t>(v)] == kTrue; }
    [[nodiscard]] bool value(Lit l) const { return value(l.var()) != l.negated(); }

    // After Unsat under assumptions: the subset of assumptions responsible.
    [[nodiscard]] const std::vector<Lit>& failed_assumptions() const { return failed_; }

    [[nodiscard]] bool okay() const { return ok_; }
    [[nodiscard]] const Stats& stats() const { return stats_; }

private:
    static constexpr std::int8_t kTrue = 1;
    static constexpr std::int8_t kFalse = -1;
    static constexpr std::int8_t kUndef = 0;
    static constexpr int kNoReason = -1;

    struct Clause {
        std::vector<Lit> lits;
        double activity = 0.0;
        int lbd = 0;
        bool learnt = false;
        bool removed = false;
    };
    struct Watcher {
        int clause;
        Lit blocker;
    };

    [[nodiscard]] std::int8_t lit_value(Lit l) const {
        std::int8_t v = assigns_[static_cast<std::size_t>(l.var())];
        return l.negated() ? static_cast<std::int8_t>(-v) : v;
    }
    [[nodiscard]] int decision_level() const { return static_cast<int>(trail_lim_.size()); }

    int attach_new_clause(std::vector<Lit> lits, bool learnt);
    void attach(int cref);
    void assign(Lit l, int reason);
    int propagate();
    void analyze(int confl, std::vector<Lit>& learnt, int& backtrack_level, int& lbd);
    bool literal_redundant(Lit l, std::uint32_t abstract_levels);
    void analyze_final(Lit p);
    void cancel_until(int level);
    Lit pick_branch();
    void bump_var(Var v);
    void bump_clause(Clause& c);
    void decay_activities();
    void reduce_db();
    void collect_garbage();
    [[nodiscard]] bool locked(int cref) const;

    // Binary max-heap on variable activity.
    [[nodiscard]] bool before(Var a, Var b) const;
    void heap_insert(Var v);
    void heap_up(int pos);
    void heap_down(int pos);
    Var heap_pop();
    [[nodiscard]] bool heap_contains(Var v) const { return heap_index_[static_cast<std::size_t>(v)] >= 0; }

    bool ok_ = true;
    std::vector<Clause> clauses_;
    std::vector<int> learnts_;
    std::vector<int> free_slots_;
    std::vector<std::vector<Watcher>> watches_;
    std::vector<std::int8_t> assigns_;
    std::vector<std::int8_t> model_;
    std::vector<bool> phase_;
    std::vector<int> level_;
    std::vector<int> reason_;
    std::vector<double> activity_;
    std::vector<int> priority_;
    std::vector<Lit> trail_;
    std::vector<int> trail_lim_;
    std::size_t qhead_ = 0;
    std::vector<Var> heap_;
    std::vector<int> heap_index_;
    std::vector<char> seen_;
    std::vector<Lit> analyze_stack_;
    std::vector<Lit> analyze_toclear_;
    std::vector<Lit> assumptions_;
    std::vector<Lit> failed_;
    double var_inc_ = 1.0;
    double var_decay_ = 0.95;
    double cla_inc_ = 1.0;
    double cla_decay_ = 0.999;
    double max_learnts_ = 0.0;
    std::size_t num_original_ = 0;
    std::size_t removed_count_ = 0;
    Stats stats_;
};

}  // namespace gplan::sat
