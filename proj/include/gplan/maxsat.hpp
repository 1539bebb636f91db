#pragma once

// Weighted partial Max-SAT: the WCNF interchange format and three solving
// routes (in-process linear search over the CDCL solver, exhaustive
// branch-and-bound for tiny instances, and an external solver process).

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace gplan::maxsat {

// Clauses use 1-based DIMACS literals.
struct WeightedCnf {
    int num_vars = 0;
    std::vector<std::vector<int>> hard;
    std::vector<std::pair<std::uint64_t, std::vector<int>>> soft;
    std::vector<std::string> comments;

    int new_var() { return ++num_vars; }
    void add_hard(std::vector<int> clause) { hard.push_back(std::move(clause)); }
    void add_soft(std::uint64_t weight, std::vector<int> clause) { soft.emplace_back(weight, std::move(clause)); }

    // Sum of soft weights plus one; the weight given to hard clauses.
    [[nodiscard]] std::uint64_t top() const;

    // "p wcnf <vars> <clauses> <top>" header, then "<w> <lits...> 0" lines,
    // hard clauses first in insertion order, soft clauses after.
    void write(std::ostream& os) const;
    static WeightedCnf read(std::istream& is);
};

enum class Status { Optimal, Infeasible, Unknown };

struct Solution {
    Status status = Status::Unknown;
    std::uint64_t cost = 0;
    std::vector<bool> assignment;  // index v-1 holds DIMACS variable v

    [[nodiscard]] bool value(int dimacs_var) const { return assignment.at(static_cast<std::size_t>(dimacs_var - 1)); }
};

struct Limits {
    std::optional<std::chrono::steady_clock::time_point> deadline;
};

// Cost of an assignment, or nullopt when it violates a hard clause.
std::optional<std::uint64_t> evaluate(const WeightedCnf& wcnf, const std::vector<bool>& assignment);

// SAT-UNSAT linear search on an incremental CDCL solver with a weighted
// sequential counter bounding the violated soft weight.
Solution solve_linear(const WeightedCnf& wcnf, const Limits& limits = {});

// Exhaustive depth-first branch-and-bound; rejects instances above max_vars.
Solution solve_branch_and_bound(const WeightedCnf& wcnf, int max_vars = 40);

// Runs `command <file.wcnf>` and parses the standard "s"/"o"/"v" output
// lines (both the integer-list and the bit-string "v" styles).
Solution solve_external(const WeightedCnf& wcnf, const std::string& command);

// Optimum search over fixed soft clauses and a hard clause set that only
// grows, on one incremental CDCL solver. Optimal costs never decrease
// between calls, so the proven lower bound is kept and the search steps the
// cost bound upward from it.
class Incremental {
public:
    explicit Incremental(const WeightedCnf& base);
    ~Incremental();
    Incremental(const Incremental&) = delete;
    Incremental& operator=(const Incremental&) = delete;

    // Literals must refer to variables of the base formula.
    void add_hard(const std::vector<int>& clause);
    Solution solve(const Limits& limits = {});
    [[nodiscard]] std::uint64_t lower_bound() const { return lower_bound_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    int num_vars_;
    std::uint64_t lower_bound_ = 0;
};

Solution parse_solver_output(std::istream& is, int num_vars);

}  // namespace gplan::maxsat
