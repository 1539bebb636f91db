#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gplan/maxsat.hpp"
#include "gplan/sat.hpp"

#include <random>
#include <sstream>

using namespace gplan;

namespace {

using Cnf = std::vector<std::vector<int>>;

Cnf random_3sat(std::mt19937& rng, int vars, int clauses) {
    std::uniform_int_distribution<int> var(1, vars);
    std::bernoulli_distribution sign(0.5);
    Cnf cnf;
    for (int i = 0; i < clauses; ++i) {
        std::vector<int> c;
        for (int k = 0; k < 3; ++k) c.push_back(sign(rng) ? var(rng) : -var(rng));
        cnf.push_back(c);
    }
    return cnf;
}

bool brute_force_sat(const Cnf& cnf, int vars) {
    for (unsigned m = 0; m < (1u << vars); ++m) {
        bool all = true;
        for (const auto& c : cnf) {
            bool any = false;
            for (int l : c) {
                bool v = ((m >> (std::abs(l) - 1)) & 1u) != 0;
                if (v == (l > 0)) any = true;
            }
            if (!any) {
                all = false;
                break;
            }
        }
        if (all) return true;
    }
    return false;
}

sat::Solver load(const Cnf& cnf, int vars) {
    sat::Solver s;
    for (int v = 0; v < vars; ++v) s.new_var();
    for (const auto& c : cnf) {
        std::vector<sat::Lit> lits;
        for (int l : c) lits.push_back(sat::from_dimacs(l));
        s.add_clause(lits);
    }
    return s;
}

}  // namespace

TEST_CASE("pigeonhole 6 into 5 is unsatisfiable") {
    const int pigeons = 6;
    const int holes = 5;
    sat::Solver s;
    auto x = [&](int p, int h) { return p * holes + h; };
    for (int i = 0; i < pigeons * holes; ++i) s.new_var();
    for (int p = 0; p < pigeons; ++p) {
        std::vector<sat::Lit> c;
        for (int h = 0; h < holes; ++h) c.push_back(sat::pos(x(p, h)));
        s.add_clause(c);
    }
    for (int h = 0; h < holes; ++h)
        for (int p = 0; p < pigeons; ++p)
            for (int q = p + 1; q < pigeons; ++q) s.add_clause({sat::neg(x(p, h)), sat::neg(x(q, h))});
    CHECK(s.solve() == sat::Result::Unsat);
}

TEST_CASE("random 3-SAT agrees with brute-force enumeration") {
    std::mt19937 rng(7);
    for (int round = 0; round < 300; ++round) {
        const int vars = 10;
        Cnf cnf = random_3sat(rng, vars, 30 + round % 25);
        sat::Solver s = load(cnf, vars);
        sat::Result r = s.solve();
        bool expected = brute_force_sat(cnf, vars);
        REQUIRE(r == (expected ? sat::Result::Sat : sat::Result::Unsat));
        if (r == sat::Result::Sat) {
            for (const auto& c : cnf) {
                bool any = false;
                for (int l : c) any = any || s.value(sat::from_dimacs(l));
                REQUIRE(any);
            }
        }
    }
}

TEST_CASE("assumptions are retractable and failed assumptions are reported") {
    sat::Solver s;
    sat::Var a = s.new_var();
    sat::Var b = s.new_var();
    sat::Var c = s.new_var();
    s.add_clause({sat::neg(a), sat::pos(b)});
    s.add_clause({sat::neg(b), sat::pos(c)});
    std::vector<sat::Lit> assume{sat::pos(a), sat::neg(c)};
    CHECK(s.solve(assume) == sat::Result::Unsat);
    const auto& failed = s.failed_assumptions();
    CHECK(!failed.empty());
    for (sat::Lit l : failed) CHECK((l == sat::neg(a) || l == sat::pos(c)));
    CHECK(s.solve() == sat::Result::Sat);
    std::vector<sat::Lit> only_a{sat::pos(a)};
    CHECK(s.solve(only_a) == sat::Result::Sat);
    CHECK(s.value(c));
}

TEST_CASE("conflict budget yields Unknown on a hard instance") {
    const int pigeons = 9;
    const int holes = 8;
    sat::Solver s;
    auto x = [&](int p, int h) { return p * holes + h; };
    for (int i = 0; i < pigeons * holes; ++i) s.new_var();
    for (int p = 0; p < pigeons; ++p) {
        std::vector<sat::Lit> c;
        for (int h = 0; h < holes; ++h) c.push_back(sat::pos(x(p, h)));
        s.add_clause(c);
    }
    for (int h = 0; h < holes; ++h)
        for (int p = 0; p < pigeons; ++p)
            for (int q = p + 1; q < pigeons; ++q) s.add_clause({sat::neg(x(p, h)), sat::neg(x(q, h))});
    sat::Limits lim;
    lim.conflicts = 10;
    CHECK(s.solve({}, lim) == sat::Result::Unknown);
}

TEST_CASE("linear Max-SAT matches branch-and-bound on random instances") {
    std::mt19937 rng(11);
    std::uniform_int_distribution<int> weight(1, 9);
    for (int round = 0; round < 120; ++round) {
        const int vars = 12;
        maxsat::WeightedCnf w;
        w.num_vars = vars;
        for (auto& c : random_3sat(rng, vars, 18)) w.add_hard(c);
        for (auto& c : random_3sat(rng, vars, 6)) w.add_soft(static_cast<std::uint64_t>(weight(rng)), c);
        for (int v = 1; v <= vars; ++v) {
            if (v % 3 == 0) w.add_soft(static_cast<std::uint64_t>(weight(rng)), {-v});
        }
        auto lin = maxsat::solve_linear(w);
        auto bb = maxsat::solve_branch_and_bound(w);
        REQUIRE(lin.status == bb.status);
        if (lin.status == maxsat::Status::Optimal) {
            REQUIRE(lin.cost == bb.cost);
            REQUIRE(maxsat::evaluate(w, lin.assignment) == lin.cost);
        }
    }
}

TEST_CASE("WCNF text round-trips and keeps hard/soft separation") {
    maxsat::WeightedCnf w;
    w.num_vars = 3;
    w.add_hard({1, -2});
    w.add_soft(4, {2});
    w.add_soft(1, {-1, 3});
    w.comments.push_back("var 1 Select f0");
    std::ostringstream os;
    w.write(os);
    CHECK(os.str() ==
          "c var 1 Select f0\n"
          "p wcnf 3 3 6\n"
          "6 1 -2 0\n"
          "4 2 0\n"
          "1 -1 3 0\n");
    std::istringstream is(os.str());
    auto back = maxsat::WeightedCnf::read(is);
    CHECK(back.hard == w.hard);
    CHECK(back.soft == w.soft);
    CHECK(back.num_vars == 3);
}

TEST_CASE("solver output parsing accepts both model styles") {
    std::istringstream a("c comment\no 3\ns OPTIMUM FOUND\nv 1 -2 3\n");
    auto s1 = maxsat::parse_solver_output(a, 3);
    REQUIRE(s1.status == maxsat::Status::Optimal);
    CHECK(s1.assignment == std::vector<bool>{true, false, true});
    std::istringstream b("o 3\ns OPTIMUM FOUND\nv 011\n");
    auto s2 = maxsat::parse_solver_output(b, 3);
    CHECK(s2.assignment == std::vector<bool>{false, true, true});
    std::istringstream c("s UNSATISFIABLE\n");
    CHECK(maxsat::parse_solver_output(c, 3).status == maxsat::Status::Infeasible);
}

TEST_CASE("infeasible hard part is reported as Infeasible") {
    maxsat::WeightedCnf w;
    w.num_vars = 1;
    w.add_hard({1});
    w.add_hard({-1});
    w.add_soft(1, {1});
    CHECK(maxsat::solve_linear(w).status == maxsat::Status::Infeasible);
    CHECK(maxsat::solve_branch_and_bound(w).status == maxsat::Status::Infeasible);
}
