#include "gplan/maxsat.hpp"

#include "gplan/sat.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace gplan::maxsat {

std::uint64_t WeightedCnf::top() const {
    std::uint64_t sum = 1;
    for (const auto& [w, c] : soft) sum += w;
    return sum;
}

void WeightedCnf::write(std::ostream& os) const {
    for (const auto& c : comments) os << "c " << c << '\n';
    const std::uint64_t t = top();
    os << "p wcnf " << num_vars << ' ' << hard.size() + soft.size() << ' ' << t << '\n';
    for (const auto& clause : hard) {
        os << t;
        for (int l : clause) os << ' ' << l;
        os << " 0\n";
    }
    for (const auto& [w, clause] : soft) {
        os << w;
        for (int l : clause) os << ' ' << l;
        os << " 0\n";
    }
}

WeightedCnf WeightedCnf::read(std::istream& is) {
    WeightedCnf out;
    std::string line;
    std::uint64_t t = 0;
    bool header = false;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line[0] == 'c') {
            out.comments.push_back(line.size() > 2 ? line.substr(2) : std::string{});
            continue;
        }
        std::istringstream ls(line);
        if (line[0] == 'p') {
            std::string p;
            std::string fmt;
            std::size_t nclauses = 0;
            ls >> p >> fmt >> out.num_vars >> nclauses >> t;
            if (fmt != "wcnf" || !ls) throw std::runtime_error("wcnf: malformed header: " + line);
            header = true;
            continue;
        }
        if (!header) throw std::runtime_error("wcnf: clause before header");
        std::uint64_t w = 0;
        ls >> w;
        std::vector<int> clause;
        int lit = 0;
        while (ls >> lit && lit != 0) {
            if (std::abs(lit) > out.num_vars) throw std::runtime_error("wcnf: literal out of range: " + line);
            clause.push_back(lit);
        }
        if (lit != 0) throw std::runtime_error("wcnf: clause not terminated by 0: " + line);
        if (w >= t) {
            out.hard.push_back(std::move(clause));
        } else {
            out.soft.emplace_back(w, std::move(clause));
        }
    }
    if (!header) throw std::runtime_error("wcnf: missing header");
    return out;
}

std::optional<std::uint64_t> evaluate(const WeightedCnf& wcnf, const std::vector<bool>& a) {
    auto sat = [&a](const std::vector<int>& c) {
        return std::any_of(c.begin(), c.end(), [&a](int l) {
            return a[static_cast<std::size_t>(std::abs(l) - 1)] == (l > 0);
        });
    };
    for (const auto& c : wcnf.hard) {
        if (!sat(c)) return std::nullopt;
    }
    std::uint64_t cost = 0;
    for (const auto& [w, c] : wcnf.soft) {
        if (!sat(c)) cost += w;
    }
    return cost;
}

namespace {

struct Relaxed {
    sat::Solver solver;
    std::vector<sat::Lit> relax;  // true iff the soft clause is violated
    std::vector<std::uint64_t> weights;
};

void load(const WeightedCnf& wcnf, Relaxed& r) {
    for (int v = 0; v < wcnf.num_vars; ++v) r.solver.new_var(false);
    std::vector<sat::Lit> buf;
    for (const auto& c : wcnf.hard) {
        buf.clear();
        for (int l : c) buf.push_back(sat::from_dimacs(l));
        r.solver.add_clause(buf);
    }
    for (const auto& [w, c] : wcnf.soft) {
        if (w == 0) continue;
        if (c.size() == 1) {
            r.relax.push_back(~sat::from_dimacs(c[0]));
        } else {
            sat::Var rv = r.solver.new_var(false);
            buf.clear();
            for (int l : c) buf.push_back(sat::from_dimacs(l));
            buf.push_back(sat::pos(rv));
            r.solver.add_clause(buf);
            r.relax.push_back(sat::pos(rv));
        }
        r.weights.push_back(w);
    }
}

std::uint64_t model_cost(const Relaxed& r) {
    std::uint64_t cost = 0;
    for (std::size_t i = 0; i < r.relax.size(); ++i) {
        if (r.solver.value(r.relax[i])) cost += r.weights[i];
    }
    return cost;
}

std::vector<bool> extract(const Relaxed& r, int num_vars) {
    std::vector<bool> a(static_cast<std::size_t>(num_vars));
    for (int v = 0; v < num_vars; ++v) a[static_cast<std::size_t>(v)] = r.solver.value(v);
    return a;
}

// Outputs o[j] (j = 1..bound) with "violated weight >= j" => o[j].
std::vector<sat::Lit> build_counter(Relaxed& r, std::uint64_t bound) {
    auto k = static_cast<std::size_t>(bound);
    sat::Solver& s = r.solver;
    std::vector<sat::Lit> prev;  // prev[j-1] <-> sum of earlier items >= j
    for (std::size_t i = 0; i < r.relax.size(); ++i) {
        std::vector<sat::Lit> cur(k);
        for (std::size_t j = 0; j < k; ++j) cur[j] = sat::pos(s.new_var(false));
        for (std::size_t j = 1; j < k; ++j) s.add_clause({~cur[j], cur[j - 1]});
        auto w = static_cast<std::size_t>(std::min<std::uint64_t>(r.weights[i], bound));
        s.add_clause({~r.relax[i], cur[w - 1]});
        if (!prev.empty()) {
            for (std::size_t j = 0; j < k; ++j) {
                s.add_clause({~prev[j], cur[j]});
                std::size_t target = std::min(k - 1, j + w);
                s.add_clause({~r.relax[i], ~prev[j], cur[target]});
            }
        }
        prev = std::move(cur);
    }
    return prev;
}

std::vector<sat::Lit> relax_assumptions(const Relaxed& r, const std::vector<bool>& violated) {
    std::vector<sat::Lit> out;
    for (std::size_t j = 0; j < r.relax.size(); ++j) out.push_back(violated[j] ? r.relax[j] : ~r.relax[j]);
    return out;
}

}  // namespace

Solution solve_linear(const WeightedCnf& wcnf, const Limits& limits) {
    Relaxed r;
    load(wcnf, r);
    sat::Limits sl;
    sl.deadline = limits.deadline;
    Solution best;
    sat::Result res = r.solver.solve({}, sl);
    if (res == sat::Result::Unsat) {
        best.status = Status::Infeasible;
        return best;
    }
    if (res == sat::Result::Unknown) return best;
    best.cost = model_cost(r);
    best.assignment = extract(r, wcnf.num_vars);

    // Greedy descent: keep satisfied soft clauses satisfied and try to
    // additionally satisfy one violated soft clause at a time.
    sat::Limits probe = sl;
    probe.conflicts = 2000;
    for (std::size_t i = 0; i < r.relax.size() && best.cost > 0; ++i) {
        if (!r.solver.value(r.relax[i])) continue;
        std::vector<sat::Lit> assume;
        for (std::size_t j = 0; j < r.relax.size(); ++j) {
            if (j == i || !r.solver.value(r.relax[j])) assume.push_back(~r.relax[j]);
        }
        std::vector<bool> snapshot(r.relax.size());
        for (std::size_t j = 0; j < r.relax.size(); ++j) snapshot[j] = r.solver.value(r.relax[j]);
        res = r.solver.solve(assume, probe);
        if (res == sat::Result::Sat) {
            best.cost = model_cost(r);
            best.assignment = extract(r, wcnf.num_vars);
        } else {
            // Restore the previous model as the reference point.
            res = r.solver.solve(relax_assumptions(r, snapshot), sl);
            if (res != sat::Result::Sat) return best;
        }
    }

    while (best.cost > 0) {
        std::vector<sat::Lit> counter = build_counter(r, best.cost);
        for (;;) {
            std::vector<sat::Lit> bound_assumption{~counter[static_cast<std::size_t>(best.cost - 1)]};
            res = r.solver.solve(bound_assumption, sl);
            if (res == sat::Result::Unknown) return best;
            if (res == sat::Result::Unsat) {
                best.status = Status::Optimal;
                return best;
            }
            best.cost = model_cost(r);
            best.assignment = extract(r, wcnf.num_vars);
            if (best.cost == 0) break;
        }
    }
    best.status = Status::Optimal;
    return best;
}

struct Incremental::Impl {
    Relaxed r;
    std::vector<sat::Lit> counter;  // counter[j] <= violated weight > j
};

Incremental::Incremental(const WeightedCnf& base) : impl_(std::make_unique<Impl>()), num_vars_(base.num_vars) {
    load(base, impl_->r);
}

Incremental::~Incremental() = default;

void Incremental::add_hard(const std::vector<int>& clause) {
    std::vector<sat::Lit> buf;
    for (int l : clause) {
        if (l == 0 || std::abs(l) > num_vars_) throw std::invalid_argument("incremental Max-SAT: literal out of range");
        buf.push_back(sat::from_dimacs(l));
    }
    impl_->r.solver.add_clause(buf);
}

Solution Incremental::solve(const Limits& limits) {
    Solution out;
    auto& r = impl_->r;
    sat::Limits sl;
    sl.deadline = limits.deadline;
    std::uint64_t total = 0;
    for (auto w : r.weights) total += w;
    for (;;) {
        const std::uint64_t c = lower_bound_;
        std::vector<sat::Lit> assume;
        if (c < total) {
            if (impl_->counter.size() <= c) impl_->counter = build_counter(r, std::max<std::uint64_t>(2 * (c + 1), 16));
            assume.push_back(~impl_->counter[static_cast<std::size_t>(c)]);
        }
        const auto res = r.solver.solve(assume, sl);
        if (res == sat::Result::Unknown) return out;
        if (res == sat::Result::Sat) {
            out.status = Status::Optimal;
            out.cost = model_cost(r);
            out.assignment = extract(r, num_vars_);
            return out;
        }
        if (assume.empty() || r.solver.failed_assumptions().empty()) {
            out.status = Status::Infeasible;
            return out;
        }
        ++lower_bound_;
    }
}

Solution solve_branch_and_bound(const WeightedCnf& wcnf, int max_vars) {
    if (wcnf.num_vars > max_vars) {
        throw std::invalid_argument("branch-and-bound limited to " + std::to_string(max_vars) + " variables");
    }
    const auto n = static_cast<std::size_t>(wcnf.num_vars);
    std::vector<int> value(n + 1, 0);  // 0 unassigned, 1 true, -1 false
    Solution best;
    best.status = Status::Infeasible;
    std::uint64_t best_cost = std::numeric_limits<std::uint64_t>::max();

    auto clause_state = [&value](const std::vector<int>& c) {
        bool open = false;
        for (int l : c) {
            int v = value[static_cast<std::size_t>(std::abs(l))];
            if (v == 0) {
                open = true;
            } else if ((v > 0) == (l > 0)) {
                return 1;  // satisfied
            }
        }
        return open ? 0 : -1;
    };
    auto bound = [&]() -> std::optional<std::uint64_t> {
        for (const auto& c : wcnf.hard) {
            if (clause_state(c) < 0) return std::nullopt;
        }
        std::uint64_t lb = 0;
        for (const auto& [w, c] : wcnf.soft) {
            if (clause_state(c) < 0) lb += w;
        }
        return lb;
    };
    auto rec = [&](auto&& self, std::size_t v) -> void {
        auto lb = bound();
        if (!lb || *lb >= best_cost) return;
        if (v > n) {
            best_cost = *lb;
            best.status = Status::Optimal;
            best.cost = *lb;
            best.assignment.assign(n, false);
            for (std::size_t i = 1; i <= n; ++i) best.assignment[i - 1] = value[i] > 0;
            return;
        }
        for (int choice : {-1, 1}) {
            value[v] = choice;
            self(self, v + 1);
        }
        value[v] = 0;
    };
    rec(rec, 1);
    return best;
}

Solution parse_solver_output(std::istream& is, int num_vars) {
    Solution sol;
    std::string line;
    std::vector<bool> a(static_cast<std::size_t>(num_vars), false);
    bool have_model = false;
    while (std::getline(is, line)) {
        if (line.rfind("s ", 0) == 0) {
            if (line.find("OPTIMUM FOUND") != std::string::npos) {
                sol.status = Status::Optimal;
            } else if (line.find("UNSATISFIABLE") != std::string::npos) {
                sol.status = Status::Infeasible;
            }
        } else if (line.rfind("o ", 0) == 0) {
            sol.cost = std::stoull(line.substr(2));
        } else if (line.rfind("v ", 0) == 0) {
            std::string body = line.substr(2);
            bool bitstring = !body.empty() && body.find_first_not_of("01 ") == std::string::npos &&
                             body.find(' ') == std::string::npos;
            if (bitstring) {
                for (std::size_t i = 0; i < body.size() && i < a.size(); ++i) a[i] = body[i] == '1';
            } else {
                std::istringstream ls(body);
                int lit = 0;
                while (ls >> lit) {
                    if (lit == 0) break;
                    auto idx = static_cast<std::size_t>(std::abs(lit) - 1);
                    if (idx < a.size()) a[idx] = lit > 0;
                }
            }
            have_model = true;
        }
    }
    if (sol.status == Status::Optimal && have_model) sol.assignment = std::move(a);
    if (sol.status == Status::Optimal && !have_model) sol.status = Status::Unknown;
    return sol;
}

Solution solve_external(const WeightedCnf& wcnf, const std::string& command) {
    auto path = std::filesystem::temp_directory_path() /
                ("gplan-" + std::to_string(std::hash<std::string>{}(command + std::to_string(wcnf.num_vars))) + "-" +
                 std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()) + ".wcnf");
    {
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write " + path.string());
        wcnf.write(out);
    }
    std::string cmd = command + " " + path.string();
    FILE* pipe = popen(cmd.c_str(), "r");
    if (pipe == nullptr) throw std::runtime_error("cannot run external solver: " + command);
    std::string output;
    char buf[4096];
    while (std::fgets(buf, sizeof buf, pipe) != nullptr) output += buf;
    pclose(pipe);
    std::filesystem::remove(path);
    std::istringstream is(output);
    Solution sol = parse_solver_output(is, wcnf.num_vars);
    if (sol.status == Status::Optimal) {
        auto cost = evaluate(wcnf, sol.assignment);
        if (!cost) throw std::runtime_error("external solver returned an assignment violating hard clauses");
        sol.cost = *cost;
    }
    return sol;
}

}  // namespace gplan::maxsat
