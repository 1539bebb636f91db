#include "gplan/learner.hpp"

#include "gplan/parallel.hpp"
#include "gplan/sat.hpp"

#include <algorithm>
#include <bit>
#include <map>
#include <numeric>
#include <set>

namespace gplan {

using Clock = std::chrono::steady_clock;

namespace {

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

bool expired(const std::optional<Clock::time_point>& deadline) {
    return deadline && Clock::now() > *deadline;
}

// All samples concatenated: global state id = offset[sample] + local id.
struct Flat {
    struct Trans {
        int src;
        int dst;
        TransitionLabel label;
    };
    std::vector<std::size_t> offset;
    std::vector<char> goal;
    std::vector<int> alive;        // global ids, ascending
    std::vector<int> alive_index;  // global id -> position in `alive`, or -1
    std::vector<Trans> trans;      // grouped by source, sources ascending
    std::vector<std::pair<std::size_t, std::size_t>> range;  // per alive position
};

Flat flatten(std::span<const TrainingSample> samples) {
    Flat fl;
    std::size_t total = 0;
    for (const auto& s : samples) {
        fl.offset.push_back(total);
        total += s.space.states.size();
    }
    fl.goal.assign(total, 0);
    fl.alive_index.assign(total, -1);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        const auto off = static_cast<int>(fl.offset[i]);
        for (std::size_t v = 0; v < s.space.states.size(); ++v) {
            fl.goal[off + v] = s.space.goal[v] ? 1 : 0;
            if (s.alive[v]) {
                fl.alive_index[off + v] = static_cast<int>(fl.alive.size());
                fl.alive.push_back(off + static_cast<int>(v));
            }
        }
        for (const auto& t : s.transitions) fl.trans.push_back({off + t.src, off + t.dst, t.label});
    }
    fl.range.assign(fl.alive.size(), {0, 0});
    for (std::size_t j = 0; j < fl.trans.size();) {
        std::size_t e = j;
        while (e < fl.trans.size() && fl.trans[e].src == fl.trans[j].src) ++e;
        fl.range[static_cast<std::size_t>(fl.alive_index[static_cast<std::size_t>(fl.trans[j].src)])] = {j, e};
        j = e;
    }
    return fl;
}

std::uint8_t code_of(const Pool& pool, int f, const Flat::Trans& t) {
    const auto& v = pool.values[static_cast<std::size_t>(f)];
    return transition_code(v[static_cast<std::size_t>(t.src)], v[static_cast<std::size_t>(t.dst)]);
}

Pattern pattern_of(const Pool& pool, std::span<const int> phi, const Flat::Trans& t) {
    Pattern p(phi.size());
    for (std::size_t i = 0; i < phi.size(); ++i) p[i] = code_of(pool, phi[i], t);
    return p;
}

// Nontrivial strongly connected components of the graph `adj` (Tarjan,
// iterative); components in discovery order.
std::vector<std::vector<int>> cyclic_components(const std::vector<std::vector<std::pair<int, int>>>& adj) {
    const int n = static_cast<int>(adj.size());
    std::vector<int> index(static_cast<std::size_t>(n), -1), low(static_cast<std::size_t>(n), 0);
    std::vector<char> on_stack(static_cast<std::size_t>(n), 0);
    std::vector<int> stack;
    std::vector<std::vector<int>> out;
    int counter = 0;
    std::vector<std::pair<int, std::size_t>> call;
    for (int root = 0; root < n; ++root) {
        if (index[static_cast<std::size_t>(root)] >= 0) continue;
        call.push_back({root, 0});
        while (!call.empty()) {
            auto& [v, it] = call.back();
            const auto vs = static_cast<std::size_t>(v);
            if (it == 0 && index[vs] < 0) {
                index[vs] = low[vs] = counter++;
                stack.push_back(v);
                on_stack[vs] = 1;
            }
            if (it < adj[vs].size()) {
                const int w = adj[vs][it++].first;
                const auto ws = static_cast<std::size_t>(w);
                if (index[ws] < 0) {
                    call.push_back({w, 0});
                } else if (on_stack[ws]) {
                    low[vs] = std::min(low[vs], index[ws]);
                }
                continue;
            }
            if (low[vs] == index[vs]) {
                std::vector<int> comp;
                int w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[static_cast<std::size_t>(w)] = 0;
                    comp.push_back(w);
                } while (w != v);
                bool self = false;
                for (const auto& e : adj[vs]) self |= e.first == v;
                if (comp.size() > 1 || self) out.push_back(std::move(comp));
            }
            const int done = v;
            call.pop_back();
            if (!call.empty()) {
                auto& parent = low[static_cast<std::size_t>(call.back().first)];
                parent = std::min(parent, low[static_cast<std::size_t>(done)]);
            }
        }
    }
    return out;
}

// A cycle inside component `comp` through its first node: nodes and the
// edge labels (pattern ids) along it.
std::pair<std::vector<int>, std::vector<int>> cycle_in(const std::vector<std::vector<std::pair<int, int>>>& adj,
                                                       const std::vector<int>& comp) {
    std::set<int> members(comp.begin(), comp.end());
    const int root = comp.front();
    std::map<int, std::pair<int, int>> parent;  // node -> (prev, label)
    std::vector<int> queue{root};
    for (std::size_t qi = 0; qi < queue.size(); ++qi) {
        const int v = queue[qi];
        for (const auto& [w, label] : adj[static_cast<std::size_t>(v)]) {
            if (!members.count(w)) continue;
            if (w == root) {
                std::vector<int> nodes{v}, labels{label};
                for (int u = v; u != root;) {
                    const auto [prev, l] = parent.at(u);
                    labels.push_back(l);
                    nodes.push_back(prev);
                    u = prev;
                }
                return {nodes, labels};
            }
            if (!parent.count(w)) {
                parent[w] = {v, label};
                queue.push_back(w);
            }
        }
    }
    throw std::logic_error("component without a cycle");
}

FeatureSetCheck check_flat(const Flat& fl, const Pool& pool, std::span<const int> phi) {
    FeatureSetCheck out;
    std::map<Pattern, int> ids;
    std::vector<Pattern> pats;
    std::vector<int> tp(fl.trans.size());
    for (std::size_t j = 0; j < fl.trans.size(); ++j) {
        auto p = pattern_of(pool, phi, fl.trans[j]);
        auto [it, fresh] = ids.emplace(p, static_cast<int>(pats.size()));
        if (fresh) pats.push_back(std::move(p));
        tp[j] = it->second;
    }
    const std::size_t np = pats.size(), na = fl.alive.size();
    std::vector<int> witness(np, -1);  // alive position of a non-candidate occurrence
    for (std::size_t j = 0; j < fl.trans.size(); ++j) {
        const auto& t = fl.trans[j];
        auto& w = witness[static_cast<std::size_t>(tp[j])];
        if (t.label != TransitionLabel::Candidate && w < 0) w = fl.alive_index[static_cast<std::size_t>(t.src)];
    }
    std::vector<std::vector<int>> cand(na);  // candidate patterns per alive state
    for (std::size_t a = 0; a < na; ++a) {
        for (std::size_t j = fl.range[a].first; j < fl.range[a].second; ++j) {
            if (fl.trans[j].label == TransitionLabel::Candidate) cand[a].push_back(tp[j]);
        }
        std::sort(cand[a].begin(), cand[a].end());
        cand[a].erase(std::unique(cand[a].begin(), cand[a].end()), cand[a].end());
    }

    sat::Solver solver;
    std::vector<sat::Var> x(np), sel(na);
    for (auto& v : x) v = solver.new_var();
    for (auto& v : sel) v = solver.new_var(true);
    for (std::size_t a = 0; a < na; ++a) {
        std::vector<sat::Lit> c{sat::neg(sel[a])};
        for (int p : cand[a]) c.push_back(sat::pos(x[static_cast<std::size_t>(p)]));
        solver.add_clause(c);
    }
    for (std::size_t p = 0; p < np; ++p) {
        if (witness[p] >= 0) solver.add_clause({sat::neg(sel[static_cast<std::size_t>(witness[p])]), sat::neg(x[p])});
    }
    // Selector variable -> alive states it stands for.
    std::map<sat::Var, std::vector<int>> guarded;
    for (std::size_t a = 0; a < na; ++a) guarded[sel[a]] = {static_cast<int>(a)};
    std::vector<sat::Lit> assumptions;
    for (auto v : sel) assumptions.push_back(sat::pos(v));

    while (true) {
        if (solver.solve(assumptions) == sat::Result::Unsat) break;
        std::vector<char> chosen(np, 0);
        for (std::size_t p = 0; p < np; ++p) chosen[p] = solver.value(x[p]) ? 1 : 0;
        std::vector<std::vector<std::pair<int, int>>> adj(na);
        for (std::size_t a = 0; a < na; ++a) {
            for (std::size_t j = fl.range[a].first; j < fl.range[a].second; ++j) {
                const auto& t = fl.trans[j];
                const int b = fl.alive_index[static_cast<std::size_t>(t.dst)];
                if (chosen[static_cast<std::size_t>(tp[j])] && b >= 0) adj[a].push_back({b, tp[j]});
            }
        }
        auto comps = cyclic_components(adj);
        if (comps.empty()) {
            // Inclusion-minimal pattern set: drop patterns while coverage holds.
            std::vector<int> count(na, 0);
            std::vector<std::vector<int>> covers(np);
            for (std::size_t a = 0; a < na; ++a) {
                for (int p : cand[a]) {
                    if (chosen[static_cast<std::size_t>(p)]) {
                        ++count[a];
                        covers[static_cast<std::size_t>(p)].push_back(static_cast<int>(a));
                    }
                }
            }
            std::vector<int> order;
            for (std::size_t p = 0; p < np; ++p) {
                if (chosen[p]) order.push_back(static_cast<int>(p));
            }
            std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
                return covers[static_cast<std::size_t>(a)].size() < covers[static_cast<std::size_t>(b)].size();
            });
            for (int p : order) {
                const auto& cv = covers[static_cast<std::size_t>(p)];
                if (std::all_of(cv.begin(), cv.end(), [&](int a) { return count[static_cast<std::size_t>(a)] > 1; })) {
                    chosen[static_cast<std::size_t>(p)] = 0;
                    for (int a : cv) --count[static_cast<std::size_t>(a)];
                }
            }
            out.feasible = true;
            for (std::size_t p = 0; p < np; ++p) {
                if (chosen[p]) out.patterns.push_back(pats[p]);
            }
            std::sort(out.patterns.begin(), out.patterns.end());
            return out;
        }
        for (const auto& comp : comps) {
            auto [nodes, labels] = cycle_in(adj, comp);
            std::sort(labels.begin(), labels.end());
            labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
            const sat::Var c = solver.new_var(true);
            std::vector<sat::Lit> clause{sat::neg(c)};
            for (int p : labels) clause.push_back(sat::neg(x[static_cast<std::size_t>(p)]));
            solver.add_clause(clause);
            guarded[c] = nodes;
            assumptions.push_back(sat::pos(c));
        }
    }

    // Shrink the core by deletion.
    auto core_of = [&](const std::vector<sat::Lit>& assumed) {
        std::set<sat::Var> failed;
        for (auto l : solver.failed_assumptions()) failed.insert(l.var());
        std::vector<sat::Lit> core;
        for (auto l : assumed) {
            if (failed.count(l.var())) core.push_back(l);
        }
        return core;
    };
    auto core = core_of(assumptions);
    for (std::size_t i = 0; i < core.size();) {
        std::vector<sat::Lit> trial;
        for (std::size_t j = 0; j < core.size(); ++j) {
            if (j != i) trial.push_back(core[j]);
        }
        sat::Limits lim;
        lim.conflicts = 10'000;
        if (solver.solve(trial, lim) == sat::Result::Unsat) {
            core = core_of(trial);
        } else {
            ++i;
        }
    }
    std::set<int> states;
    for (auto l : core) {
        for (int a : guarded.at(l.var())) states.insert(a);
    }

    // Features that split a pattern class within the transitions of the core.
    std::vector<char> in_phi(pool.features.size(), 0);
    for (int f : phi) in_phi[static_cast<std::size_t>(f)] = 1;
    std::map<int, std::vector<std::size_t>> groups;
    for (int a : states) {
        for (std::size_t j = fl.range[static_cast<std::size_t>(a)].first; j < fl.range[static_cast<std::size_t>(a)].second; ++j)
            groups[tp[j]].push_back(j);
    }
    for (std::size_t f = 0; f < pool.features.size(); ++f) {
        if (in_phi[f]) continue;
        bool splits = false;
        for (const auto& [p, js] : groups) {
            const auto c0 = code_of(pool, static_cast<int>(f), fl.trans[js.front()]);
            for (std::size_t j : js) {
                if (code_of(pool, static_cast<int>(f), fl.trans[j]) != c0) {
                    splits = true;
                    break;
                }
            }
            if (splits) break;
        }
        if (splits) out.cut.push_back(static_cast<int>(f));
    }
    return out;
}

// Minimal goal-separation clauses as feature-index sets. Returns nullopt
// with a message when some goal and non-goal state agree on the pool.
struct Separation {
    std::vector<std::vector<int>> clauses;
    std::optional<std::string> infeasible;
};

Separation goal_separation(std::span<const TrainingSample> samples, const Pool& pool) {
    Separation out;
    const std::size_t nf = pool.features.size();
    std::size_t total = 0;
    for (const auto& s : samples) total += s.space.states.size();
    std::map<std::vector<int>, std::size_t> goal_cols, other_cols;
    std::vector<char> goal(total, 0);
    std::size_t g = 0;
    for (const auto& s : samples) {
        for (std::size_t v = 0; v < s.space.states.size(); ++v) goal[g++] = s.space.goal[v] ? 1 : 0;
    }
    for (std::size_t v = 0; v < total; ++v) {
        std::vector<int> col(nf);
        for (std::size_t f = 0; f < nf; ++f) col[f] = pool.values[f][v];
        (goal[v] ? goal_cols : other_cols).emplace(std::move(col), v);
    }
    const std::size_t words = (nf + 63) / 64;
    std::vector<std::vector<std::uint64_t>> diffs;
    for (const auto& [gc, gv] : goal_cols) {
        for (const auto& [oc, ov] : other_cols) {
            std::vector<std::uint64_t> d(words, 0);
            bool any = false;
            for (std::size_t f = 0; f < nf; ++f) {
                if (gc[f] != oc[f]) {
                    d[f / 64] |= std::uint64_t{1} << (f % 64);
                    any = true;
                }
            }
            if (!any) {
                out.infeasible = "goal and non-goal states with identical values on every pool feature (global states " +
                                 std::to_string(gv) + " and " + std::to_string(ov) + ")";
                return out;
            }
            diffs.push_back(std::move(d));
        }
    }
    auto popcount = [](const std::vector<std::uint64_t>& d) {
        int c = 0;
        for (auto w : d) c += std::popcount(w);
        return c;
    };
    std::stable_sort(diffs.begin(), diffs.end(), [&](const auto& a, const auto& b) { return popcount(a) < popcount(b); });
    std::vector<std::vector<std::uint64_t>> kept;
    for (auto& d : diffs) {
        bool subsumed = std::any_of(kept.begin(), kept.end(), [&](const auto& k) {
            for (std::size_t w = 0; w < words; ++w) {
                if ((k[w] & ~d[w]) != 0) return false;
            }
            return true;
        });
        if (!subsumed) kept.push_back(std::move(d));
    }
    for (const auto& k : kept) {
        std::vector<int> c;
        for (std::size_t f = 0; f < nf; ++f) {
            if ((k[f / 64] >> (f % 64)) & 1u) c.push_back(static_cast<int>(f));
        }
        out.clauses.push_back(std::move(c));
    }
    return out;
}

MasterEncoding build_master(const Pool& pool, const Separation& sep, std::span<const std::vector<int>> cuts) {
    MasterEncoding enc;
    for (const auto& f : pool.features) {
        enc.wcnf.new_var();
        enc.catalog.push_back("select(" + f.text + ")");
    }
    enc.infeasible = sep.infeasible;
    auto add = [&](const std::vector<int>& fs) {
        std::vector<int> c;
        for (int f : fs) c.push_back(f + 1);
        enc.wcnf.add_hard(std::move(c));
    };
    for (const auto& c : sep.clauses) add(c);
    for (const auto& c : cuts) add(c);
    for (std::size_t f = 0; f < pool.features.size(); ++f)
        enc.wcnf.add_soft(static_cast<std::uint64_t>(pool.features[f].cost), {-static_cast<int>(f + 1)});
    return enc;
}

}  // namespace

std::size_t TrainingSample::num_alive() const {
    return static_cast<std::size_t>(std::count(alive.begin(), alive.end(), 1));
}

TrainingSample label_transitions(std::shared_ptr<const Instance> instance, GoodCriterion criterion,
                                 const ExpandLimits& limits) {
    if (!instance) throw std::invalid_argument("label_transitions: null instance");
    TrainingSample s;
    s.instance = instance;
    s.space = expand(*instance, limits);
    s.distance = distances(s.space.graph);
    if (!is_reachable(s.distance[0]))
        throw LearnError("training instance '" + instance->name() + "' is unsolvable: no goal is reachable from its initial state");
    const std::size_t n = s.space.states.size();
    s.alive.assign(n, 0);
    for (std::size_t v = 0; v < n; ++v) s.alive[v] = is_reachable(s.distance[v]) && !s.space.goal[v];
    std::set<std::pair<int, int>> pairs;
    for (const auto& e : s.space.graph.edges) {
        if (s.alive[static_cast<std::size_t>(e.src)]) pairs.insert({e.src, e.dst});
    }
    for (const auto& [a, b] : pairs) {
        const auto& da = s.distance[static_cast<std::size_t>(a)];
        const auto& db = s.distance[static_cast<std::size_t>(b)];
        TransitionLabel label;
        if (a == b) {
            label = TransitionLabel::SelfLoop;
        } else if (!is_reachable(db)) {
            label = TransitionLabel::Bad;
        } else if (criterion == GoodCriterion::Solvable) {
            label = TransitionLabel::Candidate;
        } else {
            label = std::get<int>(db) < std::get<int>(da) ? TransitionLabel::Candidate : TransitionLabel::Bad;
        }
        s.transitions.push_back({a, b, label});
    }
    return s;
}

std::uint8_t transition_code(int before, int after) {
    const int sign = after > before ? 2 : (after < before ? 0 : 1);
    return static_cast<std::uint8_t>((before > 0 ? 3 : 0) + sign);
}

Pool make_training_pool(const Domain& domain, std::span<const TrainingSample> samples, const LearnConfig& config) {
    std::vector<Sample> pts;
    for (const auto& s : samples) {
        for (const auto& st : s.space.states) pts.push_back({s.instance.get(), &st});
    }
    PoolConfig pc;
    pc.max_complexity = config.max_complexity;
    pc.threads = config.threads;
    return generate_pool(domain, pts, pc);
}

MasterEncoding encode(std::span<const TrainingSample> samples, const Pool& pool, const LearnConfig& config,
                      std::span<const std::vector<int>> cuts) {
    Separation sep;
    if (config.goal_separation) sep = goal_separation(samples, pool);
    return build_master(pool, sep, cuts);
}

std::string to_string(LearnStatus s) {
    switch (s) {
        case LearnStatus::Solved: return "Solved";
        case LearnStatus::Infeasible: return "Infeasible";
        case LearnStatus::Timeout: return "Timeout";
    }
    return "?";
}

FeatureSetCheck check_feature_set(std::span<const TrainingSample> samples, const Pool& pool,
                                  std::span<const int> features) {
    return check_flat(flatten(samples), pool, features);
}

SelectionResult select_features(std::span<const TrainingSample> samples, const Pool& pool, const LearnConfig& config) {
    SelectionResult out;
    const Flat fl = flatten(samples);
    Separation sep;
    if (config.goal_separation) sep = goal_separation(samples, pool);
    if (sep.infeasible) {
        out.status = LearnStatus::Infeasible;
        out.diagnosis = "pool cannot separate goal states: " + *sep.infeasible;
        return out;
    }
    maxsat::Incremental master(build_master(pool, sep, {}).wcnf);
    while (out.iterations < config.max_iterations) {
        if (expired(config.deadline)) {
            out.status = LearnStatus::Timeout;
            out.diagnosis = "deadline reached after " + std::to_string(out.iterations) + " iterations";
            return out;
        }
        ++out.iterations;
        maxsat::Solution sol;
        if (config.external_solver.empty()) {
            sol = master.solve({config.deadline});
        } else {
            sol = maxsat::solve_external(build_master(pool, sep, out.cuts).wcnf, config.external_solver);
        }
        if (sol.status == maxsat::Status::Unknown) {
            out.status = LearnStatus::Timeout;
            out.diagnosis = "Max-SAT solver gave no answer";
            return out;
        }
        if (sol.status == maxsat::Status::Infeasible) {
            out.status = LearnStatus::Infeasible;
            out.diagnosis = "no feature set of the pool admits a policy solving the training instances";
            return out;
        }
        std::vector<int> phi;
        for (std::size_t f = 0; f < pool.features.size(); ++f) {
            if (sol.value(static_cast<int>(f + 1))) phi.push_back(static_cast<int>(f));
        }
        auto chk = check_flat(fl, pool, phi);
        if (chk.feasible) {
            out.status = LearnStatus::Solved;
            out.features = std::move(phi);
            out.patterns = std::move(chk.patterns);
            out.cost = sol.cost;
            return out;
        }
        if (chk.cut.empty()) {
            out.status = LearnStatus::Infeasible;
            out.diagnosis = "no refinement within the pool resolves a conflict among the training transitions";
            return out;
        }
        std::vector<int> clause;
        for (int f : chk.cut) clause.push_back(f + 1);
        master.add_hard(clause);
        out.cuts.push_back(std::move(chk.cut));
    }
    out.status = LearnStatus::Timeout;
    out.diagnosis = "iteration limit reached";
    return out;
}

namespace {

// Per-feature rule forms. A form is a condition (-1 none, 0 zero/false,
// 1 positive/true) and an effect (0 unchanged, 1 dec/false, 2 inc/true,
// 3 any), denoting a set of transition codes.
bool code_feasible(bool boolean, int code) {
    const int v = code / 3, d = code % 3 - 1;
    if (v == 0 && d < 0) return false;
    if (boolean && v == 1 && d > 0) return false;
    return true;
}

bool effect_allows(bool boolean, int eff, int v, int d) {
    switch (eff) {
        case 0: return d == 0;
        case 3: return true;
        case 1: return boolean ? (v == 1 ? d < 0 : d == 0) : d < 0;
        case 2: return boolean ? (v == 0 ? d > 0 : d == 0) : d > 0;
    }
    return false;
}

struct Form {
    int cond;
    int eff;
};

std::uint8_t form_mask(bool boolean, Form f) {
    std::uint8_t m = 0;
    for (int c = 0; c < 6; ++c) {
        const int v = c / 3, d = c % 3 - 1;
        if (!code_feasible(boolean, c)) continue;
        if (f.cond >= 0 && v != f.cond) continue;
        if (effect_allows(boolean, f.eff, v, d)) m = static_cast<std::uint8_t>(m | (1u << c));
    }
    return m;
}

// Representable masks, each with its first form in (cond, eff) order.
const std::map<std::uint8_t, Form>& forms(bool boolean) {
    static const auto build = [](bool b) {
        std::map<std::uint8_t, Form> m;
        for (int cond : {-1, 0, 1}) {
            for (int eff = 0; eff < 4; ++eff) {
                const auto mask = form_mask(b, {cond, eff});
                if (mask != 0) m.emplace(mask, Form{cond, eff});
            }
        }
        return m;
    };
    static const auto b = build(true), n = build(false);
    return boolean ? b : n;
}

// Mask of the zero-change codes.
constexpr std::uint8_t kUnchanged = (1u << 1) | (1u << 4);

PolicyRule to_rule(const std::vector<std::uint8_t>& masks, const std::vector<bool>& boolean) {
    PolicyRule r;
    for (std::size_t i = 0; i < masks.size(); ++i) {
        const Form f = forms(boolean[i]).at(masks[i]);
        const int fi = static_cast<int>(i);
        if (f.cond >= 0) {
            CondKind k = boolean[i] ? (f.cond ? CondKind::IsTrue : CondKind::IsFalse)
                                    : (f.cond ? CondKind::GtZero : CondKind::EqZero);
            r.conds.push_back({fi, k});
        }
        if (f.eff == 0) continue;
        EffKind k;
        if (boolean[i]) {
            k = f.eff == 1 ? EffKind::SetFalse : f.eff == 2 ? EffKind::SetTrue : EffKind::AnyBool;
        } else {
            k = f.eff == 1 ? EffKind::Dec : f.eff == 2 ? EffKind::Inc : EffKind::AnyNum;
        }
        r.effs.push_back({fi, k});
    }
    return r;
}

std::vector<std::vector<std::uint8_t>> merge_rules(std::vector<std::vector<std::uint8_t>> rules,
                                                   const std::vector<bool>& boolean) {
    std::sort(rules.begin(), rules.end());
    rules.erase(std::unique(rules.begin(), rules.end()), rules.end());
    auto subset = [](const auto& a, const auto& b) {
        for (std::size_t k = 0; k < a.size(); ++k) {
            if ((a[k] & ~b[k]) != 0) return false;
        }
        return true;
    };
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t i = 0; i < rules.size() && !changed; ++i) {
            for (std::size_t j = 0; j < rules.size() && !changed; ++j) {
                if (i == j) continue;
                if (subset(rules[j], rules[i])) {
                    rules.erase(rules.begin() + static_cast<std::ptrdiff_t>(j));
                    changed = true;
                    break;
                }
                if (j < i) continue;
                int diff = -1, ndiff = 0;
                for (std::size_t k = 0; k < rules[i].size(); ++k) {
                    if (rules[i][k] != rules[j][k]) {
                        diff = static_cast<int>(k);
                        ++ndiff;
                    }
                }
                if (ndiff != 1) continue;
                const auto k = static_cast<std::size_t>(diff);
                const auto u = static_cast<std::uint8_t>(rules[i][k] | rules[j][k]);
                if (!forms(boolean[k]).count(u)) continue;
                rules[i][k] = u;
                rules.erase(rules.begin() + static_cast<std::ptrdiff_t>(j));
                changed = true;
            }
        }
    }
    std::sort(rules.begin(), rules.end());
    return rules;
}

}  // namespace

Policy decode(const Pool& pool, std::span<const int> features, std::span<const Pattern> patterns) {
    Policy pi;
    std::vector<bool> boolean;
    for (int f : features) {
        pi.features.push_back(pool.features.at(static_cast<std::size_t>(f)));
        boolean.push_back(pi.features.back().kind == FeatureKind::Boolean);
    }
    std::vector<std::vector<std::uint8_t>> rules;
    for (const auto& p : patterns) {
        if (p.size() != features.size()) throw std::invalid_argument("decode: pattern width differs from the feature count");
        std::vector<std::uint8_t> masks(p.size());
        for (std::size_t i = 0; i < p.size(); ++i) masks[i] = static_cast<std::uint8_t>(1u << p[i]);
        rules.push_back(std::move(masks));
    }
    for (const auto& r : merge_rules(std::move(rules), boolean)) pi.rules.push_back(to_rule(r, boolean));
    pi.validate();
    return pi;
}

LearnResult learn_policy(const Domain& domain, std::span<const std::shared_ptr<const Instance>> train,
                         std::span<const std::shared_ptr<const Instance>> validate, const LearnConfig& config) {
    LearnResult res;
    auto& rep = res.report;
    std::vector<TrainingSample> samples;
    for (const auto& inst : train) samples.push_back(label_transitions(inst, config.criterion, config.expand));
    for (const auto& s : samples) rep.training_states += s.space.states.size();

    auto t0 = Clock::now();
    const Pool pool = make_training_pool(domain, samples, config);
    rep.pool_ms = ms_since(t0);
    rep.pool_size = pool.features.size();

    t0 = Clock::now();
    auto sel = select_features(samples, pool, config);
    rep.solve_ms = ms_since(t0);
    rep.status = sel.status;
    rep.iterations = sel.iterations;
    rep.cuts = sel.cuts.size();
    rep.diagnosis = sel.diagnosis;
    if (sel.status != LearnStatus::Solved) return res;
    rep.cost = sel.cost;

    Policy pi = decode(pool, sel.features, sel.patterns);
    const Flat fl = flatten(samples);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        std::vector<FeatureValuation> vals(samples[i].space.states.size());
        for (std::size_t v = 0; v < vals.size(); ++v) {
            for (int f : sel.features) vals[v].push_back(pool.values[static_cast<std::size_t>(f)][fl.offset[i] + v]);
        }
        auto verdict = verify_on_space(samples[i].space, vals, pi.rules);
        if (verdict.outcome != Outcome::Solves)
            throw std::logic_error("decoded policy does not solve training instance '" + samples[i].instance->name() + "'");
    }

    t0 = Clock::now();
    for (const auto& inst : validate) {
        ValidationEntry e;
        e.name = inst->name();
        try {
            auto v = verify(pi, *inst, config.expand, config.threads);
            e.outcome = v.outcome;
            e.states = v.states;
            e.detail = v.detail;
        } catch (const ExpansionLimitExceeded& ex) {
            e.outcome = Outcome::Unknown;
            e.detail = ex.what();
        }
        rep.validation.push_back(std::move(e));
    }
    rep.validate_ms = ms_since(t0);
    res.policy = std::move(pi);
    return res;
}

nlohmann::json report_to_json(const LearnReport& r) {
    nlohmann::json j;
    j["status"] = to_string(r.status);
    j["pool_size"] = r.pool_size;
    j["training_states"] = r.training_states;
    j["iterations"] = r.iterations;
    j["cuts"] = r.cuts;
    j["cost"] = r.cost;
    j["diagnosis"] = r.diagnosis;
    j["timings_ms"] = {{"pool", r.pool_ms}, {"solve", r.solve_ms}, {"validate", r.validate_ms}};
    auto& v = j["validation"] = nlohmann::json::array();
    for (const auto& e : r.validation)
        v.push_back({{"instance", e.name}, {"outcome", to_string(e.outcome)}, {"states", e.states}, {"detail", e.detail}});
    return j;
}

// ---------------------------------------------------------------------------
// Sketch learning

namespace {

// siw_r replayed on an expanded space; successors follow the ground-action
// order of the space's edges, so the run equals siw_r on the instance.
struct SpaceSiw {
    const TrainingSample* sample;
    std::vector<std::vector<int>> succ;

    explicit SpaceSiw(const TrainingSample& s) : sample(&s), succ(s.space.states.size()) {
        for (const auto& e : s.space.graph.edges) succ[static_cast<std::size_t>(e.src)].push_back(e.dst);
    }

    // Values are per state over the sketch features.
    bool run(std::span<const FeatureValuation> vals, std::span<const PolicyRule> rules, int k_max,
             std::size_t budget) const {
        const auto& sp = sample->space;
        const Instance& inst = *sample->instance;
        std::size_t generated = 0;
        std::set<int> starts;
        int cur = 0;
        while (!sp.goal[static_cast<std::size_t>(cur)]) {
            if (!starts.insert(cur).second) return false;
            const auto& f0 = vals[static_cast<std::size_t>(cur)];
            auto stop = [&](int t) {
                if (sp.goal[static_cast<std::size_t>(t)]) return true;
                if (t == cur) return false;
                return satisfies_some(f0, vals[static_cast<std::size_t>(t)], rules);
            };
            int hit = -1;
            for (int k = 1; k <= k_max && hit < 0; ++k) {
                NoveltyTable table(k, inst);
                table.insert(sp.states[static_cast<std::size_t>(cur)]);
                std::set<int> seen{cur};
                std::vector<int> open{cur};
                for (std::size_t qi = 0; qi < open.size() && hit < 0; ++qi) {
                    for (int t : succ[static_cast<std::size_t>(open[qi])]) {
                        if (!seen.insert(t).second) continue;
                        if (++generated > budget) return false;
                        if (stop(t)) {
                            hit = t;
                            break;
                        }
                        if (table.insert(sp.states[static_cast<std::size_t>(t)])) open.push_back(t);
                    }
                }
            }
            if (hit < 0) return false;
            cur = hit;
        }
        return true;
    }
};

}  // namespace

SketchResult learn_sketch(const Domain& domain, std::span<const std::shared_ptr<const Instance>> train,
                          const SketchConfig& config) {
    if (config.k < 1) throw std::invalid_argument("learn_sketch needs k >= 1");
    SketchResult out;
    std::vector<TrainingSample> samples;
    for (const auto& inst : train) samples.push_back(label_transitions(inst, GoodCriterion::Solvable));
    // Smallest spaces are screened first: cheap rejections.
    std::vector<std::size_t> by_size(samples.size());
    std::iota(by_size.begin(), by_size.end(), std::size_t{0});
    std::stable_sort(by_size.begin(), by_size.end(), [&](std::size_t a, std::size_t b) {
        return samples[a].space.states.size() < samples[b].space.states.size();
    });
    LearnConfig lc;
    lc.max_complexity = config.max_complexity;
    lc.threads = config.threads;
    const Pool pool = make_training_pool(domain, samples, lc);
    const Flat fl = flatten(samples);
    std::vector<SpaceSiw> runners;
    for (const auto& s : samples) runners.emplace_back(s);

    // Feature subsets up to max_features, ascending by (cost, indices).
    const int nf = static_cast<int>(pool.features.size());
    std::vector<std::vector<int>> subsets{{}};
    for (int size = 1; size <= config.max_features; ++size) {
        std::vector<int> idx(static_cast<std::size_t>(size));
        std::function<void(int, int)> rec = [&](int pos, int from) {
            if (pos == size) {
                subsets.push_back(idx);
                return;
            }
            for (int f = from; f < nf; ++f) {
                idx[static_cast<std::size_t>(pos)] = f;
                rec(pos + 1, f + 1);
            }
        };
        rec(0, 0);
    }
    auto subset_cost = [&](const std::vector<int>& s) {
        int c = 0;
        for (int f : s) c += pool.features[static_cast<std::size_t>(f)].cost;
        return c;
    };
    std::stable_sort(subsets.begin(), subsets.end(),
                     [&](const auto& a, const auto& b) { return subset_cost(a) < subset_cost(b); });

    auto passes = [&](const std::vector<int>& phi, const std::vector<PolicyRule>& rules) {
        for (std::size_t i : by_size) {
            std::vector<FeatureValuation> vals(samples[i].space.states.size());
            for (std::size_t v = 0; v < vals.size(); ++v) {
                for (int f : phi) vals[v].push_back(pool.values[static_cast<std::size_t>(f)][fl.offset[i] + v]);
            }
            if (!runners[i].run(vals, rules, config.k, config.node_budget)) return false;
        }
        return true;
    };

    // Group subsets by cost; within a cost tier try fewer rules first.
    for (std::size_t lo = 0; lo < subsets.size();) {
        std::size_t hi = lo;
        while (hi < subsets.size() && subset_cost(subsets[hi]) == subset_cost(subsets[lo])) ++hi;
        for (int nr = 0; nr <= config.max_rules; ++nr) {
            for (std::size_t si = lo; si < hi; ++si) {
                const auto& phi = subsets[si];
                if (nr == 0 && !phi.empty()) continue;
                std::vector<bool> boolean;
                for (int f : phi) boolean.push_back(pool.features[static_cast<std::size_t>(f)].kind == FeatureKind::Boolean);
                // Single rules as mask tuples with at least one change allowed.
                std::vector<std::vector<std::uint8_t>> singles{{}};
                for (std::size_t i = 0; i < phi.size(); ++i) {
                    std::vector<std::vector<std::uint8_t>> next;
                    for (const auto& partial : singles) {
                        for (const auto& [mask, form] : forms(boolean[i])) {
                            auto r = partial;
                            r.push_back(mask);
                            next.push_back(std::move(r));
                        }
                    }
                    singles = std::move(next);
                }
                std::erase_if(singles, [](const auto& r) {
                    return std::all_of(r.begin(), r.end(), [](std::uint8_t m) { return (m & ~kUnchanged) == 0; });
                });
                if (nr > 0 && singles.empty()) continue;
                // Rule sets of size nr: index combinations, skipping sets with
                // one rule contained in another.
                std::vector<std::vector<int>> combos;
                std::vector<int> idx(static_cast<std::size_t>(nr));
                const int ns = static_cast<int>(singles.size());
                std::function<void(int, int)> rec = [&](int pos, int from) {
                    if (pos == nr) {
                        combos.push_back(idx);
                        return;
                    }
                    for (int r = from; r < ns; ++r) {
                        bool nested = false;
                        for (int q = 0; q < pos && !nested; ++q) {
                            const auto& a = singles[static_cast<std::size_t>(idx[static_cast<std::size_t>(q)])];
                            const auto& b = singles[static_cast<std::size_t>(r)];
                            bool ab = true, ba = true;
                            for (std::size_t k = 0; k < a.size(); ++k) {
                                ab &= (a[k] & ~b[k]) == 0;
                                ba &= (b[k] & ~a[k]) == 0;
                            }
                            nested = ab || ba;
                        }
                        if (nested) continue;
                        idx[static_cast<std::size_t>(pos)] = r;
                        rec(pos + 1, r + 1);
                    }
                };
                rec(0, 0);
                std::vector<char> ok(combos.size(), 0);
                parallel_for(combos.size(), config.threads, [&](std::size_t c) {
                    if (expired(config.deadline)) return;
                    std::vector<PolicyRule> rules;
                    for (int r : combos[c]) rules.push_back(to_rule(singles[static_cast<std::size_t>(r)], boolean));
                    ok[c] = passes(phi, rules) ? 1 : 0;
                });
                out.candidates_tested += combos.size();
                if (expired(config.deadline)) {
                    out.failure = "deadline reached after " + std::to_string(out.candidates_tested) + " candidates";
                    return out;
                }
                for (std::size_t c = 0; c < combos.size(); ++c) {
                    if (!ok[c]) continue;
                    Policy sk;
                    for (int f : phi) sk.features.push_back(pool.features[static_cast<std::size_t>(f)]);
                    for (int r : combos[c]) sk.rules.push_back(to_rule(singles[static_cast<std::size_t>(r)], boolean));
                    // Confirm with the instance-level search.
                    bool all = true;
                    std::vector<std::vector<Segment>> segs;
                    for (const auto& s : samples) {
                        auto run = siw_r(*s.instance, sk, {config.k, 1'000'000, config.node_budget});
                        if (!run.solved) {
                            all = false;
                            break;
                        }
                        segs.push_back(run.segments);
                    }
                    if (!all) continue;
                    out.sketch = std::move(sk);
                    out.segments = std::move(segs);
                    return out;
                }
            }
        }
        lo = hi;
    }
    out.failure = "no sketch with at most " + std::to_string(config.max_rules) + " rules over at most " +
                  std::to_string(config.max_features) + " features of cost <= " + std::to_string(config.max_complexity) +
                  " lets SIW_R solve every training instance with k = " + std::to_string(config.k);
    return out;
}

}  // namespace gplan
