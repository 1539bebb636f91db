#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gplan/bench.hpp"
#include "gplan/model_learner.hpp"
#include "gplan/pddl.hpp"

#include <algorithm>
#include <functional>
#include <set>

using namespace gplan;

namespace {

Graph labeled(int nodes, std::vector<std::tuple<int, int, std::string>> edges) {
    Graph g;
    g.num_nodes = nodes;
    g.init = 0;
    for (auto& [s, d, l] : edges) g.edges.push_back({s, d, l});
    return g;
}

Graph typed_space(const Instance& inst) { return action_type_labels(expand(inst).graph); }

Graph drop_edge(Graph g, std::size_t i) {
    g.edges.erase(g.edges.begin() + static_cast<std::ptrdiff_t>(i));
    return g;
}

// ---------------------------------------------------------------------------
// Exhaustive oracle over the same hypothesis class: every structure of a
// given cost, every flag assignment of its schemas, every strict weak order
// for "st" and every initial state; a hypothesis counts when the expanded
// graph is label-isomorphic to the input.

struct OracleBounds {
    int max_predicates = 1;
    int max_pred_arity = 1;
    int max_schema_arity = 1;
    int objects = 0;
    int max_cost = 6;
};

std::vector<std::vector<int>> all_tuples(int n, int k) {
    std::vector<std::vector<int>> out;
    std::vector<int> t(static_cast<std::size_t>(k), 0);
    if (k > 0 && n == 0) return out;
    std::function<void(int)> rec = [&](int i) {
        if (i == k) {
            out.push_back(t);
            return;
        }
        for (int v = 0; v < n; ++v) {
            t[static_cast<std::size_t>(i)] = v;
            rec(i + 1);
        }
    };
    rec(0);
    return out;
}

// Distinct strict weak orders on n objects as sets of pairs (a ranked above b).
std::vector<std::vector<std::pair<int, int>>> weak_orders(int n) {
    std::set<std::vector<std::pair<int, int>>> seen;
    for (const auto& rank : all_tuples(n, n)) {
        std::vector<std::pair<int, int>> rel;
        for (int a = 0; a < n; ++a) {
            for (int b = 0; b < n; ++b) {
                if (rank[static_cast<std::size_t>(a)] > rank[static_cast<std::size_t>(b)]) rel.emplace_back(a, b);
            }
        }
        seen.insert(rel);
    }
    return {seen.begin(), seen.end()};
}

struct ToyStructure {
    std::vector<int> preds;
    std::vector<int> arities;  // per label
};

std::vector<ToyStructure> structures_of_cost(int cost, std::size_t labels, const OracleBounds& b) {
    std::vector<ToyStructure> out;
    std::vector<std::vector<int>> pred_sets{{}};
    for (int len = 1; len <= b.max_predicates; ++len) {
        for (auto t : all_tuples(b.max_pred_arity + 1, len)) {
            if (std::is_sorted(t.begin(), t.end())) pred_sets.push_back(t);
        }
    }
    for (const auto& p : pred_sets) {
        for (const auto& a : all_tuples(b.max_schema_arity + 1, static_cast<int>(labels))) {
            int c = 0;
            for (int x : p) c += 1 + x;
            for (int x : a) c += 1 + x;
            if (c == cost) out.push_back({p, a});
        }
    }
    return out;
}

// Flags of one schema: per template one of none, pre, add, del, pre+del;
// static templates and inequality pairs on or off.
struct SchemaChoice {
    std::vector<int> fluent;  // 0 none, 1 pre, 2 add, 3 del, 4 pre+del
    std::vector<int> stat;
    std::vector<int> neq;
};

bool reproduces(const Graph& g, const std::vector<std::string>& labels, const ToyStructure& st,
                const std::vector<std::vector<std::pair<int, std::vector<int>>>>& templates,
                const std::vector<std::vector<std::pair<int, int>>>& pairs, const std::vector<SchemaChoice>& choice,
                int objects) {
    bool uses_static = false;
    for (const auto& c : choice) {
        for (int f : c.stat) uses_static = uses_static || f != 0;
    }
    std::vector<Predicate> preds;
    for (std::size_t p = 0; p < st.preds.size(); ++p) preds.push_back({"q" + std::to_string(p), st.preds[p], PredicateKind::Fluent});
    int st_index = static_cast<int>(preds.size());
    if (uses_static) preds.push_back({"st", 2, PredicateKind::Static});
    int eq = static_cast<int>(preds.size());
    preds.push_back({kEquality, 2, PredicateKind::Static});

    std::vector<ActionSchema> schemas;
    std::vector<bool> pred_in_effect(st.preds.size(), false);
    for (std::size_t l = 0; l < labels.size(); ++l) {
        ActionSchema s;
        s.name = labels[l];
        for (int i = 0; i < st.arities[l]; ++i) s.params.push_back("v" + std::to_string(i));
        const auto& c = choice[l];
        for (std::size_t k = 0; k < templates[l].size(); ++k) {
            Atom a{templates[l][k].first, templates[l][k].second};
            int f = c.fluent[k];
            if (f == 1 || f == 4) s.pre.push_back({a, true});
            if (f == 2) s.eff.push_back({a, true});
            if (f == 3 || f == 4) s.eff.push_back({a, false});
            if (f >= 2) pred_in_effect[static_cast<std::size_t>(a.predicate)] = true;
        }
        auto st_templates = all_tuples(st.arities[l], 2);
        for (std::size_t k = 0; k < st_templates.size(); ++k) {
            if (c.stat[k]) s.static_pre.push_back({Atom{st_index, st_templates[k]}, true});
        }
        for (std::size_t k = 0; k < pairs[l].size(); ++k) {
            if (c.neq[k]) s.static_pre.push_back({Atom{eq, {pairs[l][k].first, pairs[l][k].second}}, false});
        }
        if (s.eff.empty()) return false;
        schemas.push_back(std::move(s));
    }
    if (std::find(pred_in_effect.begin(), pred_in_effect.end(), false) != pred_in_effect.end()) return false;
    auto domain = std::make_shared<const Domain>("oracle", preds, schemas);

    std::vector<std::string> names;
    for (int o = 0; o < objects; ++o) names.push_back("o" + std::to_string(o));
    std::vector<Atom> fluent_atoms;
    for (std::size_t p = 0; p < st.preds.size(); ++p) {
        for (auto& t : all_tuples(objects, st.preds[p])) fluent_atoms.push_back({static_cast<int>(p), t});
    }
    if (fluent_atoms.size() > 12) return false;
    auto orders = uses_static ? weak_orders(objects) : std::vector<std::vector<std::pair<int, int>>>{{}};
    for (const auto& order : orders) {
        for (std::uint32_t mask = 0; mask < (1U << fluent_atoms.size()); ++mask) {
            std::vector<Atom> init;
            for (std::size_t i = 0; i < fluent_atoms.size(); ++i) {
                if (mask & (1U << i)) init.push_back(fluent_atoms[i]);
            }
            for (auto [a, b] : order) init.push_back({st_index, {a, b}});
            Instance inst(domain, "oracle", names, init, {});
            ExpandLimits lim;
            lim.max_states = static_cast<std::size_t>(g.num_nodes) + 1;
            StateSpace sp;
            try {
                sp = expand(inst, lim);
            } catch (const ExpansionLimitExceeded&) {
                continue;
            }
            if (sp.graph.num_nodes != g.num_nodes || sp.graph.edges.size() != g.edges.size()) continue;
            if (isomorphic(action_type_labels(sp.graph), g, true)) return true;
        }
    }
    return false;
}

// Least cost within the bounds, or nullopt.
std::optional<int> oracle_min_cost(const Graph& g, const OracleBounds& b) {
    std::set<std::string> label_set;
    for (const auto& e : g.edges) label_set.insert(*e.label);
    std::vector<std::string> labels(label_set.begin(), label_set.end());
    for (int cost = 0; cost <= b.max_cost; ++cost) {
        for (const auto& st : structures_of_cost(cost, labels.size(), b)) {
            std::vector<std::vector<std::pair<int, std::vector<int>>>> templates(labels.size());
            std::vector<std::vector<std::pair<int, int>>> pairs(labels.size());
            for (std::size_t l = 0; l < labels.size(); ++l) {
                for (std::size_t p = 0; p < st.preds.size(); ++p) {
                    for (auto& t : all_tuples(st.arities[l], st.preds[p])) templates[l].emplace_back(static_cast<int>(p), t);
                }
                for (int i = 0; i < st.arities[l]; ++i) {
                    for (int j = i + 1; j < st.arities[l]; ++j) pairs[l].emplace_back(i, j);
                }
            }
            bool any_static = std::any_of(st.arities.begin(), st.arities.end(), [](int a) { return a >= 1; });
            std::vector<SchemaChoice> choice(labels.size());
            std::function<bool(std::size_t)> rec = [&](std::size_t l) -> bool {
                if (l == labels.size()) return reproduces(g, labels, st, templates, pairs, choice, b.objects);
                auto nf = templates[l].size();
                auto ns = any_static ? static_cast<std::size_t>(st.arities[l] * st.arities[l]) : 0;
                auto nq = pairs[l].size();
                for (const auto& f : all_tuples(5, static_cast<int>(nf))) {
                    for (const auto& s : all_tuples(2, static_cast<int>(ns))) {
                        for (const auto& q : all_tuples(2, static_cast<int>(nq))) {
                            choice[l] = {f, s, q};
                            if (rec(l + 1)) return true;
                        }
                    }
                }
                return false;
            };
            if (rec(0)) return cost;
        }
    }
    return std::nullopt;
}

HypothesisSpace space_from(const OracleBounds& b) {
    HypothesisSpace s;
    s.max_predicates = b.max_predicates;
    s.max_pred_arity = b.max_pred_arity;
    s.max_schema_arity = b.max_schema_arity;
    s.objects = {b.objects};
    return s;
}

void check_hypothesis(const DomainHypothesis& h, std::span<const Graph> graphs) {
    REQUIRE(h.instances.size() == graphs.size());
    for (std::size_t i = 0; i < graphs.size(); ++i) {
        auto sp = expand(h.instances[i]);
        CHECK(isomorphic(action_type_labels(sp.graph), action_type_labels(graphs[i]), true));
        const auto& states = h.node_states[i];
        REQUIRE(states.size() == static_cast<std::size_t>(graphs[i].num_nodes));
        CHECK(std::set<State>(states.begin(), states.end()).size() == states.size());
        CHECK(states[static_cast<std::size_t>(graphs[i].init.value_or(0))] == h.instances[i].initial_state());
        for (const auto& e : graphs[i].edges) {
            const auto& from = states[static_cast<std::size_t>(e.src)];
            const auto& to = states[static_cast<std::size_t>(e.dst)];
            bool found = false;
            for (const auto& a : sp.actions) {
                if (h.instances[i].domain().schemas()[static_cast<std::size_t>(a.schema)].name == *e.label &&
                    is_applicable(from, a) && apply(from, a) == to)
                    found = true;
            }
            CHECK(found);
        }
    }
    CHECK(cost(*h.domain) == h.structure.cost());
}

}  // namespace

TEST_CASE("cost adds one plus arity per schema and per fluent predicate") {
    CHECK(cost(Domain("empty", {}, {})) == 0);
    // move/3 + on/2 + clear/1; larger and equality are static.
    CHECK(cost(*bench::hanoi_domain()) == 4 + 3 + 2);
    // pick, drop, deliver, move (arity 2 each) + at/2 at_r/1 hold/1 handempty/0 delivered/1.
    CHECK(cost(*bench::delivery_domain()) == 12 + 3 + 2 + 2 + 1 + 2);
    CHECK(Structure{{2}, {"move"}, {3}}.cost() == 7);
    CHECK(Structure{{}, {}, {}}.cost() == 0);
}

TEST_CASE("structures are enumerated in ascending cost without repeats") {
    HypothesisSpace s;
    s.max_predicates = 2;
    s.max_pred_arity = 2;
    s.max_schema_arity = 2;
    s.schema_arity["b"] = 1;
    auto all = enumerate_structures({"b", "a", "a"}, s);
    // predicate multisets: 1 + 3 + 6; schema arities: 3 * 2.
    CHECK(all.size() == 10 * 6);
    std::set<std::string> seen;
    for (std::size_t i = 0; i < all.size(); ++i) {
        CHECK(all[i].labels == std::vector<std::string>{"a", "b"});
        CHECK(all[i].schema_arities[1] <= 1);
        CHECK(std::is_sorted(all[i].predicate_arities.begin(), all[i].predicate_arities.end()));
        if (i > 0) CHECK(all[i - 1].cost() <= all[i].cost());
        seen.insert(all[i].to_string());
    }
    CHECK(seen.size() == all.size());
    CHECK(all.front().cost() == 2);
}

TEST_CASE("a single toggle edge needs one nullary predicate and one parameterless schema") {
    std::vector<Graph> gs{labeled(2, {{0, 1, "toggle"}})};
    HypothesisSpace s;
    s.objects = {0};
    auto r = learn_domain(gs, s);
    REQUIRE(r.status == ModelStatus::Found);
    const auto& d = *r.hypothesis->domain;
    REQUIRE(d.schemas().size() == 1);
    CHECK(d.schemas()[0].arity() == 0);
    int fluents = 0;
    for (std::size_t p = 0; p < d.predicates().size(); ++p) {
        if (d.predicates()[p].kind == PredicateKind::Fluent) {
            ++fluents;
            CHECK(d.predicates()[p].arity == 0);
        }
    }
    CHECK(fluents == 1);
    CHECK(r.hypothesis->cost == 2);
    check_hypothesis(*r.hypothesis, gs);
}

TEST_CASE("learned cost equals the exhaustive oracle minimum on toy graphs") {
    struct Case {
        const char* name;
        Graph g;
        OracleBounds b;
    };
    std::vector<Case> cases{
        {"toggle", labeled(2, {{0, 1, "t"}}), {1, 1, 1, 0, 6}},
        {"swap", labeled(2, {{0, 1, "a"}, {1, 0, "b"}}), {1, 1, 1, 1, 6}},
        {"self loop", labeled(2, {{0, 1, "a"}, {1, 1, "a"}}), {1, 1, 1, 1, 6}},
        {"two moves", labeled(3, {{0, 1, "go"}, {0, 2, "go"}}), {2, 1, 1, 2, 6}},
        {"ring of two", labeled(2, {{0, 1, "go"}, {1, 0, "go"}}), {1, 1, 2, 2, 6}},
        {"triangle", labeled(3, {{0, 1, "go"}, {0, 2, "go"}, {1, 0, "go"}, {1, 2, "go"}, {2, 0, "go"}, {2, 1, "go"}}),
         {1, 1, 2, 3, 5}},
        {"chain", labeled(3, {{0, 1, "up"}, {1, 2, "up"}}), {1, 1, 2, 3, 5}},
    };
    for (const auto& c : cases) {
        CAPTURE(c.name);
        auto expected = oracle_min_cost(c.g, c.b);
        std::vector<Graph> gs{c.g};
        auto r = learn_domain(gs, space_from(c.b));
        if (!expected) {
            // The oracle stops at max_cost; anything the learner returns must be dearer.
            if (r.hypothesis) CHECK(r.hypothesis->cost > c.b.max_cost);
            continue;
        }
        REQUIRE(r.status == ModelStatus::Found);
        CHECK(r.hypothesis->cost == *expected);
        check_hypothesis(*r.hypothesis, gs);
    }
}

TEST_CASE("every probe below the returned structure was refuted or pruned") {
    std::vector<Graph> gs{labeled(3, {{0, 1, "up"}, {1, 2, "up"}})};
    HypothesisSpace s;
    s.max_predicates = 2;
    s.max_pred_arity = 1;
    s.max_schema_arity = 2;
    s.objects = {3};
    auto r = learn_domain(gs, s);
    REQUIRE(r.status == ModelStatus::Found);
    REQUIRE(!r.probes.empty());
    CHECK(r.probes.back().verdict == "sat");
    for (std::size_t i = 0; i + 1 < r.probes.size(); ++i) {
        CHECK((r.probes[i].verdict == "unsat" || r.probes[i].verdict.rfind("pruned", 0) == 0));
        CHECK(r.probes[i].structure.cost() <= r.hypothesis->cost);
    }
}

TEST_CASE("hypothesis space exhausted yields Infeasible") {
    // Three distinct states cannot come from a single nullary atom.
    std::vector<Graph> gs{labeled(3, {{0, 1, "up"}, {1, 2, "up"}})};
    HypothesisSpace s;
    s.max_predicates = 1;
    s.max_pred_arity = 0;
    s.max_schema_arity = 0;
    s.objects = {1};
    auto r = learn_domain(gs, s);
    CHECK(r.status == ModelStatus::Infeasible);
    CHECK(!r.hypothesis);
    CHECK(!r.diagnosis.empty());
}

TEST_CASE("learning is deterministic") {
    std::vector<Graph> gs{labeled(3, {{0, 1, "go"}, {0, 2, "go"}, {1, 0, "go"}, {1, 2, "go"}, {2, 0, "go"}, {2, 1, "go"}})};
    HypothesisSpace s;
    s.max_schema_arity = 2;
    s.max_pred_arity = 1;
    s.objects = {3};
    auto a = learn_domain(gs, s);
    auto b = learn_domain(gs, s);
    REQUIRE(a.hypothesis);
    REQUIRE(b.hypothesis);
    CHECK(pddl::print_domain(*a.hypothesis->domain) == pddl::print_domain(*b.hypothesis->domain));
    CHECK(pddl::print_problem(a.hypothesis->instances[0]) == pddl::print_problem(b.hypothesis->instances[0]));
}

TEST_CASE("malformed inputs are rejected") {
    HypothesisSpace s;
    std::vector<Graph> unlabeled{Graph{2, 0, std::nullopt, {{0, 1, std::nullopt}}}};
    s.objects = {1};
    CHECK_THROWS_AS(learn_domain(unlabeled, s), std::invalid_argument);
    std::vector<Graph> two{labeled(2, {{0, 1, "a"}}), labeled(2, {{0, 1, "a"}})};
    CHECK_THROWS_AS(learn_domain(two, s), std::invalid_argument);
    std::vector<Graph> unreachable{labeled(3, {{0, 1, "a"}})};
    CHECK_THROWS_AS(learn_domain(unreachable, s), std::invalid_argument);
}

TEST_CASE("the reference Hanoi domain validates on its own graphs") {
    auto g2 = typed_space(bench::make_hanoi(2));
    auto v = validate_domain(bench::hanoi_domain(), g2, 5);
    REQUIRE(v.valid);
    REQUIRE(v.witness);
    CHECK(isomorphic(typed_space(*v.witness), g2, true));
    CHECK(v.objects == 5);
}

TEST_CASE("validation fails on a graph with one edge removed") {
    auto g2 = typed_space(bench::make_hanoi(2));
    auto v = validate_domain(bench::hanoi_domain(), drop_edge(g2, 3), 5);
    CHECK(!v.valid);
    CHECK(!v.timed_out);
    CHECK(!v.witness);

    auto toggle = labeled(2, {{0, 1, "toggle"}});
    std::vector<Graph> gs{toggle};
    HypothesisSpace s;
    s.objects = {0};
    auto r = learn_domain(gs, s);
    REQUIRE(r.hypothesis);
    CHECK(validate_domain(r.hypothesis->domain, toggle, 2).valid);
    CHECK(!validate_domain(r.hypothesis->domain, labeled(2, {{0, 1, "toggle"}, {1, 0, "toggle"}}), 2).valid);
    CHECK_THROWS_AS(validate_domain(r.hypothesis->domain, drop_edge(toggle, 0), 2), std::invalid_argument);
    CHECK(!validate_domain(r.hypothesis->domain, labeled(2, {{0, 1, "other"}}), 2).valid);
}

TEST_CASE("Hanoi with two disks: cost 7 from one binary predicate and a ternary schema") {
    std::vector<Graph> gs{typed_space(bench::make_hanoi(2))};
    HypothesisSpace s;
    s.max_predicates = 1;
    s.max_pred_arity = 2;
    s.max_schema_arity = 3;
    s.objects = {5};
    auto r = learn_domain(gs, s);
    REQUIRE(r.status == ModelStatus::Found);
    CHECK(r.hypothesis->cost == 7);
    CHECK(r.hypothesis->structure.predicate_arities == std::vector<int>{2});
    CHECK(r.hypothesis->structure.schema_arities == std::vector<int>{3});
    check_hypothesis(*r.hypothesis, gs);
    CHECK(validate_domain(r.hypothesis->domain, gs[0], 5).valid);

    // The learned domain survives a round trip through PDDL text.
    auto text = pddl::print_domain(*r.hypothesis->domain);
    auto back = pddl::parse_domain(text);
    REQUIRE(back.domain);
    CHECK(*back.domain == *r.hypothesis->domain);
}
