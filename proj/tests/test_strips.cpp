#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gplan/bench.hpp"
#include "gplan/pddl.hpp"
#include "gplan/state_space.hpp"
#include "gplan/strips.hpp"
#include "name_oracle.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

using namespace gplan;

namespace {

const std::filesystem::path kData = GPLAN_DATA_DIR;

std::set<std::string> names_of(const Instance& inst, const std::vector<GroundAction>& acts) {
    std::set<std::string> out;
    for (const auto& a : acts) out.insert(inst.action_name(a));
    return out;
}

std::set<std::string> names_of(const std::vector<oracle::NamedAction>& acts) {
    std::set<std::string> out;
    for (const auto& a : acts) out.insert(a.name);
    return out;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("grounding Delivery 2x2 with one package matches naive enumeration") {
    Instance inst = bench::make_delivery(2, 2, 1, 3);
    auto acts = ground(inst);
    auto naive = oracle::ground_naive(inst);
    CHECK(acts.size() == naive.size());
    CHECK(names_of(inst, acts) == names_of(naive));
    // move needs adjacency: 8 directed adjacencies; pick/drop/deliver keep all bindings
    // whose static literals hold.
    CHECK(std::count_if(acts.begin(), acts.end(), [&](const GroundAction& a) {
              return inst.domain().schemas()[static_cast<std::size_t>(a.schema)].name == "move";
          }) == 8);
}

TEST_CASE("zero objects and parameterized schemas give no ground actions") {
    auto dom = bench::blocks_domain();
    Instance inst(dom, "empty", {}, {}, {});
    CHECK(ground(inst).empty());
}

TEST_CASE("Hanoi grounding drops every move violating its statics") {
    Instance inst = bench::make_hanoi(3, 3);
    auto acts = ground(inst);
    const auto& d = inst.domain();
    const int larger = *d.find_predicate("larger");
    std::set<std::vector<int>> kept;
    for (const auto& a : acts) kept.insert(a.args);
    const int n = inst.num_objects();
    int expected = 0;
    for (int x = 0; x < n; ++x) {
        for (int y = 0; y < n; ++y) {
            for (int z = 0; z < n; ++z) {
                bool ok = x != z && x != y && inst.static_holds({larger, {z, x}});
                expected += ok ? 1 : 0;
                CHECK(kept.count({x, y, z}) == (ok ? 1u : 0u));
            }
        }
    }
    CHECK(static_cast<int>(acts.size()) == expected);
}

TEST_CASE("ground actions are ordered by schema name and argument names") {
    Instance inst = bench::make_delivery(2, 3, 2, 1);
    auto acts = ground(inst);
    for (std::size_t i = 1; i < acts.size(); ++i) {
        const auto& s0 = inst.domain().schemas()[static_cast<std::size_t>(acts[i - 1].schema)].name;
        const auto& s1 = inst.domain().schemas()[static_cast<std::size_t>(acts[i].schema)].name;
        std::vector<std::string> a0, a1;
        for (int o : acts[i - 1].args) a0.push_back(inst.objects()[static_cast<std::size_t>(o)]);
        for (int o : acts[i].args) a1.push_back(inst.objects()[static_cast<std::size_t>(o)]);
        CHECK(std::tie(s0, a0) < std::tie(s1, a1));
    }
}

TEST_CASE("no pick is applicable without handempty") {
    Instance inst = bench::make_delivery(3, 3, 2, 5);
    auto sp = expand(inst);
    auto acts = ground(inst);
    const int handempty = inst.atom_id({*inst.domain().find_predicate("handempty"), {}});
    int checked = 0;
    for (const auto& s : sp.states) {
        if (s.contains(handempty)) continue;
        ++checked;
        for (std::size_t i : applicable(s, acts)) {
            CHECK(inst.domain().schemas()[static_cast<std::size_t>(acts[i].schema)].name != "pick");
        }
    }
    CHECK(checked > 0);
}

TEST_CASE("applicable and apply agree with the name oracle on every reachable state") {
    std::vector<Instance> instances{bench::make_hanoi(3, 3), bench::make_delivery(2, 2, 1, 0),
                                    bench::make_blocks_clear(3, 4), bench::make_gripper(2),
                                    bench::make_two_counters(3)};
    for (const auto& inst : instances) {
        CAPTURE(inst.name());
        auto acts = ground(inst);
        auto naive = oracle::ground_naive(inst);
        std::map<std::string, const oracle::NamedAction*> by_name;
        for (const auto& a : naive) by_name[a.name] = &a;
        REQUIRE(names_of(inst, acts) == names_of(naive));
        auto sp = expand(inst);
        for (const auto& s : sp.states) {
            auto ns = oracle::named(inst, s);
            std::set<std::string> mine, theirs;
            for (std::size_t i : applicable(s, acts)) {
                const auto& a = acts[i];
                mine.insert(inst.action_name(a));
                State t = apply(s, a);
                CHECK(oracle::named(inst, t) == oracle::apply(ns, *by_name.at(inst.action_name(a))));
                for (int id : t.atoms()) CHECK(inst.is_fluent_atom(id));
            }
            for (const auto& a : naive) {
                if (oracle::applicable(ns, a)) theirs.insert(a.name);
            }
            CHECK(mine == theirs);
        }
    }
}

TEST_CASE("initial Hanoi(3) applicable set matches brute force") {
    Instance inst = bench::make_hanoi(3, 3);
    auto acts = ground(inst);
    std::set<std::string> mine;
    for (std::size_t i : applicable(inst.initial_state(), acts)) mine.insert(inst.action_name(acts[i]));
    std::set<std::string> theirs;
    auto ns = oracle::named(inst, inst.initial_state());
    for (const auto& a : oracle::ground_naive(inst)) {
        if (oracle::applicable(ns, a)) theirs.insert(a.name);
    }
    CHECK(mine == theirs);
    CHECK(mine == std::set<std::string>{"(move d1 d2 peg2)", "(move d1 d2 peg3)"});
}

TEST_CASE("pick on the coordinate Delivery domain sets hold and clears at and handempty") {
    auto dom = pddl::load_domain(kData / "delivery_xy" / "domain.pddl");
    Instance inst = pddl::load_problem(kData / "delivery_xy" / "p3x3-2.pddl", dom);
    auto acts = ground(inst);
    auto id = [&](const char* pred, std::vector<std::string> args) {
        Atom a{*dom->find_predicate(pred), {}};
        for (auto& x : args) a.args.push_back(*inst.find_object(x));
        return inst.atom_id(a);
    };
    // Walk the agent from (2,3) to (3,3) where o1 lies.
    State s = inst.initial_state();
    auto find = [&](const std::string& name) {
        for (const auto& a : acts) {
            if (inst.action_name(a) == name) return a;
        }
        FAIL("missing action " << name);
        return GroundAction{};
    };
    s = apply(s, find("(move x2 y3 x3 y3)"));
    const GroundAction pick = find("(pick o1 x3 y3)");
    REQUIRE(is_applicable(s, pick));
    State t = apply(s, pick);
    CHECK(t.contains(id("hold", {"o1"})));
    CHECK_FALSE(t.contains(id("at", {"o1", "x3", "y3"})));
    CHECK_FALSE(t.contains(id("handempty", {})));
}

TEST_CASE("apply of an action whose effects equal its preconditions is a fixed point") {
    auto r = pddl::parse_domain(R"((define (domain toy) (:requirements :strips)
        (:predicates (p) (q ?x))
        (:action keep :parameters (?x) :precondition (and (p) (q ?x)) :effect (and (p) (q ?x)))))");
    REQUIRE(r.domain);
    auto dom = std::make_shared<const Domain>(*r.domain);
    Instance inst(dom, "toy", {"a"}, {{0, {}}, {1, {0}}}, {});
    auto acts = ground(inst);
    REQUIRE(acts.size() == 1);
    CHECK(apply(inst.initial_state(), acts[0]) == inst.initial_state());
}

TEST_CASE("random state and action pairs agree with set arithmetic") {
    std::mt19937 rng(99);
    Instance inst = bench::make_delivery(2, 3, 2, 7);
    auto acts = ground(inst);
    auto naive = oracle::ground_naive(inst);
    std::map<std::string, const oracle::NamedAction*> by_name;
    for (const auto& a : naive) by_name[a.name] = &a;
    std::vector<int> fluent;
    for (int i = 0; i < static_cast<int>(inst.num_atoms()); ++i) {
        if (inst.is_fluent_atom(i)) fluent.push_back(i);
    }
    int applied = 0;
    for (int round = 0; round < 3000; ++round) {
        std::vector<int> atoms;
        for (int f : fluent) {
            if (rng() % 4 == 0) atoms.push_back(f);
        }
        State s(atoms);
        const auto& a = acts[rng() % acts.size()];
        auto ns = oracle::named(inst, s);
        const auto& oa = *by_name.at(inst.action_name(a));
        CHECK(is_applicable(s, a) == oracle::applicable(ns, oa));
        if (is_applicable(s, a)) {
            ++applied;
            CHECK(oracle::named(inst, apply(s, a)) == oracle::apply(ns, oa));
        } else {
            CHECK_THROWS_AS(apply(s, a), ContractViolation);
        }
    }
    CHECK(applied > 0);
}

TEST_CASE("ground add and delete lists are disjoint") {
    for (const auto& inst : {bench::make_hanoi(3, 3), bench::make_gripper(3), bench::make_delivery(3, 2, 2, 1)}) {
        for (const auto& a : ground(inst)) {
            std::vector<int> both;
            std::set_intersection(a.add.begin(), a.add.end(), a.del.begin(), a.del.end(), std::back_inserter(both));
            CHECK(both.empty());
        }
    }
}

TEST_CASE("domain construction enforces schema invariants") {
    std::vector<Predicate> preds{{"p", 1, PredicateKind::Fluent}};
    ActionSchema both{"bad", {"x"}, {}, {}, {{{0, {0}}, true}, {{0, {0}}, false}}};
    CHECK_THROWS_AS(Domain("d", preds, {both}), ValidationError);
    ActionSchema empty_eff{"bad", {"x"}, {}, {{{0, {0}}, true}}, {}};
    CHECK_THROWS_AS(Domain("d", preds, {empty_eff}), ValidationError);
    ActionSchema stray{"bad", {"x"}, {}, {}, {{{0, {1}}, true}}};
    CHECK_THROWS_AS(Domain("d", preds, {stray}), ValidationError);
    ActionSchema ok{"good", {"x"}, {}, {}, {{{0, {0}}, true}}};
    CHECK_NOTHROW(Domain("d", preds, {ok}));
    CHECK_THROWS_AS(Domain("d", preds, {ok}, std::set<std::string>{"p"}), ValidationError);
}

TEST_CASE("instance construction rejects arity mismatches and static goals") {
    auto dom = bench::delivery_domain();
    const int at = *dom->find_predicate("at");
    const int tgt = *dom->find_predicate("target");
    CHECK_THROWS_AS(Instance(dom, "i", {"a", "b"}, {{at, {0}}}, {}), ValidationError);
    CHECK_THROWS_AS(Instance(dom, "i", {"a", "b"}, {}, {{{at, {0, 1, 1}}, true}}), ValidationError);
    CHECK_THROWS_AS(Instance(dom, "i", {"a", "b"}, {}, {{{tgt, {0}}, true}}), ValidationError);
    CHECK_THROWS_AS(Instance(dom, "i", {"a", "b"}, {{at, {0, 2}}}, {}), ValidationError);
    CHECK_NOTHROW(Instance(dom, "i", {"a", "b"}, {{at, {0, 1}}}, {{{at, {1, 0}}, false}}));
}

TEST_CASE("atom ids round-trip through decoding") {
    Instance inst = bench::make_hanoi(2, 3);
    for (int id = 0; id < static_cast<int>(inst.num_atoms()); ++id) CHECK(inst.atom_id(inst.atom(id)) == id);
}

// ---------------------------------------------------------------- PDDL

TEST_CASE("coordinate Delivery domain parses with three schemas") {
    auto r = pddl::parse_domain(slurp(kData / "delivery_xy" / "domain.pddl"));
    REQUIRE(r.domain);
    CHECK(r.domain->schemas().size() == 3);
    for (const char* p : {"at", "at_r", "hold", "handempty", "adjacent"}) CHECK(r.domain->find_predicate(p));
    CHECK(r.domain->is_static(*r.domain->find_predicate("adjacent")));
    CHECK_FALSE(r.domain->is_static(*r.domain->find_predicate("at")));
}

TEST_CASE("empty domain body yields zero schemas and a warning") {
    auto r = pddl::parse_domain("(define (domain nothing))");
    REQUIRE(r.domain);
    CHECK(r.domain->schemas().empty());
    REQUIRE(r.diagnostics.size() == 1);
    CHECK(r.diagnostics[0].severity == pddl::Severity::Warning);
}

TEST_CASE("undeclared predicate gives one error at its position") {
    auto r = pddl::parse_domain(
        "(define (domain d)\n"
        "  (:predicates (p ?x))\n"
        "  (:action a :parameters (?x)\n"
        "     :precondition (and (p ?x) (q ?x))\n"
        "     :effect (not (p ?x))))\n");
    CHECK_FALSE(r.domain);
    REQUIRE(r.diagnostics.size() == 1);
    CHECK(r.diagnostics[0].severity == pddl::Severity::Error);
    CHECK(r.diagnostics[0].line == 4);
    CHECK(r.diagnostics[0].col == 33);
    CHECK(r.diagnostics[0].format("d.pddl") == "d.pddl:4:33: error: undeclared predicate 'q'");
}

TEST_CASE("unsupported constructs are rejected by name") {
    auto reqs = pddl::parse_domain("(define (domain d) (:requirements :strips :typing))");
    CHECK_FALSE(reqs.domain);
    REQUIRE(!reqs.diagnostics.empty());
    CHECK(reqs.diagnostics[0].message.find(":typing") != std::string::npos);
    auto forall = pddl::parse_domain(
        "(define (domain d) (:predicates (p ?x))"
        " (:action a :parameters (?x) :precondition (forall (?y) (p ?y)) :effect (p ?x)))");
    CHECK_FALSE(forall.domain);
    CHECK(forall.diagnostics[0].message.find("forall") != std::string::npos);
    auto eq = pddl::parse_domain(
        "(define (domain d) (:predicates (p ?x))"
        " (:action a :parameters (?x ?y) :precondition (not (= ?x ?y)) :effect (p ?x)))");
    CHECK_FALSE(eq.domain);
    auto unbalanced = pddl::parse_domain("(define (domain d)");
    CHECK_FALSE(unbalanced.domain);
    CHECK(unbalanced.diagnostics[0].line == 1);
    CHECK(unbalanced.diagnostics[0].col == 1);
}

TEST_CASE("identifiers are normalized to lower case") {
    auto r = pddl::parse_domain(
        "(DEFINE (DOMAIN Toy) (:PREDICATES (P ?X)) (:ACTION Go :PARAMETERS (?X) :PRECONDITION () :EFFECT (P ?X)))");
    REQUIRE(r.domain);
    CHECK(r.domain->name() == "toy");
    CHECK(r.domain->schemas()[0].name == "go");
    CHECK(r.domain->find_predicate("p"));
}

TEST_CASE("generated 3x3 Delivery problem has nine cells plus packages") {
    Instance gen = bench::make_delivery(3, 3, 2, 11);
    std::string text = pddl::print_problem(gen);
    auto r = pddl::parse_problem(text, bench::delivery_domain());
    REQUIRE(r.instance);
    int cells = 0;
    for (const auto& o : r.instance->objects()) cells += o.rfind("c_", 0) == 0 ? 1 : 0;
    CHECK(cells == 9);
    CHECK(r.instance->num_objects() == 11);
}

TEST_CASE("problem with empty goal makes every state a goal") {
    auto r = pddl::parse_problem(
        "(define (problem e) (:domain blocks) (:objects a b) (:init (ontable a) (ontable b) (clear a) (clear b) "
        "(handempty)) (:goal (and)))",
        bench::blocks_domain());
    REQUIRE(r.instance);
    auto sp = expand(*r.instance);
    CHECK(std::all_of(sp.goal.begin(), sp.goal.end(), [](bool g) { return g; }));
}

TEST_CASE("goal with unknown predicate is an error") {
    auto r = pddl::parse_problem(
        "(define (problem e) (:domain blocks) (:objects a) (:init (handempty)) (:goal (flying a)))",
        bench::blocks_domain());
    CHECK_FALSE(r.instance);
    REQUIRE(r.diagnostics.size() == 1);
    CHECK(r.diagnostics[0].severity == pddl::Severity::Error);
}

TEST_CASE("object used with the wrong arity is an error") {
    auto r = pddl::parse_problem(
        "(define (problem e) (:domain blocks) (:objects a b) (:init (clear a b)) (:goal (clear a)))",
        bench::blocks_domain());
    CHECK_FALSE(r.instance);
}

TEST_CASE("print then parse is the identity on domains and problems") {
    std::vector<std::shared_ptr<const Domain>> domains{bench::delivery_domain(), bench::blocks_domain(),
                                                       bench::hanoi_domain(), bench::gripper_domain(),
                                                       bench::counters_domain(),
                                                       pddl::load_domain(kData / "delivery_xy" / "domain.pddl")};
    auto empty = pddl::parse_domain("(define (domain nothing))");
    domains.push_back(std::make_shared<const Domain>(*empty.domain));
    for (const auto& d : domains) {
        auto r = pddl::parse_domain(pddl::print_domain(*d));
        REQUIRE(r.domain);
        CHECK(*r.domain == *d);
    }
    std::vector<Instance> instances{bench::make_delivery(3, 3, 2, 1), bench::make_blocks_clear(4, 2),
                                    bench::make_hanoi(3, 3),         bench::make_gripper(2),
                                    bench::make_two_counters(3),     bench::make_delivery(1, 1, 0, 0)};
    for (const auto& inst : instances) {
        auto r = pddl::parse_problem(pddl::print_problem(inst), inst.domain_ptr());
        REQUIRE(r.instance);
        CHECK(*r.instance == inst);
    }
}

TEST_CASE("every corpus file round-trips") {
    int domains = 0, problems = 0;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(kData)) {
        if (entry.path().filename() != "domain.pddl") continue;
        auto dom = pddl::load_domain(entry.path());
        auto again = pddl::parse_domain(pddl::print_domain(*dom));
        REQUIRE(again.domain);
        CHECK(*again.domain == *dom);
        ++domains;
        for (const auto& f : std::filesystem::directory_iterator(entry.path().parent_path())) {
            if (f.path().extension() != ".pddl" || f.path().filename() == "domain.pddl") continue;
            CAPTURE(f.path().string());
            Instance inst = pddl::load_problem(f.path(), dom);
            auto r = pddl::parse_problem(pddl::print_problem(inst), dom);
            REQUIRE(r.instance);
            CHECK(*r.instance == inst);
            ++problems;
        }
    }
    CHECK(domains >= 1);
    CHECK(problems >= 1);
}

TEST_CASE("plans round-trip through text") {
    Instance inst = bench::make_hanoi(2, 3);
    auto acts = ground(inst);
    std::vector<std::size_t> plan{0, 1, 2};
    std::string text = pddl::print_plan(inst, acts, plan);
    CHECK(pddl::parse_plan("; comment\n" + text + "\n", inst, acts) == plan);
    CHECK(pddl::parse_plan("( MOVE   d1 d2  peg2 )", inst, acts).size() == 1);
    CHECK_THROWS_AS(pddl::parse_plan("(fly d1)", inst, acts), pddl::ParseError);
}
