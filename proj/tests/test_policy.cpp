#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gplan/bench.hpp"
#include "gplan/pddl.hpp"
#include "gplan/policy.hpp"
#include "oracles.hpp"

#include <fstream>
#include <functional>
#include <random>
#include <set>

using namespace gplan;
using namespace gplan::oracles;

namespace {

nlohmann::json read_json(const std::string& rel) {
    std::ifstream in(std::string(GPLAN_DATA_DIR) + "/" + rel);
    REQUIRE(in.good());
    return nlohmann::json::parse(in);
}

Policy blocks_policy() { return policy_from_json(read_json("policies/blocks_clear.json"), *bench::blocks_domain()); }
Policy delivery_policy() { return policy_from_json(read_json("policies/delivery.json"), *bench::delivery_domain()); }

Instance single_tower3() {
    auto r = pddl::parse_problem(R"(
(define (problem tower3) (:domain blocks)
  (:objects a b c)
  (:init (ontable a) (on b a) (on c b) (clear c) (handempty))
  (:goal (clear a)))
)",
                                 bench::blocks_domain());
    REQUIRE(r.instance);
    return *r.instance;
}

FeatureValuation fv(std::initializer_list<int> v) { return FeatureValuation(v); }

}  // namespace

TEST_CASE("condition truth on blocks valuations") {
    auto pi = blocks_policy();
    const auto& pick = pi.rules[0];
    CHECK(cond_holds(fv({0, 2}), pick));
    CHECK_FALSE(cond_holds(fv({1, 2}), pick));
    CHECK(cond_holds(fv({1, 0}), PolicyRule{}));
    CHECK(cond_holds(fv({0, 7}), PolicyRule{}));
}

TEST_CASE("pair satisfaction examples") {
    auto pi = blocks_policy();
    CHECK(pair_satisfies(fv({0, 2}), fv({1, 1}), pi.rules[0]));
    CHECK_FALSE(pair_satisfies(fv({0, 2}), fv({1, 2}), pi.rules[0]));
    CHECK(pair_satisfies(fv({1, 2}), fv({0, 2}), pi.rules[1]));
    CHECK_FALSE(pair_satisfies(fv({1, 2}), fv({0, 1}), pi.rules[1]));

    auto d = delivery_policy();
    // Features in file order: H, p, t, n.
    CHECK(pair_satisfies(fv({0, 2, 1, 3}), fv({0, 1, 4, 3}), d.rules[0]));
    CHECK(pair_satisfies(fv({0, 2, 1, 3}), fv({0, 1, 1, 3}), d.rules[0]));  // t? allows equal
    CHECK_FALSE(pair_satisfies(fv({0, 2, 1, 3}), fv({0, 1, 4, 2}), d.rules[0]));
    CHECK_FALSE(pair_satisfies(fv({0, 2, 1, 3}), fv({0, 2, 0, 3}), d.rules[0]));
}

TEST_CASE("pair satisfaction obeys the frame axiom") {
    std::mt19937 rng(17);
    const int nf = 4;
    const CondKind ck[] = {CondKind::EqZero, CondKind::GtZero};
    const EffKind ek[] = {EffKind::Dec, EffKind::Inc, EffKind::AnyNum};
    int checked = 0;
    for (int round = 0; round < 12000; ++round) {
        PolicyRule r;
        std::vector<char> touched(nf, 0);
        for (int f = 0; f < nf; ++f) {
            if (rng() % 3 == 0) r.conds.push_back({f, ck[rng() % 2]});
            if (rng() % 3 == 0) {
                r.effs.push_back({f, ek[rng() % 3]});
                touched[static_cast<std::size_t>(f)] = 1;
            }
        }
        FeatureValuation a(nf), b(nf);
        for (int f = 0; f < nf; ++f) {
            a[static_cast<std::size_t>(f)] = static_cast<int>(rng() % 3);
            b[static_cast<std::size_t>(f)] = static_cast<int>(rng() % 3);
        }
        if (!pair_satisfies(a, b, r)) continue;
        for (int f = 0; f < nf; ++f) {
            if (touched[static_cast<std::size_t>(f)]) continue;
            auto c = b;
            c[static_cast<std::size_t>(f)] += 1;
            CHECK_FALSE(pair_satisfies(a, c, r));
            ++checked;
        }
    }
    CHECK(checked > 100);
}

TEST_CASE("compatibility of concrete transitions") {
    auto inst = single_tower3();
    auto pi = blocks_policy();
    auto actions = ground(inst);
    const auto& s = inst.initial_state();
    int unstack = 0;
    for (std::size_t a : applicable(s, actions)) {
        auto name = inst.action_name(actions[a]);
        CHECK(name == "(unstack c b)");
        CHECK(compatible(s, apply(s, actions[a]), pi, inst));
        ++unstack;
    }
    CHECK(unstack == 1);
    // Putting the block back changes nothing in the first rule's view.
    auto held = apply(s, actions[applicable(s, actions)[0]]);
    for (std::size_t a : applicable(held, actions)) {
        auto t = apply(held, actions[a]);
        bool restack = inst.action_name(actions[a]) == "(stack c b)";
        CHECK(compatible(held, t, pi, inst) == !restack);
    }
    Policy none{pi.features, {}};
    CHECK_FALSE(compatible(s, s, none, inst));
}

TEST_CASE("blocks clear policy solves the three-block tower") {
    auto r = verify(blocks_policy(), single_tower3());
    CHECK(r.outcome == Outcome::Solves);
    CHECK(r.witness.empty());
    CHECK(r.states == 4);  // init, holding c, c put away, holding b (a is clear)
}

TEST_CASE("blocks clear policy solves random instances with 2 to 6 blocks") {
    auto pi = blocks_policy();
    for (int n = 2; n <= 6; ++n) {
        for (std::uint64_t seed = 0; seed < 4; ++seed) {
            auto inst = bench::make_blocks_clear(n, seed);
            CHECK_MESSAGE(verify(pi, inst).outcome == Outcome::Solves, n, " blocks, seed ", seed);
        }
    }
}

TEST_CASE("delivery policy solves 3x3 instances with two packages") {
    auto pi = delivery_policy();
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto inst = bench::make_delivery(3, 3, 2, seed);
        auto r = verify(pi, inst);
        CHECK_MESSAGE(r.outcome == Outcome::Solves, "seed ", seed, " ", r.detail);
    }
}

TEST_CASE("delivery policy without the drop rule dead-ends holding at the target") {
    auto pi = delivery_policy();
    pi.rules.pop_back();
    auto inst = bench::make_delivery(3, 3, 2, 1);
    auto r = verify(pi, inst);
    REQUIRE(r.outcome == Outcome::DeadEnd);
    REQUIRE(!r.witness.empty());
    CHECK(r.witness.front() == inst.initial_state());
    auto f = valuate(pi.features, r.witness.back(), inst);
    CHECK(f[0] == 1);  // H
    CHECK(f[2] == 0);  // t
    for (std::size_t i = 0; i + 1 < r.witness.size(); ++i) CHECK(compatible(r.witness[i], r.witness[i + 1], pi, inst));

    auto ex = execute(pi, inst, 1000);
    CHECK(ex.outcome == ExecOutcome::DeadEnd);
    auto g = valuate(pi.features, ex.states.back(), inst);
    CHECK(g[0] == 1);
    CHECK(g[2] == 0);
}

TEST_CASE("cycle witness is a compatible lasso") {
    auto pi = blocks_policy();
    // Drop the n>0 guard and the decrease: pick-up and put-down alternate forever.
    pi.rules = {PolicyRule{{{0, CondKind::IsFalse}}, {{0, EffKind::SetTrue}, {1, EffKind::AnyNum}}},
                PolicyRule{{{0, CondKind::IsTrue}}, {{0, EffKind::SetFalse}, {1, EffKind::AnyNum}}}};
    auto inst = single_tower3();
    auto r = verify(pi, inst);
    REQUIRE(r.outcome == Outcome::Cycle);
    REQUIRE(r.witness.size() >= 3);
    CHECK(r.witness.front() == inst.initial_state());
    const auto& last = r.witness.back();
    CHECK(std::find(r.witness.begin(), r.witness.end() - 1, last) != r.witness.end() - 1);
    for (std::size_t i = 0; i + 1 < r.witness.size(); ++i) CHECK(compatible(r.witness[i], r.witness[i + 1], pi, inst));
}

TEST_CASE("verify agrees with brute-force trajectory enumeration on random policies") {
    std::vector<Instance> insts;
    insts.push_back(single_tower3());
    insts.push_back(bench::make_blocks_clear(3, 2));
    insts.push_back(bench::make_hanoi(2));
    insts.push_back(bench::make_two_counters(3));
    std::mt19937 rng(99);
    int solves = 0, fails = 0;
    for (const auto& inst : insts) {
        auto sp = expand(inst);
        REQUIRE(sp.states.size() <= 200);
        std::vector<Sample> samples;
        for (const auto& s : sp.states) samples.push_back({&inst, &s});
        auto pool = generate_pool(inst.domain(), samples, {4, true, 1});
        REQUIRE(pool.features.size() >= 2);
        for (int round = 0; round < 60; ++round) {
            Policy pi;
            for (int k = 0; k < 2; ++k) pi.features.push_back(pool.features[rng() % pool.features.size()]);
            if (pi.features[0].text == pi.features[1].text) pi.features.pop_back();
            const int nf = static_cast<int>(pi.features.size());
            const int nr = 1 + static_cast<int>(rng() % 3);
            for (int r = 0; r < nr; ++r) {
                PolicyRule rule;
                for (int f = 0; f < nf; ++f) {
                    const bool boolean = pi.features[static_cast<std::size_t>(f)].kind == FeatureKind::Boolean;
                    if (rng() % 2) {
                        rule.conds.push_back({f, boolean ? (rng() % 2 ? CondKind::IsTrue : CondKind::IsFalse)
                                                         : (rng() % 2 ? CondKind::EqZero : CondKind::GtZero)});
                    }
                    if (rng() % 2) {
                        const EffKind b[] = {EffKind::SetTrue, EffKind::SetFalse, EffKind::AnyBool};
                        const EffKind n[] = {EffKind::Dec, EffKind::Inc, EffKind::AnyNum};
                        rule.effs.push_back({f, boolean ? b[rng() % 3] : n[rng() % 3]});
                    }
                }
                pi.rules.push_back(rule);
            }
            const bool expected = oracle_solves(pi, inst);
            auto r = verify(pi, inst);
            REQUIRE(r.outcome != Outcome::Unknown);
            CHECK((r.outcome == Outcome::Solves) == expected);
            std::vector<FeatureValuation> vals;
            for (const auto& s : sp.states) vals.push_back(valuate(pi.features, s, inst));
            auto g = verify_on_space(sp, vals, pi.rules);
            CHECK(g.outcome == r.outcome);
            CHECK(g.states == r.states);
            CHECK(g.witness.size() == r.witness.size());
            (expected ? solves : fails) += 1;
        }
    }
    CHECK(solves > 0);
    CHECK(fails > 0);
}

TEST_CASE("execution under any tie-break reaches the goal when verification succeeds") {
    auto pi = delivery_policy();
    auto inst = bench::make_delivery(3, 3, 2, 4);
    auto r = verify(pi, inst);
    REQUIRE(r.outcome == Outcome::Solves);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto ex = execute(pi, inst, r.states, seed);
        CHECK(ex.outcome == ExecOutcome::GoalReached);
        CHECK(ex.actions.size() + 1 == ex.states.size());
        CHECK(ex.actions.size() < r.states);
        CHECK(inst.is_goal(ex.states.back()));
    }
    auto det = execute(pi, inst, r.states);
    CHECK(det.outcome == ExecOutcome::GoalReached);
    CHECK(det.actions == execute(pi, inst, r.states).actions);
}

TEST_CASE("zero step budget on a non-goal initial state") {
    auto inst = single_tower3();
    auto ex = execute(blocks_policy(), inst, 0);
    CHECK(ex.outcome == ExecOutcome::StepLimit);
    CHECK(ex.states.size() == 1);
    CHECK(ex.actions.empty());
}

TEST_CASE("verify reports Unknown past the state limit") {
    auto pi = delivery_policy();
    auto inst = bench::make_delivery(3, 3, 2, 0);
    ExpandLimits lim;
    lim.max_states = 3;
    auto r = verify(pi, inst, lim);
    CHECK(r.outcome == Outcome::Unknown);
    CHECK(!r.detail.empty());
}

TEST_CASE("verify is independent of the thread count") {
    auto pi = delivery_policy();
    pi.rules.pop_back();
    auto inst = bench::make_delivery(3, 3, 2, 2);
    auto a = verify(pi, inst, {}, 1);
    auto b = verify(pi, inst, {}, 3);
    CHECK(a.outcome == b.outcome);
    CHECK(a.states == b.states);
    CHECK(a.witness == b.witness);
}

TEST_CASE("policy JSON round trip and errors") {
    auto pi = delivery_policy();
    auto j = policy_to_json(pi);
    auto back = policy_from_json(j, *bench::delivery_domain());
    REQUIRE(back.features.size() == 4);
    CHECK(back.rules == pi.rules);
    CHECK(back.features[1].name == "p");
    CHECK(back.features[1].text == pi.features[1].text);
    CHECK(rule_to_string(pi.rules[3], pi.features) == "{H, n>0, t=0} -> {-H, dec(n), p?}");
    CHECK(pi.cost() == 1 + 12 + 4 + 6);

    const auto& d = *bench::delivery_domain();
    auto bad = [&](const char* text) { return policy_from_json(nlohmann::json::parse(text), d); };
    CHECK_THROWS_AS(bad(R"J({"features": ["H: Bool(hold)"], "rules": [{"cond": ["H=0"], "eff": []}]})J"), PolicyError);
    CHECK_THROWS_AS(bad(R"J({"features": ["n: Num(hold)"], "rules": [{"cond": ["n"], "eff": []}]})J"), PolicyError);
    CHECK_THROWS_AS(bad(R"J({"features": ["H: Bool(hold)"], "rules": [{"cond": ["X"], "eff": []}]})J"), PolicyError);
    CHECK_THROWS_AS(bad(R"J({"features": ["H: Bool(hold)"], "rules": [{"cond": ["H", "-H"], "eff": []}]})J"), PolicyError);
    CHECK_THROWS_AS(bad(R"J({"features": ["H: Bool(hold)", "H: Num(hold)"], "rules": []})J"), PolicyError);
    CHECK_THROWS_AS(bad(R"J({"rules": []})J"), PolicyError);
    CHECK_THROWS_AS(bad(R"J({"features": ["H: Bool(nosuch)"], "rules": []})J"), FeatureError);
    auto unnamed = bad(R"J({"features": ["Bool(hold)"], "rules": [{"cond": ["-f0"], "eff": ["f0"]}]})J");
    CHECK(unnamed.features[0].name == "f0");
}
