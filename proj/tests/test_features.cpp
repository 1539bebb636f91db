#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gplan/bench.hpp"
#include "gplan/features.hpp"
#include "gplan/state_space.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <random>
#include <set>

using namespace gplan;

namespace {

// Set-of-names semantics over decoded atoms; shares nothing with the
// evaluator beyond Instance::atom().
struct NameOracle {
    const Instance& inst;
    const State& state;

    using Concept = std::set<std::string>;
    using Role = std::set<std::pair<std::string, std::string>>;

    std::vector<Atom> facts(const Expr& e) const {
        std::vector<Atom> out;
        if (e.goal) {
            for (const auto& l : inst.goal()) {
                if (l.positive) out.push_back(l.atom);
            }
            return out;
        }
        for (int id : state.atoms()) out.push_back(inst.atom(id));
        for (const auto& a : inst.init()) {
            if (inst.domain().is_static(a.predicate)) out.push_back(a);
        }
        return out;
    }

    const std::string& obj(int i) const { return inst.objects()[static_cast<std::size_t>(i)]; }

    Concept all() const { return Concept(inst.objects().begin(), inst.objects().end()); }

    Concept c(const Expr& e) const {
        switch (e.op) {
            case Op::Top:
                return all();
            case Op::Bot:
                return {};
            case Op::Prim: {
                Concept out;
                for (const auto& a : facts(e)) {
                    if (a.predicate != e.predicate) continue;
                    if (a.args.empty()) return all();
                    out.insert(obj(a.args[0]));
                }
                return out;
            }
            case Op::Not: {
                Concept in = c(*e.kids[0]);
                Concept out;
                for (const auto& o : inst.objects()) {
                    if (!in.count(o)) out.insert(o);
                }
                return out;
            }
            case Op::And: {
                Concept a = c(*e.kids[0]);
                Concept b = c(*e.kids[1]);
                Concept out;
                std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.end()));
                return out;
            }
            case Op::Exists:
            case Op::Forall: {
                Role rr = r(*e.kids[0]);
                Concept cc = c(*e.kids[1]);
                Concept out;
                for (const auto& x : inst.objects()) {
                    bool any = false;
                    bool every = true;
                    for (const auto& [a, b] : rr) {
                        if (a != x) continue;
                        any = any || cc.count(b);
                        every = every && cc.count(b);
                    }
                    if (e.op == Op::Exists ? any : every) out.insert(x);
                }
                return out;
            }
            default:
                FAIL("not a concept");
                return {};
        }
    }

    Role r(const Expr& e) const {
        switch (e.op) {
            case Op::RolePrim: {
                Role out;
                for (const auto& a : facts(e)) {
                    if (a.predicate == e.predicate) out.insert({obj(a.args[0]), obj(a.args[1])});
                }
                return out;
            }
            case Op::Inverse: {
                Role out;
                for (const auto& [a, b] : r(*e.kids[0])) out.insert({b, a});
                return out;
            }
            case Op::Star: {
                Role out = r(*e.kids[0]);
                for (const auto& o : inst.objects()) out.insert({o, o});
                for (bool grew = true; grew;) {
                    grew = false;
                    Role add;
                    for (const auto& [a, b] : out) {
                        for (const auto& [c2, d] : out) {
                            if (b == c2 && !out.count({a, d})) add.insert({a, d});
                        }
                    }
                    if (!add.empty()) {
                        grew = true;
                        out.insert(add.begin(), add.end());
                    }
                }
                return out;
            }
            default:
                FAIL("not a role");
                return {};
        }
    }

    int value(const Expr& e) const {
        switch (e.op) {
            case Op::Bool:
                return c(*e.kids[0]).empty() ? 0 : 1;
            case Op::Num:
                return static_cast<int>(c(*e.kids[0]).size());
            case Op::Dist: {
                Concept from = c(*e.kids[0]);
                Role rr = r(*e.kids[1]);
                Concept to = c(*e.kids[2]);
                std::map<std::string, int> dist;
                std::deque<std::string> q;
                for (const auto& x : from) {
                    dist[x] = 0;
                    q.push_back(x);
                }
                while (!q.empty()) {
                    auto x = q.front();
                    q.pop_front();
                    if (to.count(x)) return dist[x];
                    for (const auto& [a, b] : rr) {
                        if (a == x && !dist.count(b)) {
                            dist[b] = dist[x] + 1;
                            q.push_back(b);
                        }
                    }
                }
                return inst.num_objects() * inst.num_objects() + 1;
            }
            default:
                FAIL("not a feature");
                return -1;
        }
    }
};

int oracle_value(const Feature& f, const State& s, const Instance& inst) { return NameOracle{inst, s}.value(*f.expr); }

std::vector<Sample> samples_of(const StateSpace& sp, const Instance& inst) {
    std::vector<Sample> out;
    for (const auto& s : sp.states) out.push_back({&inst, &s});
    return out;
}

const char* kDeliveryP = "Dist(at_r, adjacent, Not(And(Not(Exists(Inverse(at), Not(delivered))), handempty)))";

}  // namespace

TEST_CASE("undelivered package count on a fresh delivery instance is two") {
    auto inst = bench::make_delivery(3, 3, 2, 7);
    auto n = parse_feature("n: Num(And(Exists(at_g, Top), Not(delivered)))", inst.domain());
    CHECK(n.name == "n");
    CHECK(n.kind == FeatureKind::Numeric);
    CHECK(eval(n, inst.initial_state(), inst) == 2);
}

TEST_CASE("Bool of Bot is false and Num of Top counts objects") {
    auto inst = bench::make_blocks_clear(4, 1);
    CHECK(eval(parse_feature("Bool(Bot)", inst.domain()), inst.initial_state(), inst) == 0);
    CHECK(eval(parse_feature("Num(Top)", inst.domain()), inst.initial_state(), inst) == 4);
    CHECK(eval(parse_feature("Num(Bot)", inst.domain()), inst.initial_state(), inst) == 0);
}

TEST_CASE("agent distance to target equals grid manhattan distance in every state") {
    auto inst = bench::make_delivery(3, 3, 1, 3);
    auto sp = expand(inst);
    auto t = parse_feature("Dist(at_r, adjacent, target)", inst.domain());
    CHECK(t.cost == 4);
    for (const auto& s : sp.states) {
        int x = -1, y = -1;
        for (int id : s.atoms()) {
            auto a = inst.atom(id);
            if (inst.domain().predicate(a.predicate).name != "at_r") continue;
            const auto& name = inst.objects()[static_cast<std::size_t>(a.args[0])];
            x = name[2] - '0';
            y = name[4] - '0';
        }
        REQUIRE(x > 0);
        CHECK(eval(t, s, inst) == (x - 1) + (y - 1));
    }
}

TEST_CASE("Dist is zero on overlap and capped without a path") {
    auto inst = bench::make_delivery(2, 2, 1, 0);
    const auto& s = inst.initial_state();
    CHECK(eval(parse_feature("Dist(at_r, adjacent, at_r)", inst.domain()), s, inst) == 0);
    CHECK(eval(parse_feature("Dist(at_r, adjacent, Bot)", inst.domain()), s, inst) == dist_cap(inst));
    CHECK(dist_cap(inst) == inst.num_objects() * inst.num_objects() + 1);
}

TEST_CASE("evaluator matches the name oracle on hand features across whole state spaces") {
    std::vector<std::string> delivery = {
        "Bool(hold)", "Dist(at_r, adjacent, target)", "Num(And(Exists(at_g, Top), Not(delivered)))", kDeliveryP,
        "Num(Forall(at, target))", "Num(Exists(Star(adjacent), at_r))", "Bool(Exists(at_g, at_r))"};
    auto dinst = bench::make_delivery(3, 2, 2, 11);
    auto dsp = expand(dinst);
    for (const auto& text : delivery) {
        auto f = parse_feature(text, dinst.domain());
        for (const auto& s : dsp.states) REQUIRE(eval(f, s, dinst) == oracle_value(f, s, dinst));
    }
    std::vector<std::string> blocks = {"Bool(holding)", "Num(Exists(on, Exists(Star(on), clear_g)))",
                                       "Num(Forall(Inverse(on), Bot))", "Bool(handempty)", "Num(Not(ontable))"};
    auto binst = bench::make_blocks_clear(4, 5);
    auto bsp = expand(binst);
    for (const auto& text : blocks) {
        auto f = parse_feature(text, binst.domain());
        for (const auto& s : bsp.states) REQUIRE(eval(f, s, binst) == oracle_value(f, s, binst));
    }
}

TEST_CASE("hand feature costs") {
    auto d = bench::delivery_domain();
    CHECK(parse_feature("Bool(hold)", *d).cost == 1);
    CHECK(parse_feature("Num(And(Exists(at_g, Top), Not(delivered)))", *d).cost == 6);
    CHECK(parse_feature(kDeliveryP, *d).cost == 12);
    auto b = bench::blocks_domain();
    CHECK(parse_feature("Num(Exists(on, Exists(Star(on), clear_g)))", *b).cost == 6);
    CHECK(parse_feature("Bool(holding)", *b).kind == FeatureKind::Boolean);
}

TEST_CASE("feature text round trips through the parser") {
    auto d = bench::blocks_domain();
    for (std::string text : {"Bool(holding)", "Num(Exists(on, Exists(Star(on), clear_g)))",
                             "Dist(holding, Inverse(on), Forall(Star(Inverse(on_g)), Not(clear)))",
                             "Num(And(Top, Bot))"}) {
        auto f = parse_feature(text, *d);
        CHECK(f.text == text);
        CHECK(parse_feature(f.text, *d).text == text);
    }
    CHECK(parse_feature("  Num ( Exists( on ,clear ) ) ", *d).text == "Num(Exists(on, clear))");
}

TEST_CASE("feature parser rejects malformed input") {
    auto d = bench::blocks_domain();
    CHECK_THROWS_AS(parse_feature("Num(nosuch)", *d), FeatureError);
    CHECK_THROWS_AS(parse_feature("Num(on)", *d), FeatureError);             // role as concept
    CHECK_THROWS_AS(parse_feature("Num(Exists(clear, on))", *d), FeatureError);  // concept as role
    CHECK_THROWS_AS(parse_feature("Num(clear", *d), FeatureError);
    CHECK_THROWS_AS(parse_feature("Num(clear) x", *d), FeatureError);
    CHECK_THROWS_AS(parse_feature("Exists(on, clear)", *d), FeatureError);
    CHECK_THROWS_AS(parse_feature(": Num(clear)", *d), FeatureError);
    CHECK_THROWS_AS(parse_feature("Num(Foo(clear))", *d), FeatureError);
}

TEST_CASE("pool over blocks states expresses the hand features") {
    auto i3 = bench::make_blocks_clear(3, 1);
    auto i4 = bench::make_blocks_clear(4, 2);
    auto s3 = expand(i3);
    auto s4 = expand(i4);
    auto samples = samples_of(s3, i3);
    auto more = samples_of(s4, i4);
    samples.insert(samples.end(), more.begin(), more.end());
    auto pool = generate_pool(*bench::blocks_domain(), samples, {6, true, 1});
    REQUIRE(!pool.features.empty());
    for (std::string text : {"Bool(holding)", "Num(Exists(on, Exists(Star(on), clear_g)))"}) {
        auto f = parse_feature(text, *bench::blocks_domain());
        std::vector<int> want;
        for (const auto& s : samples) want.push_back(eval(f, *s.state, *s.instance));
        auto hit = std::find(pool.values.begin(), pool.values.end(), want);
        CHECK_MESSAGE(hit != pool.values.end(), text);
        if (hit != pool.values.end()) CHECK(pool.features[static_cast<std::size_t>(hit - pool.values.begin())].cost <= f.cost);
    }
}

TEST_CASE("pool values agree with eval and the oracle") {
    auto inst = bench::make_delivery(2, 2, 1, 4);
    auto sp = expand(inst);
    auto samples = samples_of(sp, inst);
    auto pool = generate_pool(inst.domain(), samples, {7, true, 2});
    REQUIRE(pool.features.size() == pool.values.size());
    REQUIRE(pool.features.size() > 10);
    for (std::size_t f = 0; f < pool.features.size(); ++f) {
        const auto& feat = pool.features[f];
        REQUIRE(pool.values[f].size() == samples.size());
        for (std::size_t i = 0; i < samples.size(); ++i) {
            REQUIRE(pool.values[f][i] == eval(feat, *samples[i].state, inst));
            REQUIRE(pool.values[f][i] == oracle_value(feat, *samples[i].state, inst));
        }
        CHECK(feat.cost <= 7);
        CHECK(feat.cost == expr_cost(*feat.expr));
        CHECK(parse_feature(feat.text, inst.domain()).text == feat.text);
    }
}

TEST_CASE("pool invariants: sorted, distinct, non-constant") {
    auto inst = bench::make_blocks_clear(4, 9);
    auto sp = expand(inst);
    auto samples = samples_of(sp, inst);
    auto pool = generate_pool(inst.domain(), samples, {6, true, 1});
    std::set<std::vector<int>> seen;
    for (std::size_t f = 0; f < pool.features.size(); ++f) {
        CHECK(seen.insert(pool.values[f]).second);
        auto [lo, hi] = std::minmax_element(pool.values[f].begin(), pool.values[f].end());
        CHECK(*lo != *hi);
        if (f > 0) {
            const auto& a = pool.features[f - 1];
            const auto& b = pool.features[f];
            CHECK(std::tie(a.cost, a.text) < std::tie(b.cost, b.text));
        }
        for (int v : pool.values[f]) {
            CHECK(v >= 0);
            if (pool.features[f].kind == FeatureKind::Boolean) CHECK(v <= 1);
        }
    }
}

TEST_CASE("of two features with equal values the cheaper or text-smaller survives") {
    auto inst = bench::make_blocks_clear(3, 2);
    auto sp = expand(inst);
    auto samples = samples_of(sp, inst);
    auto pool = generate_pool(inst.domain(), samples, {3, true, 1});
    auto has = [&](const std::string& t) {
        return std::any_of(pool.features.begin(), pool.features.end(), [&](const Feature& f) { return f.text == t; });
    };
    // holding has at most one element, so Bool and Num coincide.
    CHECK(has("Bool(holding)"));
    CHECK_FALSE(has("Num(holding)"));
    // handempty iff nothing held.
    CHECK(has("Bool(handempty)"));
    CHECK_FALSE(has("Bool(Not(holding))"));
}

TEST_CASE("complexity one yields only primitive Bool/Num features") {
    auto inst = bench::make_delivery(2, 2, 1, 4);
    auto sp = expand(inst);
    auto samples = samples_of(sp, inst);
    auto pool = generate_pool(inst.domain(), samples, {1, true, 1});
    REQUIRE(!pool.features.empty());
    for (const auto& f : pool.features) {
        CHECK(f.cost == 1);
        CHECK(f.expr->kids.size() == 1);
        CHECK(f.expr->kids[0]->op == Op::Prim);
    }
    CHECK(generate_pool(inst.domain(), samples, {0, true, 1}).features.empty());
    CHECK_THROWS_AS(generate_pool(inst.domain(), std::span<const Sample>{}, {}), FeatureError);
}

TEST_CASE("pool growth is monotone in the complexity bound") {
    auto inst = bench::make_blocks_clear(3, 4);
    auto sp = expand(inst);
    auto samples = samples_of(sp, inst);
    std::vector<std::string> prev;
    for (int k = 1; k <= 6; ++k) {
        auto pool = generate_pool(inst.domain(), samples, {k, true, 1});
        std::vector<std::string> cur, prefix;
        for (const auto& f : pool.features) {
            cur.push_back(f.text);
            if (f.cost < k) prefix.push_back(f.text);
        }
        CHECK(prefix == prev);
        CHECK(cur.size() >= prev.size());
        prev = cur;
    }
}

TEST_CASE("pool does not depend on the thread count") {
    auto inst = bench::make_delivery(3, 2, 1, 8);
    auto sp = expand(inst);
    auto samples = samples_of(sp, inst);
    auto a = generate_pool(inst.domain(), samples, {8, true, 1});
    auto b = generate_pool(inst.domain(), samples, {8, true, 3});
    REQUIRE(a.features.size() == b.features.size());
    for (std::size_t i = 0; i < a.features.size(); ++i) {
        CHECK(a.features[i].text == b.features[i].text);
        CHECK(a.features[i].name == b.features[i].name);
    }
    CHECK(a.values == b.values);
}

TEST_CASE("keeping constant features enlarges the pool") {
    auto inst = bench::make_blocks_clear(3, 4);
    auto sp = expand(inst);
    auto samples = samples_of(sp, inst);
    auto pruned = generate_pool(inst.domain(), samples, {4, true, 1});
    auto kept = generate_pool(inst.domain(), samples, {4, false, 1});
    CHECK(kept.features.size() > pruned.features.size());
}

TEST_CASE("feature values are invariant under object renaming") {
    auto orig = bench::make_delivery(3, 2, 2, 21);
    const auto n = static_cast<std::size_t>(orig.num_objects());
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937 rng(5);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<std::string> names(n);
    for (std::size_t i = 0; i < n; ++i) names[static_cast<std::size_t>(perm[i])] = "obj" + std::to_string(i);
    auto map_atom = [&](Atom a) {
        for (auto& x : a.args) x = perm[static_cast<std::size_t>(x)];
        return a;
    };
    std::vector<Atom> init;
    for (const auto& a : orig.init()) init.push_back(map_atom(a));
    std::vector<Literal> goal;
    for (const auto& l : orig.goal()) goal.push_back({map_atom(l.atom), l.positive});
    Instance renamed(orig.domain_ptr(), "renamed", names, init, goal);

    auto sp = expand(orig);
    std::vector<std::string> texts = {"Bool(hold)", "Dist(at_r, adjacent, target)",
                                      "Num(And(Exists(at_g, Top), Not(delivered)))", kDeliveryP};
    for (const auto& s : sp.states) {
        std::vector<int> ids;
        for (int id : s.atoms()) ids.push_back(renamed.atom_id(map_atom(orig.atom(id))));
        State t(ids);
        for (const auto& text : texts) {
            auto f = parse_feature(text, orig.domain());
            REQUIRE(eval(f, s, orig) == eval(f, t, renamed));
        }
    }
}

TEST_CASE("Num is bounded by the object count and Bool is Num positive") {
    auto inst = bench::make_blocks_clear(4, 3);
    auto sp = expand(inst);
    auto samples = samples_of(sp, inst);
    auto pool = generate_pool(inst.domain(), samples, {5, false, 1});
    int checked = 0;
    for (const auto& f : pool.features) {
        if (f.expr->op != Op::Num) continue;
        auto b = make_feature(make_unary(Op::Bool, f.expr->kids[0]), inst.domain());
        for (const auto& s : sp.states) {
            int v = eval(f, s, inst);
            CHECK(v <= inst.num_objects());
            CHECK(eval(b, s, inst) == (v > 0 ? 1 : 0));
        }
        ++checked;
    }
    CHECK(checked > 5);
}

TEST_CASE("pool samples over 64 objects are rejected") {
    auto inst = bench::make_delivery(8, 8, 1, 1);
    std::vector<Sample> s{{&inst, &inst.initial_state()}};
    CHECK_THROWS_AS(generate_pool(inst.domain(), s, {2, true, 1}), FeatureError);
}
