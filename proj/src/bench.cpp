#include "gplan/bench.hpp"

#include "gplan/pddl.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

namespace gplan::bench {

namespace {

std::shared_ptr<const Domain> parse_builtin(const char* text) {
    auto r = pddl::parse_domain(text);
    if (!r.domain) throw pddl::ParseError("<builtin>", r.diagnostics);
    return std::make_shared<const Domain>(std::move(*r.domain));
}

// Uniform draw in [0, bound) that is identical on every platform.
int draw(std::mt19937_64& rng, int bound) {
    const std::uint64_t b = static_cast<std::uint64_t>(bound);
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % b;
    std::uint64_t x = rng();
    while (x >= limit) x = rng();
    return static_cast<int>(x % b);
}

template <class T>
void shuffle(std::vector<T>& v, std::mt19937_64& rng) {
    for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) std::swap(v[static_cast<std::size_t>(i)], v[static_cast<std::size_t>(draw(rng, i + 1))]);
}

int pred(const Domain& d, const char* name) { return *d.find_predicate(name); }

constexpr const char* kDeliveryDomain = R"(
(define (domain delivery)
  (:requirements :strips :negative-preconditions)
  (:predicates (at ?o ?c) (at_r ?c) (adjacent ?c ?d) (hold ?o) (handempty) (target ?c) (delivered ?o))
  (:action pick
    :parameters (?o ?c)
    :precondition (and (at_r ?c) (at ?o ?c) (handempty) (not (delivered ?o)))
    :effect (and (hold ?o) (not (at ?o ?c)) (not (handempty))))
  (:action drop
    :parameters (?o ?c)
    :precondition (and (at_r ?c) (hold ?o) (not (target ?c)))
    :effect (and (at ?o ?c) (handempty) (not (hold ?o))))
  (:action deliver
    :parameters (?o ?c)
    :precondition (and (at_r ?c) (hold ?o) (target ?c))
    :effect (and (at ?o ?c) (delivered ?o) (handempty) (not (hold ?o))))
  (:action move
    :parameters (?c ?d)
    :precondition (and (at_r ?c) (adjacent ?c ?d))
    :effect (and (at_r ?d) (not (at_r ?c)))))
)";

constexpr const char* kBlocksDomain = R"(
(define (domain blocks)
  (:requirements :strips)
  (:predicates (on ?x ?y) (ontable ?x) (clear ?x) (holding ?x) (handempty))
  (:action pick-up
    :parameters (?x)
    :precondition (and (clear ?x) (ontable ?x) (handempty))
    :effect (and (holding ?x) (not (ontable ?x)) (not (clear ?x)) (not (handempty))))
  (:action put-down
    :parameters (?x)
    :precondition (and (holding ?x))
    :effect (and (ontable ?x) (clear ?x) (handempty) (not (holding ?x))))
  (:action stack
    :parameters (?x ?y)
    :precondition (and (holding ?x) (clear ?y))
    :effect (and (on ?x ?y) (clear ?x) (handempty) (not (holding ?x)) (not (clear ?y))))
  (:action unstack
    :parameters (?x ?y)
    :precondition (and (on ?x ?y) (clear ?x) (handempty))
    :effect (and (holding ?x) (clear ?y) (not (on ?x ?y)) (not (clear ?x)) (not (handempty)))))
)";

constexpr const char* kHanoiDomain = R"(
(define (domain hanoi)
  (:requirements :strips :negative-preconditions :equality)
  (:predicates (on ?x ?y) (clear ?x) (larger ?x ?y))
  (:action move
    :parameters (?d ?fr ?to)
    :precondition (and (on ?d ?fr) (clear ?d) (clear ?to) (larger ?to ?d) (not (= ?d ?to)) (not (= ?d ?fr)))
    :effect (and (on ?d ?to) (clear ?fr) (not (on ?d ?fr)) (not (clear ?to)))))
)";

constexpr const char* kGripperDomain = R"(
(define (domain gripper)
  (:requirements :strips)
  (:predicates (room ?r) (ball ?b) (gripper ?g) (at-robby ?r) (at ?b ?r) (free ?g) (carry ?b ?g))
  (:action move
    :parameters (?from ?to)
    :precondition (and (room ?from) (room ?to) (at-robby ?from))
    :effect (and (at-robby ?to) (not (at-robby ?from))))
  (:action pick
    :parameters (?b ?r ?g)
    :precondition (and (ball ?b) (room ?r) (gripper ?g) (at ?b ?r) (at-robby ?r) (free ?g))
    :effect (and (carry ?b ?g) (not (at ?b ?r)) (not (free ?g))))
  (:action drop
    :parameters (?b ?r ?g)
    :precondition (and (ball ?b) (room ?r) (gripper ?g) (carry ?b ?g) (at-robby ?r))
    :effect (and (at ?b ?r) (free ?g) (not (carry ?b ?g)))))
)";

constexpr const char* kCountersDomain = R"(
(define (domain counters)
  (:requirements :strips)
  (:predicates (xv ?n) (yv ?n) (succ ?n ?m))
  (:action incx
    :parameters (?a ?b)
    :precondition (and (xv ?a) (succ ?a ?b))
    :effect (and (xv ?b) (not (xv ?a))))
  (:action incy
    :parameters (?a ?b)
    :precondition (and (yv ?a) (succ ?a ?b))
    :effect (and (yv ?b) (not (yv ?a)))))
)";

}  // namespace

std::shared_ptr<const Domain> delivery_domain() {
    static const auto d = parse_builtin(kDeliveryDomain);
    return d;
}

std::shared_ptr<const Domain> blocks_domain() {
    static const auto d = parse_builtin(kBlocksDomain);
    return d;
}

std::shared_ptr<const Domain> hanoi_domain() {
    static const auto d = parse_builtin(kHanoiDomain);
    return d;
}

std::shared_ptr<const Domain> gripper_domain() {
    static const auto d = parse_builtin(kGripperDomain);
    return d;
}

std::shared_ptr<const Domain> counters_domain() {
    static const auto d = parse_builtin(kCountersDomain);
    return d;
}

Instance make_delivery(int n, int m, int packages, std::uint64_t seed, std::optional<std::pair<int, int>> target) {
    if (n < 1 || m < 1 || packages < 0) throw std::invalid_argument("delivery: bad grid or package count");
    auto [tx, ty] = target.value_or(std::pair{1, 1});
    if (tx < 1 || tx > n || ty < 1 || ty > m) throw std::invalid_argument("delivery: target outside the grid");
    if (packages > n * m - 1) throw std::invalid_argument("delivery: more packages than free cells");
    auto dom = delivery_domain();
    std::vector<std::string> objects;
    auto cell = [&](int x, int y) { return (x - 1) * m + (y - 1); };
    for (int x = 1; x <= n; ++x) {
        for (int y = 1; y <= m; ++y) objects.push_back("c_" + std::to_string(x) + "_" + std::to_string(y));
    }
    const int first_pkg = n * m;
    for (int i = 1; i <= packages; ++i) objects.push_back("p" + std::to_string(i));

    const int at = pred(*dom, "at"), at_r = pred(*dom, "at_r"), adjacent = pred(*dom, "adjacent"),
              handempty = pred(*dom, "handempty"), tgt = pred(*dom, "target");
    std::vector<Atom> init;
    for (int x = 1; x <= n; ++x) {
        for (int y = 1; y <= m; ++y) {
            const int dx[] = {1, -1, 0, 0};
            const int dy[] = {0, 0, 1, -1};
            for (int k = 0; k < 4; ++k) {
                int x2 = x + dx[k], y2 = y + dy[k];
                if (x2 >= 1 && x2 <= n && y2 >= 1 && y2 <= m) init.push_back({adjacent, {cell(x, y), cell(x2, y2)}});
            }
        }
    }
    init.push_back({tgt, {cell(tx, ty)}});
    init.push_back({handempty, {}});

    std::mt19937_64 rng(seed);
    init.push_back({at_r, {draw(rng, n * m)}});
    std::vector<int> free_cells;
    for (int c = 0; c < n * m; ++c) {
        if (c != cell(tx, ty)) free_cells.push_back(c);
    }
    shuffle(free_cells, rng);
    std::vector<Literal> goal;
    for (int i = 0; i < packages; ++i) {
        init.push_back({at, {first_pkg + i, free_cells[static_cast<std::size_t>(i)]}});
        goal.push_back({{at, {first_pkg + i, cell(tx, ty)}}, true});
    }
    std::string name = "delivery-" + std::to_string(n) + "x" + std::to_string(m) + "-" + std::to_string(packages) +
                       "-s" + std::to_string(seed);
    return Instance(dom, name, std::move(objects), std::move(init), std::move(goal));
}

Instance make_blocks_clear(int nblocks, std::uint64_t seed) {
    if (nblocks < 1) throw std::invalid_argument("blocks: need at least one block");
    auto dom = blocks_domain();
    std::vector<std::string> objects;
    for (int i = 1; i <= nblocks; ++i) objects.push_back("b" + std::to_string(i));
    std::mt19937_64 rng(seed);
    std::vector<int> order(static_cast<std::size_t>(nblocks));
    std::iota(order.begin(), order.end(), 0);
    shuffle(order, rng);
    // Random cut points split the permutation into towers (bottom first).
    std::vector<std::vector<int>> towers{{order[0]}};
    for (std::size_t i = 1; i < order.size(); ++i) {
        if (draw(rng, 2) == 0) {
            towers.push_back({order[i]});
        } else {
            towers.back().push_back(order[i]);
        }
    }
    if (nblocks > 1 && std::all_of(towers.begin(), towers.end(), [](const auto& t) { return t.size() == 1; })) {
        towers[0].push_back(towers[1][0]);
        towers.erase(towers.begin() + 1);
    }
    const int on = pred(*dom, "on"), ontable = pred(*dom, "ontable"), clear = pred(*dom, "clear"),
              handempty = pred(*dom, "handempty");
    std::vector<Atom> init;
    std::vector<int> covered;
    for (const auto& t : towers) {
        init.push_back({ontable, {t.front()}});
        for (std::size_t i = 1; i < t.size(); ++i) {
            init.push_back({on, {t[i], t[i - 1]}});
            covered.push_back(t[i - 1]);
        }
        init.push_back({clear, {t.back()}});
    }
    init.push_back({handempty, {}});
    std::sort(covered.begin(), covered.end());
    int x = covered.empty() ? 0 : covered[static_cast<std::size_t>(draw(rng, static_cast<int>(covered.size())))];
    std::vector<Literal> goal{{{clear, {x}}, true}};
    return Instance(dom, "blocks-" + std::to_string(nblocks) + "-s" + std::to_string(seed), std::move(objects),
                    std::move(init), std::move(goal));
}

Instance make_hanoi(int disks, int pegs) {
    if (disks < 1 || pegs < 1) throw std::invalid_argument("hanoi: sizes must be positive");
    auto dom = hanoi_domain();
    std::vector<std::string> objects;
    for (int i = 1; i <= pegs; ++i) objects.push_back("peg" + std::to_string(i));
    for (int i = 1; i <= disks; ++i) objects.push_back("d" + std::to_string(i));
    auto peg = [](int i) { return i - 1; };
    auto disk = [&](int i) { return pegs + i - 1; };
    const int on = pred(*dom, "on"), clear = pred(*dom, "clear"), larger = pred(*dom, "larger");
    std::vector<Atom> init;
    for (int p = 1; p <= pegs; ++p) {
        for (int d = 1; d <= disks; ++d) init.push_back({larger, {peg(p), disk(d)}});
    }
    for (int a = 1; a <= disks; ++a) {
        for (int b = 1; b < a; ++b) init.push_back({larger, {disk(a), disk(b)}});
    }
    auto stack = [&](int base, std::vector<Atom>& atoms) {
        atoms.push_back({on, {disk(disks), base}});
        for (int d = disks - 1; d >= 1; --d) atoms.push_back({on, {disk(d), disk(d + 1)}});
    };
    stack(peg(1), init);
    init.push_back({clear, {disk(1)}});
    for (int p = 2; p <= pegs; ++p) init.push_back({clear, {peg(p)}});
    std::vector<Atom> goal_atoms;
    stack(peg(pegs), goal_atoms);
    std::vector<Literal> goal;
    for (auto& a : goal_atoms) goal.push_back({a, true});
    return Instance(dom, "hanoi-" + std::to_string(disks) + "-" + std::to_string(pegs), std::move(objects),
                    std::move(init), std::move(goal));
}

Instance make_gripper(int balls) {
    if (balls < 1) throw std::invalid_argument("gripper: need at least one ball");
    auto dom = gripper_domain();
    std::vector<std::string> objects{"rooma", "roomb", "left", "right"};
    for (int i = 1; i <= balls; ++i) objects.push_back("ball" + std::to_string(i));
    const int room = pred(*dom, "room"), ball = pred(*dom, "ball"), gripper = pred(*dom, "gripper"),
              at_robby = pred(*dom, "at-robby"), at = pred(*dom, "at"), free = pred(*dom, "free");
    std::vector<Atom> init{{room, {0}}, {room, {1}}, {gripper, {2}}, {gripper, {3}},
                           {at_robby, {0}}, {free, {2}}, {free, {3}}};
    std::vector<Literal> goal;
    for (int i = 0; i < balls; ++i) {
        init.push_back({ball, {4 + i}});
        init.push_back({at, {4 + i, 0}});
        goal.push_back({{at, {4 + i, 1}}, true});
    }
    return Instance(dom, "gripper-" + std::to_string(balls), std::move(objects), std::move(init), std::move(goal));
}

Instance make_two_counters(int levels) {
    if (levels < 1) throw std::invalid_argument("counters: need at least one level");
    auto dom = counters_domain();
    std::vector<std::string> objects;
    for (int i = 0; i < levels; ++i) objects.push_back("n" + std::to_string(i));
    const int xv = pred(*dom, "xv"), yv = pred(*dom, "yv"), succ = pred(*dom, "succ");
    std::vector<Atom> init{{xv, {0}}, {yv, {0}}};
    for (int i = 0; i + 1 < levels; ++i) init.push_back({succ, {i, i + 1}});
    std::vector<Literal> goal{{{xv, {levels - 1}}, true}, {{yv, {levels - 1}}, true}};
    return Instance(dom, "counters-" + std::to_string(levels), std::move(objects), std::move(init), std::move(goal));
}

}  // namespace gplan::bench
