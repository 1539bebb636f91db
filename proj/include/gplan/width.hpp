#pragma once

// IW(k) novelty search, width ladders and sketch-serialized SIW.

#include "gplan/policy.hpp"
#include "gplan/strips.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

namespace gplan {

// Tuples of up to k fluent atoms seen so far. Static atoms never enter.
class NoveltyTable {
public:
    NoveltyTable(int k, const Instance& instance);

    // Registers every tuple of the state's fluent atoms of size <= k and
    // reports whether at least one was new.
    bool insert(const State& s);
    [[nodiscard]] int k() const { return k_; }

private:
    int k_;
    std::size_t n_;
    std::vector<char> fluent_;
    std::vector<char> singles_;
    std::vector<bool> pairs_;  // dense n*n when small enough
    std::unordered_set<std::string> tuples_;
};

using StopFn = std::function<bool(const State&)>;

struct IwResult {
    bool found = false;
    std::vector<std::size_t> plan;  // ground action indices
    State end;                      // last state of the plan
    std::size_t generated = 0;
    std::size_t expanded = 0;
    bool budget_exhausted = false;
};

// Breadth-first from `start` in ground-action order. Generated states are
// tested against `stop` before novelty pruning; `start` is tested first.
IwResult iw(const Instance& instance, std::span<const GroundAction> actions, const State& start, int k,
            const StopFn& stop, std::size_t node_budget = 10'000'000);
IwResult iw(const Instance& instance, int k, const StopFn& stop);

struct WidthResult {
    std::optional<int> width;  // nullopt when no k <= k_max succeeds
    IwResult search;           // the successful (or last) IW run
};

// Least k <= k_max for which IW(k) reaches a stop state. A stop state at
// the start gives width 1 with an empty plan.
WidthResult width(const Instance& instance, std::span<const GroundAction> actions, const State& start,
                  const StopFn& stop, int k_max);
WidthResult width(const Instance& instance, const StopFn& stop, int k_max);

struct SiwLimits {
    int k_max = 2;
    std::size_t max_segments = 1'000'000;
    std::size_t node_budget = 1'000'000;  // generated states over the whole run
};

struct Segment {
    int width = 0;
    std::size_t length = 0;
};

struct SiwResult {
    bool solved = false;
    std::vector<std::string> plan;  // ground action names
    std::vector<Segment> segments;
    std::size_t generated = 0;
    std::string failure;
};

// Repeatedly runs the width ladder from the current state until a state is
// reached that is a goal or, relative to the segment start, satisfies some
// sketch rule; the segment start itself only counts when it is a goal. An
// empty sketch gives plain SIW with goal-only stops. Fails on a segment
// without success at any k <= k_max, on a revisited segment start, and on
// exhausted limits.
SiwResult siw_r(const Instance& instance, const Policy& sketch, const SiwLimits& limits = {});

}  // namespace gplan
