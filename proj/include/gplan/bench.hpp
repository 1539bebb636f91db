#pragma once

// Parameterized instance generators. Domains are shared singletons; random
// placements depend only on the seed (no std distributions involved).

#include "gplan/strips.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <utility>

namespace gplan::bench {

// Cells are objects "c_<x>_<y>" (1-based); packages "p<i>". Predicates:
// at(o,c) at_r(c) adjacent(c,c') hold(o) handempty target(c) delivered(o).
// Schemas pick, drop (off target only), deliver (on target only), move.
std::shared_ptr<const Domain> delivery_domain();

// Grid of n columns by m rows; goal: every package at the target cell,
// default (1,1). Packages start on distinct non-target cells.
// Throws std::invalid_argument when packages exceed the free cells.
Instance make_delivery(int n, int m, int packages, std::uint64_t seed,
                       std::optional<std::pair<int, int>> target = std::nullopt);

// 4-operator Blocksworld; goal clear(x) for a block x that starts covered
// whenever more than one block exists.
std::shared_ptr<const Domain> blocks_domain();
Instance make_blocks_clear(int nblocks, std::uint64_t seed);

// Disks "d1" (smallest) .. "dn", pegs "peg1" .. "pegk"; move(d,fr,to) with
// static larger and inequality. Tower starts on the first peg, goal on the last.
std::shared_ptr<const Domain> hanoi_domain();
Instance make_hanoi(int disks, int pegs = 3);

std::shared_ptr<const Domain> gripper_domain();
Instance make_gripper(int balls);

// Two independent counters over levels 0..levels-1 with goal (max, max).
// Width 2 for levels >= 3.
std::shared_ptr<const Domain> counters_domain();
Instance make_two_counters(int levels);

}  // namespace gplan::bench
