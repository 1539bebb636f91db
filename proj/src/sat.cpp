#include "gplan/sat.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace gplan::sat {

namespace {

double luby(double y, int x) {
    int size = 1;
    int seq = 0;
    while (size < x + 1) {
        ++seq;
        size = 2 * size + 1;
    }
    while (size - 1 != x) {
        size = (size - 1) >> 1;
        --seq;
        x = x % size;
    }
    return std::pow(y, seq);
}

}  // namespace

Solver::Solver() = default;

Var Solver::new_var(bool preferred_phase) {
    Var v = num_vars();
    assigns_.push_back(kUndef);
    phase_.push_back(preferred_phase);
    level_.push_back(0);
    reason_.push_back(kNoReason);
    activity_.push_back(0.0);
    priority_.push_back(0);
    seen_.push_back(0);
    heap_index_.push_back(-1);
    watches_.emplace_back();
    watches_.emplace_back();
    heap_insert(v);
    return v;
}

bool Solver::add_clause(std::span<const Lit> input) {
    if (!ok_) return false;
    cancel_until(0);
    std::vector<Lit> lits(input.begin(), input.end());
    std::sort(lits.begin(), lits.end());
    std::vector<Lit> kept;
    kept.reserve(lits.size());
    Lit prev{-2};
    for (Lit l : lits) {
        assert(l.var() >= 0 && l.var() < num_vars());
        std::int8_t v = lit_value(l);
        if (v == kTrue || l == ~prev) return true;  // satisfied or tautology
        if (v != kFalse && l != prev) {
            kept.push_back(l);
            prev = l;
        }
    }
    if (kept.empty()) {
        ok_ = false;
        return false;
    }
    ++num_original_;
    if (kept.size() == 1) {
        assign(kept[0], kNoReason);
        if (propagate() != kNoReason) ok_ = false;
        return ok_;
    }
    attach_new_clause(std::move(kept), false);
    return true;
}

int Solver::attach_new_clause(std::vector<Lit> lits, bool learnt) {
    int cref;
    if (!free_slots_.empty()) {
        cref = free_slots_.back();
        free_slots_.pop_back();
        clauses_[static_cast<std::size_t>(cref)] = Clause{std::move(lits), 0.0, 0, learnt, false};
    } else {
        cref = static_cast<int>(clauses_.size());
        clauses_.push_back(Clause{std::move(lits), 0.0, 0, learnt, false});
    }
    attach(cref);
    return cref;
}

void Solver::attach(int cref) {
    const Clause& c = clauses_[static_cast<std::size_t>(cref)];
    watches_[static_cast<std::size_t>((~c.lits[0]).code)].push_back({cref, c.lits[1]});
    watches_[static_cast<std::size_t>((~c.lits[1]).code)].push_back({cref, c.lits[0]});
}

void Solver::assign(Lit l, int reason) {
    auto v = static_cast<std::size_t>(l.var());
    assigns_[v] = l.negated() ? kFalse : kTrue;
    level_[v] = decision_level();
    reason_[v] = reason;
    trail_.push_back(l);
}

int Solver::propagate() {
    int confl = kNoReason;
    while (qhead_ < trail_.size()) {
        Lit p = trail_[qhead_++];
        ++stats_.propagations;
        auto& ws = watches_[static_cast<std::size_t>(p.code)];
        std::size_t i = 0;
        std::size_t j = 0;
        Lit false_lit = ~p;
        while (i < ws.size()) {
            Watcher w = ws[i];
            if (lit_value(w.blocker) == kTrue) {
                ws[j++] = ws[i++];
                continue;
            }
            Clause& c = clauses_[static_cast<std::size_t>(w.clause)];
            if (c.lits[0] == false_lit) std::swap(c.lits[0], c.lits[1]);
            ++i;
            Lit first = c.lits[0];
            Watcher nw{w.clause, first};
            if (first != w.blocker && lit_value(first) == kTrue) {
                ws[j++] = nw;
                continue;
            }
            bool found = false;
            for (std::size_t k = 2; k < c.lits.size(); ++k) {
                if (lit_value(c.lits[k]) != kFalse) {
                    std::swap(c.lits[1], c.lits[k]);
                    watches_[static_cast<std::size_t>((~c.lits[1]).code)].push_back(nw);
                    found = true;
                    break;
                }
            }
            if (found) continue;
            ws[j++] = nw;
            if (lit_value(first) == kFalse) {
                confl = w.clause;
                qhead_ = trail_.size();
                while (i < ws.size()) ws[j++] = ws[i++];
            } else {
                assign(first, w.clause);
            }
        }
        ws.resize(j);
        if (confl != kNoReason) break;
    }
    return confl;
}

void Solver::analyze(int confl, std::vector<Lit>& out, int& backtrack_level, int& lbd) {
    int path_count = 0;
    Lit p{-2};
    out.clear();
    out.push_back(Lit{});
    auto index = static_cast<int>(trail_.size()) - 1;
    do {
        Clause& c = clauses_[static_cast<std::size_t>(confl)];
        if (c.learnt) bump_clause(c);
        for (std::size_t k = (p.code == -2 ? 0 : 1); k < c.lits.size(); ++k) {
            Lit q = c.lits[k];
            auto v = static_cast<std::size_t>(q.var());
            if (!seen_[v] && level_[v] > 0) {
                bump_var(q.var());
                seen_[v] = 1;
                if (level_[v] >= decision_level()) {
                    ++path_count;
                } else {
                    out.push_back(q);
                }
            }
        }
        while (!seen_[static_cast<std::size_t>(trail_[static_cast<std::size_t>(index)].var())]) --index;
        p = trail_[static_cast<std::size_t>(index)];
        --index;
        confl = reason_[static_cast<std::size_t>(p.var())];
        seen_[static_cast<std::size_t>(p.var())] = 0;
        --path_count;
    } while (path_count > 0);
    out[0] = ~p;

    // Recursive minimization.
    analyze_toclear_.assign(out.begin(), out.end());
    std::uint32_t abstract_levels = 0;
    for (std::size_t k = 1; k < out.size(); ++k)
        abstract_levels |= 1u << (level_[static_cast<std::size_t>(out[k].var())] & 31);
    std::size_t j = 1;
    for (std::size_t k = 1; k < out.size(); ++k) {
        if (reason_[static_cast<std::size_t>(out[k].var())] == kNoReason ||
            !literal_redundant(out[k], abstract_levels)) {
            out[j++] = out[k];
        }
    }
    out.resize(j);

    backtrack_level = 0;
    if (out.size() > 1) {
        std::size_t max_i = 1;
        for (std::size_t k = 2; k < out.size(); ++k) {
            if (level_[static_cast<std::size_t>(out[k].var())] > level_[static_cast<std::size_t>(out[max_i].var())])
                max_i = k;
        }
        std::swap(out[1], out[max_i]);
        backtrack_level = level_[static_cast<std::size_t>(out[1].var())];
    }
    std::vector<int> levels;
    levels.reserve(out.size());
    for (Lit l : out) levels.push_back(level_[static_cast<std::size_t>(l.var())]);
    std::sort(levels.begin(), levels.end());
    lbd = static_cast<int>(std::unique(levels.begin(), levels.end()) - levels.begin());

    for (Lit l : analyze_toclear_) seen_[static_cast<std::size_t>(l.var())] = 0;
}

bool Solver::literal_redundant(Lit l, std::uint32_t abstract_levels) {
    analyze_stack_.clear();
    analyze_stack_.push_back(l);
    std::size_t top = analyze_toclear_.size();
    while (!analyze_stack_.empty()) {
        Lit cur = analyze_stack_.back();
        analyze_stack_.pop_back();
        const Clause& c = clauses_[static_cast<std::size_t>(reason_[static_cast<std::size_t>(cur.var())])];
        for (std::size_t k = 1; k < c.lits.size(); ++k) {
            Lit q = c.lits[k];
            auto v = static_cast<std::size_t>(q.var());
            if (!seen_[v] && level_[v] > 0) {
                if (reason_[v] != kNoReason && ((1u << (level_[v] & 31)) & abstract_levels) != 0) {
                    seen_[v] = 1;
                    analyze_stack_.push_back(q);
                    analyze_toclear_.push_back(q);
                } else {
                    for (std::size_t t = top; t < analyze_toclear_.size(); ++t)
                        seen_[static_cast<std::size_t>(analyze_toclear_[t].var())] = 0;
                    analyze_toclear_.resize(top);
                    return false;
                }
            }
        }
    }
    return true;
}

void Solver::analyze_final(Lit p) {
    failed_.clear();
    failed_.push_back(p);
    if (decision_level() == 0) return;
    seen_[static_cast<std::size_t>(p.var())] = 1;
    for (auto i = static_cast<int>(trail_.size()) - 1; i >= trail_lim_[0]; --i) {
        Var x = trail_[static_cast<std::size_t>(i)].var();
        auto xs = static_cast<std::size_t>(x);
        if (!seen_[xs]) continue;
        if (reason_[xs] == kNoReason) {
            assert(level_[xs] > 0);
            failed_.push_back(~trail_[static_cast<std::size_t>(i)]);
        } else {
            const Clause& c = clauses_[static_cast<std::size_t>(reason_[xs])];
            for (std::size_t k = 1; k < c.lits.size(); ++k) {
                if (level_[static_cast<std::size_t>(c.lits[k].var())] > 0) seen_[static_cast<std::size_t>(c.lits[k].var())] = 1;
            }
        }
        seen_[xs] = 0;
    }
    seen_[static_cast<std::size_t>(p.var())] = 0;
}

void Solver::cancel_until(int level) {
    if (decision_level() <= level) return;
    for (auto c = static_cast<int>(trail_.size()) - 1; c >= trail_lim_[static_cast<std::size_t>(level)]; --c) {
        Var x = trail_[static_cast<std::size_t>(c)].var();
        auto xs = static_cast<std::size_t>(x);
        phase_[xs] = assigns_[xs] == kTrue;
        assigns_[xs] = kUndef;
        reason_[xs] = kNoReason;
        if (!heap_contains(x)) heap_insert(x);
    }
    trail_.resize(static_cast<std::size_t>(trail_lim_[static_cast<std::size_t>(level)]));
    trail_lim_.resize(static_cast<std::size_t>(level));
    qhead_ = trail_.size();
}

Lit Solver::pick_branch() {
    while (!heap_.empty()) {
        Var v = heap_pop();
        if (assigns_[static_cast<std::size_t>(v)] == kUndef) return Lit::make(v, !phase_[static_cast<std::size_t>(v)]);
    }
    return Lit{-2};
}

void Solver::bump_var(Var v) {
    auto vs = static_cast<std::size_t>(v);
    activity_[vs] += var_inc_;
    if (activity_[vs] > 1e100) {
        for (double& a : activity_) a *= 1e-100;
        var_inc_ *= 1e-100;
    }
    if (heap_contains(v)) heap_up(heap_index_[vs]);
}

void Solver::bump_clause(Clause& c) {
    c.activity += cla_inc_;
    if (c.activity > 1e20) {
        for (int cref : learnts_) clauses_[static_cast<std::size_t>(cref)].activity *= 1e-20;
        cla_inc_ *= 1e-20;
    }
}

void Solver::decay_activities() {
    var_inc_ /= var_decay_;
    cla_inc_ /= cla_decay_;
}

bool Solver::locked(int cref) const {
    const Clause& c = clauses_[static_cast<std::size_t>(cref)];
    auto v = static_cast<std::size_t>(c.lits[0].var());
    return reason_[v] == cref && lit_value(c.lits[0]) == kTrue;
}

void Solver::reduce_db() {
    std::sort(learnts_.begin(), learnts_.end(), [this](int a, int b) {
        const Clause& ca = clauses_[static_cast<std::size_t>(a)];
        const Clause& cb = clauses_[static_cast<std::size_t>(b)];
        if (ca.lbd != cb.lbd) return ca.lbd > cb.lbd;
        return ca.activity < cb.activity;
    });
    std::size_t half = learnts_.size() / 2;
    std::vector<int> kept;
    kept.reserve(learnts_.size());
    for (std::size_t i = 0; i < learnts_.size(); ++i) {
        int cref = learnts_[i];
        Clause& c = clauses_[static_cast<std::size_t>(cref)];
        if (i < half && c.lbd > 2 && c.lits.size() > 2 && !locked(cref)) {
            c.removed = true;
            ++removed_count_;
        } else {
            kept.push_back(cref);
        }
    }
    learnts_ = std::move(kept);
    collect_garbage();
}

void Solver::collect_garbage() {
    for (auto& ws : watches_) {
        std::erase_if(ws, [this](const Watcher& w) { return clauses_[static_cast<std::size_t>(w.clause)].removed; });
    }
    for (std::size_t i = 0; i < clauses_.size(); ++i) {
        Clause& c = clauses_[i];
        if (c.removed && !c.lits.empty()) {
            c.lits.clear();
            c.lits.shrink_to_fit();
            free_slots_.push_back(static_cast<int>(i));
        }
    }
    removed_count_ = 0;
}

Result Solver::solve(std::span<const Lit> assumptions, const Limits& limits) {
    failed_.clear();
    model_.clear();
    if (!ok_) return Result::Unsat;
    assumptions_.assign(assumptions.begin(), assumptions.end());
    if (max_learnts_ < 1.0) max_learnts_ = std::max(2000.0, static_cast<double>(num_original_) / 3.0);

    std::vector<Lit> learnt;
    int restart_index = 0;
    std::int64_t conflicts_total = 0;
    Result result = Result::Unknown;

    while (result == Result::Unknown) {
        auto budget = static_cast<std::int64_t>(luby(2.0, restart_index++) * 100.0);
        std::int64_t conflicts_here = 0;
        for (;;) {
            int confl = propagate();
            if (confl != kNoReason) {
                ++stats_.conflicts;
                ++conflicts_here;
                ++conflicts_total;
                if (decision_level() == 0) {
                    ok_ = false;
                    result = Result::Unsat;
                    break;
                }
                int bt = 0;
                int lbd = 0;
                analyze(confl, learnt, bt, lbd);
                cancel_until(bt);
                if (learnt.size() == 1) {
                    assign(learnt[0], kNoReason);
                } else {
                    int cref = attach_new_clause(learnt, true);
                    clauses_[static_cast<std::size_t>(cref)].lbd = lbd;
                    bump_clause(clauses_[static_cast<std::size_t>(cref)]);
                    learnts_.push_back(cref);
                    assign(learnt[0], cref);
                }
                decay_activities();
                continue;
            }
            bool stop_budget = limits.conflicts >= 0 && conflicts_total >= limits.conflicts;
            if (!stop_budget && limits.deadline && (stats_.conflicts & 255) == 0 &&
                std::chrono::steady_clock::now() > *limits.deadline) {
                stop_budget = true;
            }
            if (stop_budget) {
                cancel_until(0);
                return Result::Unknown;
            }
            if (conflicts_here >= budget) {
                ++stats_.restarts;
                cancel_until(0);
                break;
            }
            if (static_cast<double>(learnts_.size()) - static_cast<double>(trail_.size()) >= max_learnts_) {
                reduce_db();
                max_learnts_ *= 1.1;
            }
            Lit next{-2};
            while (decision_level() < static_cast<int>(assumptions_.size())) {
                Lit a = assumptions_[static_cast<std::size_t>(decision_level())];
                if (lit_value(a) == kTrue) {
                    trail_lim_.push_back(static_cast<int>(trail_.size()));
                } else if (lit_value(a) == kFalse) {
                    analyze_final(~a);
                    cancel_until(0);
                    return Result::Unsat;
                } else {
                    next = a;
                    break;
                }
            }
            if (next.code == -2) {
                ++stats_.decisions;
                next = pick_branch();
                if (next.code == -2) {
                    model_ = assigns_;
                    cancel_until(0);
                    return Result::Sat;
                }
            }
            trail_lim_.push_back(static_cast<int>(trail_.size()));
            assign(next, kNoReason);
        }
    }
    cancel_until(0);
    return result;
}

bool Solver::before(Var a, Var b) const {
    auto ia = static_cast<std::size_t>(a);
    auto ib = static_cast<std::size_t>(b);
    if (priority_[ia] != priority_[ib]) return priority_[ia] > priority_[ib];
    return activity_[ia] > activity_[ib];
}

void Solver::set_priority(Var v, int priority) {
    priority_[static_cast<std::size_t>(v)] = priority;
    if (heap_contains(v)) {
        heap_up(heap_index_[static_cast<std::size_t>(v)]);
        heap_down(heap_index_[static_cast<std::size_t>(v)]);
    }
}

void Solver::heap_insert(Var v) {
    heap_index_[static_cast<std::size_t>(v)] = static_cast<int>(heap_.size());
    heap_.push_back(v);
    heap_up(static_cast<int>(heap_.size()) - 1);
}

void Solver::heap_up(int pos) {
    Var v = heap_[static_cast<std::size_t>(pos)];
    while (pos > 0) {
        int parent = (pos - 1) >> 1;
        Var pv = heap_[static_cast<std::size_t>(parent)];
        if (!before(v, pv)) break;
        heap_[static_cast<std::size_t>(pos)] = pv;
        heap_index_[static_cast<std::size_t>(pv)] = pos;
        pos = parent;
    }
    heap_[static_cast<std::size_t>(pos)] = v;
    heap_index_[static_cast<std::size_t>(v)] = pos;
}

void Solver::heap_down(int pos) {
    Var v = heap_[static_cast<std::size_t>(pos)];
    auto n = static_cast<int>(heap_.size());
    for (;;) {
        int child = 2 * pos + 1;
        if (child >= n) break;
        if (child + 1 < n && before(heap_[static_cast<std::size_t>(child + 1)], heap_[static_cast<std::size_t>(child)]))
            ++child;
        Var cv = heap_[static_cast<std::size_t>(child)];
        if (!before(cv, v)) break;
        heap_[static_cast<std::size_t>(pos)] = cv;
        heap_index_[static_cast<std::size_t>(cv)] = pos;
        pos = child;
    }
    heap_[static_cast<std::size_t>(pos)] = v;
    heap_index_[static_cast<std::size_t>(v)] = pos;
}

Var Solver::heap_pop() {
    Var top = heap_[0];
    Var last = heap_.back();
    heap_.pop_back();
    heap_index_[static_cast<std::size_t>(top)] = -1;
    if (!heap_.empty()) {
        heap_[0] = last;
        heap_index_[static_cast<std::size_t>(last)] = 0;
        heap_down(0);
    }
    return top;
}

}  // namespace gplan::sat
