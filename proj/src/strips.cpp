#include "gplan/strips.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace gplan {

namespace {

void sort_unique(std::vector<int>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
}

template <class T>
void dedupe_stable(std::vector<T>& v) {
    std::vector<T> out;
    for (auto& x : v) {
        if (std::find(out.begin(), out.end(), x) == out.end()) out.push_back(x);
    }
    v = std::move(out);
}

bool sorted_subset(const std::vector<int>& sub, const std::vector<int>& super) {
    return std::includes(super.begin(), super.end(), sub.begin(), sub.end());
}

bool sorted_disjoint(const std::vector<int>& a, const std::vector<int>& b) {
    auto i = a.begin();
    auto j = b.begin();
    while (i != a.end() && j != b.end()) {
        if (*i < *j) {
            ++i;
        } else if (*j < *i) {
            ++j;
        } else {
            return false;
        }
    }
    return true;
}

}  // namespace

Domain::Domain(std::string name, std::vector<Predicate> predicates, std::vector<ActionSchema> schemas,
               std::optional<std::set<std::string>> static_override)
    : name_(std::move(name)), predicates_(std::move(predicates)), schemas_(std::move(schemas)) {
    for (std::size_t i = 0; i < predicates_.size(); ++i) {
        const auto& p = predicates_[i];
        if (p.arity < 0) throw ValidationError("predicate '" + p.name + "' has negative arity");
        for (std::size_t j = 0; j < i; ++j) {
            if (predicates_[j].name == p.name) throw ValidationError("duplicate predicate '" + p.name + "'");
        }
        if (p.name == kEquality) {
            if (p.arity != 2) throw ValidationError("equality must be binary");
            equality_ = static_cast<int>(i);
        }
    }
    for (std::size_t i = 0; i < schemas_.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            if (schemas_[j].name == schemas_[i].name)
                throw ValidationError("duplicate action schema '" + schemas_[i].name + "'");
        }
    }

    const int np = static_cast<int>(predicates_.size());
    auto check_literal = [&](const ActionSchema& s, const Literal& l) {
        if (l.atom.predicate < 0 || l.atom.predicate >= np)
            throw ValidationError("schema '" + s.name + "' references an undeclared predicate");
        const auto& p = predicates_[static_cast<std::size_t>(l.atom.predicate)];
        if (static_cast<int>(l.atom.args.size()) != p.arity)
            throw ValidationError("schema '" + s.name + "': arity mismatch for '" + p.name + "'");
        for (int a : l.atom.args) {
            if (a < 0 || a >= s.arity())
                throw ValidationError("schema '" + s.name + "': argument of '" + p.name + "' is not a parameter");
        }
    };

    std::vector<bool> in_effect(predicates_.size(), false);
    for (auto& s : schemas_) {
        for (std::size_t i = 0; i < s.params.size(); ++i) {
            for (std::size_t j = 0; j < i; ++j) {
                if (s.params[i] == s.params[j])
                    throw ValidationError("schema '" + s.name + "' repeats parameter '" + s.params[i] + "'");
            }
        }
        for (const auto& l : s.static_pre) check_literal(s, l);
        for (const auto& l : s.pre) check_literal(s, l);
        for (const auto& l : s.eff) check_literal(s, l);
        if (s.eff.empty()) throw ValidationError("schema '" + s.name + "' has no effects");
        for (const auto& l : s.eff) {
            if (l.atom.predicate == equality_) throw ValidationError("schema '" + s.name + "' changes equality");
            in_effect[static_cast<std::size_t>(l.atom.predicate)] = true;
            for (const auto& m : s.eff) {
                if (m.atom == l.atom && m.positive != l.positive)
                    throw ValidationError("schema '" + s.name + "' both adds and deletes an atom");
            }
        }
    }

    for (std::size_t i = 0; i < predicates_.size(); ++i) {
        auto& p = predicates_[i];
        bool is_static = static_override ? static_override->count(p.name) > 0 : !in_effect[i];
        if (static_cast<int>(i) == equality_) is_static = true;
        if (is_static && in_effect[i])
            throw ValidationError("predicate '" + p.name + "' is declared static but appears in an effect");
        p.kind = is_static ? PredicateKind::Static : PredicateKind::Fluent;
    }

    for (auto& s : schemas_) {
        std::vector<Literal> fluent_pre;
        std::vector<Literal> static_pre = s.static_pre;
        for (auto& l : s.pre) {
            if (is_static(l.atom.predicate)) {
                static_pre.push_back(l);
            } else {
                fluent_pre.push_back(l);
            }
        }
        for (const auto& l : static_pre) {
            if (!is_static(l.atom.predicate))
                throw ValidationError("schema '" + s.name + "' lists a fluent atom among its static preconditions");
        }
        dedupe_stable(static_pre);
        dedupe_stable(fluent_pre);
        dedupe_stable(s.eff);
        s.static_pre = std::move(static_pre);
        s.pre = std::move(fluent_pre);
    }
}

std::optional<int> Domain::find_predicate(const std::string& name) const {
    for (std::size_t i = 0; i < predicates_.size(); ++i) {
        if (predicates_[i].name == name) return static_cast<int>(i);
    }
    return std::nullopt;
}

std::optional<int> Domain::find_schema(const std::string& name) const {
    for (std::size_t i = 0; i < schemas_.size(); ++i) {
        if (schemas_[i].name == name) return static_cast<int>(i);
    }
    return std::nullopt;
}

State::State(std::vector<int> atoms) : atoms_(std::move(atoms)) { sort_unique(atoms_); }

bool State::contains(int atom) const { return std::binary_search(atoms_.begin(), atoms_.end(), atom); }

std::size_t StateHash::operator()(const State& s) const noexcept {
    std::uint64_t h = 1469598103934665603ull;
    for (int a : s.atoms()) {
        h ^= static_cast<std::uint64_t>(a) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        h *= 1099511628211ull;
    }
    return static_cast<std::size_t>(h);
}

Instance::Instance(std::shared_ptr<const Domain> domain, std::string name, std::vector<std::string> objects,
                   std::vector<Atom> init, std::vector<Literal> goal)
    : domain_(std::move(domain)),
      name_(std::move(name)),
      objects_(std::move(objects)),
      init_(std::move(init)),
      goal_(std::move(goal)) {
    if (!domain_) throw ValidationError("instance without a domain");
    for (std::size_t i = 0; i < objects_.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            if (objects_[i] == objects_[j]) throw ValidationError("duplicate object '" + objects_[i] + "'");
        }
    }
    const auto& preds = domain_->predicates();
    const auto n = static_cast<std::size_t>(objects_.size());
    constexpr std::size_t kMaxAtoms = std::numeric_limits<int>::max();
    offsets_.reserve(preds.size());
    for (const auto& p : preds) {
        offsets_.push_back(total_atoms_);
        std::size_t count = 1;
        for (int k = 0; k < p.arity; ++k) {
            if (n != 0 && count > kMaxAtoms / n) throw ValidationError("instance too large to index its atoms");
            count *= n;
        }
        total_atoms_ += count;
        if (total_atoms_ > kMaxAtoms) throw ValidationError("instance too large to index its atoms");
    }

    auto check_atom = [&](const Atom& a, const char* where) {
        if (a.predicate < 0 || a.predicate >= static_cast<int>(preds.size()))
            throw ValidationError(std::string(where) + " references an undeclared predicate");
        const auto& p = preds[static_cast<std::size_t>(a.predicate)];
        if (static_cast<int>(a.args.size()) != p.arity)
            throw ValidationError(std::string(where) + ": arity mismatch for '" + p.name + "'");
        for (int o : a.args) {
            if (o < 0 || o >= num_objects())
                throw ValidationError(std::string(where) + ": unknown object in '" + p.name + "'");
        }
    };

    std::vector<int> fluents;
    for (const auto& a : init_) {
        check_atom(a, "init");
        if (domain_->is_equality(a.predicate)) throw ValidationError("init may not list equality atoms");
        int id = atom_id(a);
        if (domain_->is_static(a.predicate)) {
            static_true_.push_back(id);
        } else {
            fluents.push_back(id);
        }
    }
    sort_unique(static_true_);
    init_state_ = State(std::move(fluents));

    for (const auto& l : goal_) {
        check_atom(l.atom, "goal");
        if (domain_->is_static(l.atom.predicate))
            throw ValidationError("goal mentions static predicate '" + preds[static_cast<std::size_t>(l.atom.predicate)].name + "'");
        (l.positive ? goal_pos_ : goal_neg_).push_back(atom_id(l.atom));
    }
    sort_unique(goal_pos_);
    sort_unique(goal_neg_);
    if (!sorted_disjoint(goal_pos_, goal_neg_)) throw ValidationError("goal is contradictory");
}

std::optional<int> Instance::find_object(const std::string& name) const {
    for (std::size_t i = 0; i < objects_.size(); ++i) {
        if (objects_[i] == name) return static_cast<int>(i);
    }
    return std::nullopt;
}

int Instance::atom_id(const Atom& a) const {
    std::size_t id = 0;
    const auto n = static_cast<std::size_t>(objects_.size());
    for (int o : a.args) id = id * n + static_cast<std::size_t>(o);
    return static_cast<int>(offsets_.at(static_cast<std::size_t>(a.predicate)) + id);
}

Atom Instance::atom(int id) const {
    auto uid = static_cast<std::size_t>(id);
    auto it = std::upper_bound(offsets_.begin(), offsets_.end(), uid);
    // Predicates with zero ground atoms share offsets; pick the last one whose range contains id.
    auto p = static_cast<int>(std::distance(offsets_.begin(), it)) - 1;
    Atom a;
    a.predicate = p;
    std::size_t rest = uid - offsets_[static_cast<std::size_t>(p)];
    const int arity = domain_->predicate(p).arity;
    a.args.assign(static_cast<std::size_t>(arity), 0);
    const auto n = static_cast<std::size_t>(objects_.size());
    for (int k = arity - 1; k >= 0; --k) {
        a.args[static_cast<std::size_t>(k)] = static_cast<int>(rest % n);
        rest /= n;
    }
    return a;
}

std::string Instance::atom_name(int id) const {
    Atom a = atom(id);
    std::string s = "(" + domain_->predicate(a.predicate).name;
    for (int o : a.args) s += " " + objects_[static_cast<std::size_t>(o)];
    return s + ")";
}

bool Instance::is_fluent_atom(int id) const { return !domain_->is_static(atom(id).predicate); }

bool Instance::static_holds(const Atom& a) const {
    if (domain_->is_equality(a.predicate)) return a.args[0] == a.args[1];
    return std::binary_search(static_true_.begin(), static_true_.end(), atom_id(a));
}

bool Instance::is_goal(const State& s) const {
    return sorted_subset(goal_pos_, s.atoms()) && sorted_disjoint(goal_neg_, s.atoms());
}

std::string Instance::action_name(const GroundAction& a) const {
    std::string s = "(" + domain_->schemas()[static_cast<std::size_t>(a.schema)].name;
    for (int o : a.args) s += " " + objects_[static_cast<std::size_t>(o)];
    return s + ")";
}

bool operator==(const Instance& a, const Instance& b) {
    return *a.domain_ == *b.domain_ && a.name_ == b.name_ && a.objects_ == b.objects_ && a.init_ == b.init_ &&
           a.goal_ == b.goal_;
}

std::vector<GroundAction> ground(const Instance& instance) {
    const Domain& dom = instance.domain();
    const int n = instance.num_objects();

    std::vector<int> by_name(static_cast<std::size_t>(n));
    std::iota(by_name.begin(), by_name.end(), 0);
    std::sort(by_name.begin(), by_name.end(), [&](int a, int b) {
        return instance.objects()[static_cast<std::size_t>(a)] < instance.objects()[static_cast<std::size_t>(b)];
    });

    std::vector<int> schema_order(dom.schemas().size());
    std::iota(schema_order.begin(), schema_order.end(), 0);
    std::sort(schema_order.begin(), schema_order.end(), [&](int a, int b) {
        return dom.schemas()[static_cast<std::size_t>(a)].name < dom.schemas()[static_cast<std::size_t>(b)].name;
    });

    std::vector<GroundAction> out;
    for (int si : schema_order) {
        const auto& schema = dom.schemas()[static_cast<std::size_t>(si)];
        const int arity = schema.arity();
        // Static literals are checked as soon as their last parameter is bound.
        std::vector<std::vector<const Literal*>> check_at(static_cast<std::size_t>(arity) + 1);
        for (const auto& l : schema.static_pre) {
            int last = -1;
            for (int a : l.atom.args) last = std::max(last, a);
            check_at[static_cast<std::size_t>(last + 1)].push_back(&l);
        }
        auto holds = [&](const Literal& l, const std::vector<int>& binding) {
            Atom g{l.atom.predicate, {}};
            for (int a : l.atom.args) g.args.push_back(binding[static_cast<std::size_t>(a)]);
            return instance.static_holds(g) == l.positive;
        };
        auto ground_ids = [&](const std::vector<Literal>& lits, bool positive, const std::vector<int>& binding) {
            std::vector<int> ids;
            for (const auto& l : lits) {
                if (l.positive != positive) continue;
                Atom g{l.atom.predicate, {}};
                for (int a : l.atom.args) g.args.push_back(binding[static_cast<std::size_t>(a)]);
                ids.push_back(instance.atom_id(g));
            }
            sort_unique(ids);
            return ids;
        };

        std::vector<int> binding(static_cast<std::size_t>(arity), 0);
        for (const Literal* l : check_at[0]) {
            if (!holds(*l, binding)) goto next_schema;
        }
        if (arity > 0 && n == 0) continue;
        {
            auto emit = [&] {
                GroundAction g;
                g.schema = si;
                g.args = binding;
                g.pre_pos = ground_ids(schema.pre, true, binding);
                g.pre_neg = ground_ids(schema.pre, false, binding);
                g.add = ground_ids(schema.eff, true, binding);
                std::vector<int> del = ground_ids(schema.eff, false, binding);
                std::vector<int> del_only;
                std::set_difference(del.begin(), del.end(), g.add.begin(), g.add.end(), std::back_inserter(del_only));
                g.del = std::move(del_only);
                out.push_back(std::move(g));
            };
            if (arity == 0) {
                emit();
                continue;
            }
            std::vector<int> pos(static_cast<std::size_t>(arity), 0);
            int depth = 0;
            while (depth >= 0) {
                auto d = static_cast<std::size_t>(depth);
                if (pos[d] == n) {
                    pos[d] = 0;
                    --depth;
                    if (depth >= 0) ++pos[static_cast<std::size_t>(depth)];
                    continue;
                }
                binding[d] = by_name[static_cast<std::size_t>(pos[d])];
                bool ok = true;
                for (const Literal* l : check_at[d + 1]) {
                    if (!holds(*l, binding)) {
                        ok = false;
                        break;
                    }
                }
                if (!ok) {
                    ++pos[d];
                } else if (depth + 1 == arity) {
                    emit();
                    ++pos[d];
                } else {
                    ++depth;
                }
            }
        }
    next_schema:;
    }
    return out;
}

bool is_applicable(const State& state, const GroundAction& action) {
    return sorted_subset(action.pre_pos, state.atoms()) && sorted_disjoint(action.pre_neg, state.atoms());
}

std::vector<std::size_t> applicable(const State& state, std::span<const GroundAction> actions) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < actions.size(); ++i) {
        if (is_applicable(state, actions[i])) out.push_back(i);
    }
    return out;
}

State apply(const State& state, const GroundAction& action) {
    if (!is_applicable(state, action)) throw ContractViolation("apply: action is not applicable in state");
    std::vector<int> kept;
    kept.reserve(state.size() + action.add.size());
    std::set_difference(state.atoms().begin(), state.atoms().end(), action.del.begin(), action.del.end(),
                        std::back_inserter(kept));
    std::vector<int> merged;
    merged.reserve(kept.size() + action.add.size());
    std::set_union(kept.begin(), kept.end(), action.add.begin(), action.add.end(), std::back_inserter(merged));
    return State(std::move(merged));
}

}  // namespace gplan
