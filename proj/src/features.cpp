#include "gplan/features.hpp"

#include "gplan/parallel.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <map>
#include <unordered_map>
#include <unordered_set>

namespace gplan {

namespace {

ExprPtr node(Op op, std::vector<ExprPtr> kids = {}, int pred = -1, bool goal = false) {
    auto e = std::make_shared<Expr>();
    e->op = op;
    e->kids = std::move(kids);
    e->predicate = pred;
    e->goal = goal;
    return e;
}

bool is_concept(const Expr& e) {
    switch (e.op) {
        case Op::Top:
        case Op::Bot:
        case Op::Prim:
        case Op::Not:
        case Op::And:
        case Op::Exists:
        case Op::Forall:
            return true;
        default:
            return false;
    }
}

void require(bool ok, const char* what) {
    if (!ok) throw FeatureError(what);
}

}  // namespace

ExprPtr make_top() { return node(Op::Top); }
ExprPtr make_bot() { return node(Op::Bot); }

ExprPtr make_prim(const Domain& domain, const std::string& pred, bool goal) {
    auto p = domain.find_predicate(pred);
    if (!p) throw FeatureError("unknown predicate '" + pred + "'");
    if (domain.predicate(*p).arity > 1) throw FeatureError("predicate '" + pred + "' is not a concept");
    if (goal && domain.is_static(*p)) throw FeatureError("static predicate '" + pred + "' has no goal version");
    return node(Op::Prim, {}, *p, goal);
}

ExprPtr make_role(const Domain& domain, const std::string& pred, bool goal) {
    auto p = domain.find_predicate(pred);
    if (!p) throw FeatureError("unknown predicate '" + pred + "'");
    if (domain.predicate(*p).arity != 2 || domain.is_equality(*p))
        throw FeatureError("predicate '" + pred + "' is not a role");
    if (goal && domain.is_static(*p)) throw FeatureError("static predicate '" + pred + "' has no goal version");
    return node(Op::RolePrim, {}, *p, goal);
}

ExprPtr make_unary(Op op, ExprPtr kid) {
    switch (op) {
        case Op::Not:
        case Op::Bool:
        case Op::Num:
            require(is_concept(*kid), "expected a concept argument");
            break;
        case Op::Inverse:
        case Op::Star:
            require(is_role(*kid), "expected a role argument");
            break;
        default:
            throw FeatureError("not a unary constructor");
    }
    return node(op, {std::move(kid)});
}

ExprPtr make_binary(Op op, ExprPtr a, ExprPtr b) {
    switch (op) {
        case Op::And:
            require(is_concept(*a) && is_concept(*b), "And expects two concepts");
            break;
        case Op::Exists:
        case Op::Forall:
            require(is_role(*a) && is_concept(*b), "Exists/Forall expect a role and a concept");
            break;
        default:
            throw FeatureError("not a binary constructor");
    }
    return node(op, {std::move(a), std::move(b)});
}

ExprPtr make_dist(ExprPtr from, ExprPtr role, ExprPtr to) {
    require(is_concept(*from) && is_role(*role) && is_concept(*to), "Dist expects concept, role, concept");
    return node(Op::Dist, {std::move(from), std::move(role), std::move(to)});
}

bool is_role(const Expr& e) { return e.op == Op::RolePrim || e.op == Op::Inverse || e.op == Op::Star; }

int expr_cost(const Expr& e) {
    int c = 0;
    for (const auto& k : e.kids) c += expr_cost(*k);
    switch (e.op) {
        case Op::Bool:
        case Op::Num:
            return c;
        default:
            return c + 1;
    }
}

std::string to_string(const Expr& e, const Domain& d) {
    auto call = [&](const char* name) {
        std::string s = std::string(name) + "(";
        for (std::size_t i = 0; i < e.kids.size(); ++i) s += (i ? ", " : "") + to_string(*e.kids[i], d);
        return s + ")";
    };
    switch (e.op) {
        case Op::Top:
            return "Top";
        case Op::Bot:
            return "Bot";
        case Op::Prim:
        case Op::RolePrim:
            return d.predicate(e.predicate).name + (e.goal ? "_g" : "");
        case Op::Not:
            return call("Not");
        case Op::And:
            return call("And");
        case Op::Exists:
            return call("Exists");
        case Op::Forall:
            return call("Forall");
        case Op::Inverse:
            return call("Inverse");
        case Op::Star:
            return call("Star");
        case Op::Bool:
            return call("Bool");
        case Op::Num:
            return call("Num");
        case Op::Dist:
            return call("Dist");
    }
    return {};
}

namespace {

class ExprParser {
public:
    ExprParser(std::string_view text, const Domain& d) : text_(text), d_(d) {}

    ExprPtr feature() {
        std::string head = ident();
        expect('(');
        ExprPtr out;
        if (head == "Bool" || head == "Num") {
            out = make_unary(head == "Bool" ? Op::Bool : Op::Num, concept_expr());
        } else if (head == "Dist") {
            auto a = concept_expr();
            expect(',');
            auto r = role_expr();
            expect(',');
            auto b = concept_expr();
            out = make_dist(a, r, b);
        } else {
            fail("expected Bool, Num or Dist");
        }
        expect(')');
        skip();
        if (pos_ != text_.size()) fail("trailing text");
        return out;
    }

private:
    std::string_view text_;
    const Domain& d_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& msg) {
        throw FeatureError("feature syntax: " + msg + " at offset " + std::to_string(pos_) + " in '" +
                           std::string(text_) + "'");
    }
    void skip() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }
    void expect(char c) {
        skip();
        if (pos_ >= text_.size() || text_[pos_] != c) fail(std::string("expected '") + c + "'");
        ++pos_;
    }
    bool peek(char c) {
        skip();
        return pos_ < text_.size() && text_[pos_] == c;
    }
    std::string ident() {
        skip();
        std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_' || text_[pos_] == '-'))
            ++pos_;
        if (start == pos_) fail("expected an identifier");
        return std::string(text_.substr(start, pos_ - start));
    }

    // Exact predicate name first, then the "_g" goal form.
    std::pair<std::string, bool> resolve(const std::string& name) {
        std::string lower = name;
        for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        if (d_.find_predicate(lower)) return {lower, false};
        if (lower.size() > 2 && lower.ends_with("_g") && d_.find_predicate(lower.substr(0, lower.size() - 2)))
            return {lower.substr(0, lower.size() - 2), true};
        fail("unknown predicate '" + name + "'");
    }

    ExprPtr concept_expr() {
        std::string head = ident();
        if (head == "Top") return make_top();
        if (head == "Bot") return make_bot();
        if (head == "Not" || head == "And" || head == "Exists" || head == "Forall") {
            expect('(');
            ExprPtr out;
            if (head == "Not") {
                out = make_unary(Op::Not, concept_expr());
            } else if (head == "And") {
                auto a = concept_expr();
                expect(',');
                out = make_binary(Op::And, a, concept_expr());
            } else {
                auto r = role_expr();
                expect(',');
                out = make_binary(head == "Exists" ? Op::Exists : Op::Forall, r, concept_expr());
            }
            expect(')');
            return out;
        }
        if (peek('(')) fail("unknown concept constructor '" + head + "'");
        auto [pred, goal] = resolve(head);
        return make_prim(d_, pred, goal);
    }

    ExprPtr role_expr() {
        std::string head = ident();
        if (head == "Inverse" || head == "Star") {
            expect('(');
            auto out = make_unary(head == "Inverse" ? Op::Inverse : Op::Star, role_expr());
            expect(')');
            return out;
        }
        if (peek('(')) fail("unknown role constructor '" + head + "'");
        auto [pred, goal] = resolve(head);
        return make_role(d_, pred, goal);
    }
};

}  // namespace

Feature make_feature(ExprPtr expr, const Domain& domain, std::string name) {
    if (expr->op != Op::Bool && expr->op != Op::Num && expr->op != Op::Dist)
        throw FeatureError("a feature must be Bool, Num or Dist");
    Feature f;
    f.name = std::move(name);
    f.kind = expr->op == Op::Bool ? FeatureKind::Boolean : FeatureKind::Numeric;
    f.cost = expr_cost(*expr);
    f.text = to_string(*expr, domain);
    f.expr = std::move(expr);
    return f;
}

Feature parse_feature(std::string_view text, const Domain& domain, std::string default_name) {
    std::string name = std::move(default_name);
    if (auto colon = text.find(':'); colon != std::string_view::npos) {
        std::string_view n = text.substr(0, colon);
        while (!n.empty() && std::isspace(static_cast<unsigned char>(n.front()))) n.remove_prefix(1);
        while (!n.empty() && std::isspace(static_cast<unsigned char>(n.back()))) n.remove_suffix(1);
        if (n.empty()) throw FeatureError("empty feature name");
        name = std::string(n);
        text = text.substr(colon + 1);
    }
    return make_feature(ExprParser(text, domain).feature(), domain, std::move(name));
}

int dist_cap(const Instance& instance) {
    const int n = instance.num_objects();
    return n * n + 1;
}

// ------------------------------------------------------------ evaluation

namespace {

using Set = std::vector<char>;
using Rel = std::vector<char>;  // n*n row-major

const std::vector<int>& source_of(const Expr& e, const State& s, const Instance& inst) {
    if (e.goal) return inst.goal_pos();
    if (inst.domain().is_static(e.predicate)) return inst.static_atoms();
    return s.atoms();
}

// Ids in [lo, hi) of a sorted vector.
template <class Fn>
void for_range(const std::vector<int>& ids, int lo, int hi, Fn&& fn) {
    for (auto it = std::lower_bound(ids.begin(), ids.end(), lo); it != ids.end() && *it < hi; ++it) fn(*it - lo);
}

class Evaluator {
public:
    Evaluator(const State& s, const Instance& inst) : s_(s), inst_(inst), n_(inst.num_objects()) {}

    Set concept_of(const Expr& e) {
        const auto n = static_cast<std::size_t>(n_);
        switch (e.op) {
            case Op::Top:
                return Set(n, 1);
            case Op::Bot:
                return Set(n, 0);
            case Op::Prim: {
                const int off = inst_.predicate_offset(e.predicate);
                const auto& src = source_of(e, s_, inst_);
                if (inst_.domain().predicate(e.predicate).arity == 0) {
                    return Set(n, std::binary_search(src.begin(), src.end(), off) ? 1 : 0);
                }
                Set out(n, 0);
                for_range(src, off, off + n_, [&](int o) { out[static_cast<std::size_t>(o)] = 1; });
                return out;
            }
            case Op::Not: {
                Set out = concept_of(*e.kids[0]);
                for (auto& x : out) x = !x;
                return out;
            }
            case Op::And: {
                Set a = concept_of(*e.kids[0]);
                Set b = concept_of(*e.kids[1]);
                for (std::size_t i = 0; i < n; ++i) a[i] = a[i] && b[i];
                return a;
            }
            case Op::Exists:
            case Op::Forall: {
                Rel r = role_of(*e.kids[0]);
                Set c = concept_of(*e.kids[1]);
                Set out(n, 0);
                for (std::size_t x = 0; x < n; ++x) {
                    bool any = false;
                    bool all = true;
                    for (std::size_t y = 0; y < n; ++y) {
                        if (!r[x * n + y]) continue;
                        any = any || c[y];
                        all = all && c[y];
                    }
                    out[x] = e.op == Op::Exists ? any : all;
                }
                return out;
            }
            default:
                throw FeatureError("expected a concept");
        }
    }

    Rel role_of(const Expr& e) {
        const auto n = static_cast<std::size_t>(n_);
        switch (e.op) {
            case Op::RolePrim: {
                Rel out(n * n, 0);
                const int off = inst_.predicate_offset(e.predicate);
                for_range(source_of(e, s_, inst_), off, off + n_ * n_, [&](int k) { out[static_cast<std::size_t>(k)] = 1; });
                return out;
            }
            case Op::Inverse: {
                Rel r = role_of(*e.kids[0]);
                Rel out(n * n, 0);
                for (std::size_t x = 0; x < n; ++x) {
                    for (std::size_t y = 0; y < n; ++y) out[y * n + x] = r[x * n + y];
                }
                return out;
            }
            case Op::Star: {
                Rel r = role_of(*e.kids[0]);
                for (std::size_t x = 0; x < n; ++x) r[x * n + x] = 1;
                for (std::size_t k = 0; k < n; ++k) {
                    for (std::size_t x = 0; x < n; ++x) {
                        if (!r[x * n + k]) continue;
                        for (std::size_t y = 0; y < n; ++y) r[x * n + y] = r[x * n + y] || r[k * n + y];
                    }
                }
                return r;
            }
            default:
                throw FeatureError("expected a role");
        }
    }

    int feature(const Expr& e) {
        switch (e.op) {
            case Op::Bool: {
                Set c = concept_of(*e.kids[0]);
                return std::any_of(c.begin(), c.end(), [](char x) { return x != 0; }) ? 1 : 0;
            }
            case Op::Num: {
                Set c = concept_of(*e.kids[0]);
                return static_cast<int>(std::count(c.begin(), c.end(), 1));
            }
            case Op::Dist: {
                Set from = concept_of(*e.kids[0]);
                Rel r = role_of(*e.kids[1]);
                Set to = concept_of(*e.kids[2]);
                return distance(from, r, to);
            }
            default:
                throw FeatureError("expected a feature");
        }
    }

private:
    const State& s_;
    const Instance& inst_;
    int n_;

    int distance(const Set& from, const Rel& r, const Set& to) const {
        const auto n = static_cast<std::size_t>(n_);
        Set visited = from;
        std::vector<std::size_t> frontier;
        for (std::size_t x = 0; x < n; ++x) {
            if (from[x]) frontier.push_back(x);
        }
        for (int d = 0; !frontier.empty(); ++d) {
            for (std::size_t x : frontier) {
                if (to[x]) return d;
            }
            std::vector<std::size_t> next;
            for (std::size_t x : frontier) {
                for (std::size_t y = 0; y < n; ++y) {
                    if (r[x * n + y] && !visited[y]) {
                        visited[y] = 1;
                        next.push_back(y);
                    }
                }
            }
            frontier = std::move(next);
        }
        return n_ * n_ + 1;
    }
};

}  // namespace

int eval(const Feature& f, const State& state, const Instance& instance) {
    return Evaluator(state, instance).feature(*f.expr);
}

FeatureValuation valuate(std::span<const Feature> features, const State& state, const Instance& instance) {
    Evaluator ev(state, instance);
    FeatureValuation out;
    out.reserve(features.size());
    for (const auto& f : features) out.push_back(ev.feature(*f.expr));
    return out;
}

// ------------------------------------------------------------ pool

namespace {

// Denotations over all samples: one 64-bit object mask per sample for
// concepts, one row mask per object per sample for roles.
struct Layout {
    std::vector<int> objects;           // per sample
    std::vector<std::size_t> role_off;  // per sample, start row
    std::size_t rows = 0;
};

using Mask = std::uint64_t;

struct ConceptEntry {
    ExprPtr expr;
    int cost = 0;
    std::string text;
    std::vector<Mask> bits;
};

struct RoleEntry {
    ExprPtr expr;
    int cost = 0;
    std::string text;
    std::vector<Mask> rows;
};

std::string key_of(const std::vector<Mask>& v) {
    return std::string(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(Mask));
}

Mask full_mask(int n) { return n == 64 ? ~Mask{0} : ((Mask{1} << n) - 1); }

}  // namespace

Pool generate_pool(const Domain& domain, std::span<const Sample> samples, const PoolConfig& config) {
    if (samples.empty()) throw FeatureError("generate_pool needs at least one sample state");
    Pool pool;
    if (config.max_complexity < 1) return pool;
    const std::size_t ns = samples.size();
    Layout lay;
    for (const auto& s : samples) {
        const int n = s.instance->num_objects();
        if (n > 64) throw FeatureError("pool samples are limited to 64 objects per instance");
        lay.objects.push_back(n);
        lay.role_off.push_back(lay.rows);
        lay.rows += static_cast<std::size_t>(n);
    }

    std::vector<ConceptEntry> concepts;
    std::vector<RoleEntry> roles;
    std::unordered_set<std::string> seen_concepts, seen_roles;
    auto add_concepts = [&](std::vector<ConceptEntry> batch) {
        std::sort(batch.begin(), batch.end(), [](const auto& a, const auto& b) { return a.text < b.text; });
        for (auto& c : batch) {
            if (seen_concepts.insert(key_of(c.bits)).second) concepts.push_back(std::move(c));
        }
    };
    auto add_roles = [&](std::vector<RoleEntry> batch) {
        std::sort(batch.begin(), batch.end(), [](const auto& a, const auto& b) { return a.text < b.text; });
        for (auto& r : batch) {
            if (seen_roles.insert(key_of(r.rows)).second) roles.push_back(std::move(r));
        }
    };

    // Cost 1: Top, Bot, primitives and their goal versions.
    {
        std::vector<ConceptEntry> batch;
        std::vector<RoleEntry> rbatch;
        ConceptEntry top{make_top(), 1, "Top", std::vector<Mask>(ns)};
        ConceptEntry bot{make_bot(), 1, "Bot", std::vector<Mask>(ns, 0)};
        for (std::size_t i = 0; i < ns; ++i) top.bits[i] = full_mask(lay.objects[i]);
        batch.push_back(top);
        batch.push_back(bot);
        for (int p = 0; p < static_cast<int>(domain.predicates().size()); ++p) {
            const auto& pred = domain.predicate(p);
            if (domain.is_equality(p) || pred.arity > 2) continue;
            for (bool goal : {false, true}) {
                if (goal && domain.is_static(p)) continue;
                if (pred.arity <= 1) {
                    ConceptEntry c{make_prim(domain, pred.name, goal), 1, "", std::vector<Mask>(ns, 0)};
                    c.text = to_string(*c.expr, domain);
                    for (std::size_t i = 0; i < ns; ++i) {
                        const auto& inst = *samples[i].instance;
                        const int off = inst.predicate_offset(p);
                        const auto& src = source_of(*c.expr, *samples[i].state, inst);
                        if (pred.arity == 0) {
                            c.bits[i] = std::binary_search(src.begin(), src.end(), off) ? full_mask(lay.objects[i]) : 0;
                        } else {
                            for_range(src, off, off + lay.objects[i], [&](int o) { c.bits[i] |= Mask{1} << o; });
                        }
                    }
                    batch.push_back(std::move(c));
                } else {
                    RoleEntry r{make_role(domain, pred.name, goal), 1, "", std::vector<Mask>(lay.rows, 0)};
                    r.text = to_string(*r.expr, domain);
                    for (std::size_t i = 0; i < ns; ++i) {
                        const auto& inst = *samples[i].instance;
                        const int n = lay.objects[i];
                        const int off = inst.predicate_offset(p);
                        for_range(source_of(*r.expr, *samples[i].state, inst), off, off + n * n, [&](int k) {
                            r.rows[lay.role_off[i] + static_cast<std::size_t>(k / n)] |= Mask{1} << (k % n);
                        });
                    }
                    rbatch.push_back(std::move(r));
                }
            }
        }
        add_concepts(std::move(batch));
        add_roles(std::move(rbatch));
    }

    auto concepts_of_cost = [&](int c) {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < concepts.size(); ++i) {
            if (concepts[i].cost == c) out.push_back(i);
        }
        return out;
    };
    auto roles_of_cost = [&](int c) {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < roles.size(); ++i) {
            if (roles[i].cost == c) out.push_back(i);
        }
        return out;
    };
    auto trivial = [](const ConceptEntry& c) { return c.expr->op == Op::Top || c.expr->op == Op::Bot; };

    for (int k = 2; k <= config.max_complexity; ++k) {
        std::vector<RoleEntry> rbatch;
        for (std::size_t ri : roles_of_cost(k - 1)) {
            const RoleEntry& r = roles[ri];
            if (r.expr->op != Op::Inverse) {
                RoleEntry inv{make_unary(Op::Inverse, r.expr), k, "", std::vector<Mask>(lay.rows, 0)};
                for (std::size_t i = 0; i < ns; ++i) {
                    const int n = lay.objects[i];
                    for (int x = 0; x < n; ++x) {
                        Mask row = r.rows[lay.role_off[i] + static_cast<std::size_t>(x)];
                        for (int y = 0; y < n; ++y) {
                            if (row >> y & 1) inv.rows[lay.role_off[i] + static_cast<std::size_t>(y)] |= Mask{1} << x;
                        }
                    }
                }
                inv.text = to_string(*inv.expr, domain);
                rbatch.push_back(std::move(inv));
            }
            if (r.expr->op != Op::Star) {
                RoleEntry st{make_unary(Op::Star, r.expr), k, "", r.rows};
                for (std::size_t i = 0; i < ns; ++i) {
                    const int n = lay.objects[i];
                    Mask* rows = st.rows.data() + lay.role_off[i];
                    for (int x = 0; x < n; ++x) rows[x] |= Mask{1} << x;
                    for (int m = 0; m < n; ++m) {
                        for (int x = 0; x < n; ++x) {
                            if (rows[x] >> m & 1) rows[x] |= rows[m];
                        }
                    }
                }
                st.text = to_string(*st.expr, domain);
                rbatch.push_back(std::move(st));
            }
        }
        add_roles(std::move(rbatch));

        std::vector<ConceptEntry> batch;
        for (std::size_t ci : concepts_of_cost(k - 1)) {
            const ConceptEntry& c = concepts[ci];
            if (c.expr->op == Op::Not || trivial(c)) continue;
            ConceptEntry neg{make_unary(Op::Not, c.expr), k, "", c.bits};
            for (std::size_t i = 0; i < ns; ++i) neg.bits[i] = ~c.bits[i] & full_mask(lay.objects[i]);
            neg.text = to_string(*neg.expr, domain);
            batch.push_back(std::move(neg));
        }
        for (int ca = 1; ca <= k - 2; ++ca) {
            const int cb = k - 1 - ca;
            if (cb < ca) break;
            auto as = concepts_of_cost(ca);
            auto bs = concepts_of_cost(cb);
            for (std::size_t ai : as) {
                if (trivial(concepts[ai])) continue;
                for (std::size_t bi : bs) {
                    if (trivial(concepts[bi]) || (ca == cb && bi <= ai)) continue;
                    ConceptEntry a{make_binary(Op::And, concepts[ai].expr, concepts[bi].expr), k, "", concepts[ai].bits};
                    for (std::size_t i = 0; i < ns; ++i) a.bits[i] &= concepts[bi].bits[i];
                    a.text = to_string(*a.expr, domain);
                    batch.push_back(std::move(a));
                }
            }
        }
        for (int cr = 1; cr <= k - 2; ++cr) {
            auto rs = roles_of_cost(cr);
            auto cs = concepts_of_cost(k - 1 - cr);
            for (std::size_t ri : rs) {
                for (std::size_t ci : cs) {
                    const ConceptEntry& c = concepts[ci];
                    if (c.expr->op == Op::Bot) continue;
                    for (Op op : {Op::Exists, Op::Forall}) {
                        if (op == Op::Forall && c.expr->op == Op::Top) continue;
                        ConceptEntry e{make_binary(op, roles[ri].expr, c.expr), k, "", std::vector<Mask>(ns, 0)};
                        for (std::size_t i = 0; i < ns; ++i) {
                            const int n = lay.objects[i];
                            const Mask* rows = roles[ri].rows.data() + lay.role_off[i];
                            const Mask full = full_mask(n);
                            Mask out = 0;
                            for (int x = 0; x < n; ++x) {
                                bool in = op == Op::Exists ? (rows[x] & c.bits[i]) != 0 : (rows[x] & ~c.bits[i] & full) == 0;
                                if (in) out |= Mask{1} << x;
                            }
                            e.bits[i] = out;
                        }
                        e.text = to_string(*e.expr, domain);
                        batch.push_back(std::move(e));
                    }
                }
            }
        }
        add_concepts(std::move(batch));
    }

    // Features. Dist sources must be singletons in every sample.
    struct Candidate {
        Feature feature;
        std::vector<int> values;
    };
    std::vector<Candidate> cands;
    for (const auto& c : concepts) {
        if (trivial(c) || c.cost > config.max_complexity) continue;
        for (Op op : {Op::Bool, Op::Num}) {
            Candidate cand{make_feature(make_unary(op, c.expr), domain), std::vector<int>(ns)};
            for (std::size_t i = 0; i < ns; ++i)
                cand.values[i] = op == Op::Bool ? (c.bits[i] != 0) : std::popcount(c.bits[i]);
            cands.push_back(std::move(cand));
        }
    }
    std::vector<std::size_t> sources;
    for (std::size_t ci = 0; ci < concepts.size(); ++ci) {
        const auto& c = concepts[ci];
        bool singleton = true;
        for (Mask m : c.bits) singleton = singleton && std::popcount(m) == 1;
        if (singleton && c.cost + 3 <= config.max_complexity) sources.push_back(ci);
    }
    struct DistJob {
        std::size_t from, role, to;
    };
    std::vector<DistJob> jobs;
    for (std::size_t fi : sources) {
        for (std::size_t ri = 0; ri < roles.size(); ++ri) {
            for (std::size_t ti = 0; ti < concepts.size(); ++ti) {
                if (ti == fi || trivial(concepts[ti])) continue;
                if (1 + concepts[fi].cost + roles[ri].cost + concepts[ti].cost > config.max_complexity) continue;
                jobs.push_back({fi, ri, ti});
            }
        }
    }
    std::vector<Candidate> dist(jobs.size());
    parallel_for(jobs.size(), config.threads, [&](std::size_t j) {
        const auto& job = jobs[j];
        Candidate cand{make_feature(make_dist(concepts[job.from].expr, roles[job.role].expr, concepts[job.to].expr), domain),
                       std::vector<int>(ns)};
        for (std::size_t i = 0; i < ns; ++i) {
            const int n = lay.objects[i];
            const Mask* rows = roles[job.role].rows.data() + lay.role_off[i];
            const Mask target = concepts[job.to].bits[i];
            Mask frontier = concepts[job.from].bits[i];
            Mask visited = frontier;
            int d = 0;
            while (frontier && !(frontier & target)) {
                Mask next = 0;
                for (Mask f = frontier; f; f &= f - 1) next |= rows[std::countr_zero(f)];
                frontier = next & ~visited;
                visited |= frontier;
                ++d;
            }
            cand.values[i] = (frontier & target) ? d : n * n + 1;
        }
        dist[j] = std::move(cand);
    });
    for (auto& c : dist) cands.push_back(std::move(c));

    std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
        return std::tie(a.feature.cost, a.feature.text) < std::tie(b.feature.cost, b.feature.text);
    });
    std::unordered_set<std::string> seen_values;
    for (auto& c : cands) {
        if (config.prune_constant &&
            std::all_of(c.values.begin(), c.values.end(), [&](int v) { return v == c.values.front(); }))
            continue;
        std::string key(reinterpret_cast<const char*>(c.values.data()), c.values.size() * sizeof(int));
        if (!seen_values.insert(key).second) continue;
        c.feature.name = "f" + std::to_string(pool.features.size());
        pool.features.push_back(std::move(c.feature));
        pool.values.push_back(std::move(c.values));
    }
    return pool;
}

}  // namespace gplan
