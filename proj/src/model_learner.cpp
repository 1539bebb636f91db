#include "gplan/model_learner.hpp"

#include "gplan/sat.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace gplan {

namespace {

using sat::Lit;
using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

// Lifted atom over schema parameters; `distinct` lists the parameters in
// order of first occurrence.
struct Template {
    int pred = 0;
    std::vector<int> args;
    std::vector<int> distinct;
};

Template make_template(int pred, std::vector<int> args) {
    Template t{pred, std::move(args), {}};
    for (int a : t.args) {
        if (std::find(t.distinct.begin(), t.distinct.end(), a) == t.distinct.end()) t.distinct.push_back(a);
    }
    return t;
}

// Schema with one flag literal per template; constant flags are the
// solver's true literal or its negation.
struct SchemaModel {
    std::string name;
    int arity = 0;
    std::vector<Template> fluent;
    std::vector<Lit> pre, pre_neg, add, del;
    std::vector<Template> stat;
    std::vector<Lit> spos, sneg;
    std::vector<std::pair<int, int>> eq;
    std::vector<Lit> eq_pos, eq_neg;
};

struct Model {
    std::vector<int> fluent_arity;
    std::vector<int> static_arity;
    bool static_order = false;
    std::vector<SchemaModel> schemas;
};

int ipow(int base, int exp) {
    long long r = 1;
    for (int i = 0; i < exp; ++i) {
        r *= base;
        if (r > (1LL << 30)) return 1 << 30;
    }
    return static_cast<int>(r);
}

// Calls fn(tuple) for every tuple in [0, n)^k, row-major.
template <class F>
void for_each_tuple(int n, int k, F&& fn) {
    std::vector<int> t(static_cast<std::size_t>(k), 0);
    if (k > 0 && n == 0) return;
    while (true) {
        fn(static_cast<const std::vector<int>&>(t));
        int d = k - 1;
        while (d >= 0 && ++t[static_cast<std::size_t>(d)] == n) {
            t[static_cast<std::size_t>(d)] = 0;
            --d;
        }
        if (d < 0) return;
    }
}

class Cnf {
public:
    Cnf() : true_(sat::pos(solver_.new_var())) { solver_.add_clause({true_}); }

    sat::Solver& solver() { return solver_; }
    [[nodiscard]] Lit yes() const { return true_; }
    [[nodiscard]] Lit no() const { return ~true_; }
    [[nodiscard]] bool is_true(Lit l) const { return l == true_; }
    [[nodiscard]] bool is_false(Lit l) const { return l == ~true_; }
    Lit fresh() { return sat::pos(solver_.new_var()); }

    void clause(std::vector<Lit> lits) {
        std::vector<Lit> kept;
        for (Lit l : lits) {
            if (is_true(l)) return;
            if (!is_false(l)) kept.push_back(l);
        }
        solver_.add_clause(kept);
    }

    // Literal implying a and b (one direction only).
    Lit and2(Lit a, Lit b) {
        if (is_false(a) || is_false(b)) return no();
        if (is_true(a)) return b;
        if (is_true(b)) return a;
        Lit x = fresh();
        clause({~x, a});
        clause({~x, b});
        return x;
    }

    // Literal equivalent to the conjunction.
    Lit all_of(const std::vector<Lit>& lits) {
        std::vector<Lit> kept;
        for (Lit l : lits) {
            if (is_false(l)) return no();
            if (!is_true(l)) kept.push_back(l);
        }
        if (kept.empty()) return yes();
        if (kept.size() == 1) return kept[0];
        Lit x = fresh();
        std::vector<Lit> back{x};
        for (Lit l : kept) {
            clause({~x, l});
            back.push_back(~l);
        }
        clause(back);
        return x;
    }

    // Literal equivalent to the disjunction.
    Lit any_of(const std::vector<Lit>& lits) {
        std::vector<Lit> kept;
        for (Lit l : lits) {
            if (is_true(l)) return yes();
            if (!is_false(l)) kept.push_back(l);
        }
        if (kept.empty()) return no();
        if (kept.size() == 1) return kept[0];
        Lit x = fresh();
        std::vector<Lit> fwd{~x};
        for (Lit l : kept) {
            clause({~l, x});
            fwd.push_back(l);
        }
        clause(fwd);
        return x;
    }

private:
    sat::Solver solver_;
    Lit true_;
};

// x <=lex y with false < true; positions holding the same literal are skipped.
void lex_leq(Cnf& cnf, const std::vector<Lit>& x, const std::vector<Lit>& y) {
    Lit eq = cnf.yes();
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] == y[i]) continue;
        cnf.clause({~eq, ~x[i], y[i]});
        Lit next = cnf.fresh();
        cnf.clause({~eq, x[i], y[i], next});
        cnf.clause({~eq, ~x[i], ~y[i], next});
        eq = next;
    }
}

// Stable colors of out-edge color refinement; nodes with equal states in a
// consistent model necessarily share a color.
std::vector<int> refine_colors(const Graph& g) {
    std::vector<int> color(static_cast<std::size_t>(g.num_nodes), 0);
    auto out = g.out_edges();
    int classes = 1;
    while (true) {
        std::vector<std::pair<int, std::vector<std::pair<std::string, int>>>> sig(color.size());
        for (int v = 0; v < g.num_nodes; ++v) {
            auto& s = sig[static_cast<std::size_t>(v)];
            s.first = color[static_cast<std::size_t>(v)];
            for (int e : out[static_cast<std::size_t>(v)]) {
                const auto& edge = g.edges[static_cast<std::size_t>(e)];
                s.second.emplace_back(edge.label.value_or(""), color[static_cast<std::size_t>(edge.dst)]);
            }
            std::sort(s.second.begin(), s.second.end());
        }
        auto sorted = sig;
        std::sort(sorted.begin(), sorted.end());
        sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
        std::vector<int> next(color.size());
        for (std::size_t v = 0; v < color.size(); ++v) {
            next[v] = static_cast<int>(std::lower_bound(sorted.begin(), sorted.end(), sig[v]) - sorted.begin());
        }
        int n = static_cast<int>(sorted.size());
        color = std::move(next);
        if (n == classes) return color;
        classes = n;
    }
}

int init_node(const Graph& g) { return g.init.value_or(0); }

void check_reachable(const Graph& g, std::size_t index) {
    if (g.num_nodes == 0) throw std::invalid_argument("graph " + std::to_string(index) + " has no nodes");
    auto out = g.out_edges();
    std::vector<char> seen(static_cast<std::size_t>(g.num_nodes), 0);
    std::vector<int> stack{init_node(g)};
    seen[static_cast<std::size_t>(init_node(g))] = 1;
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        for (int e : out[static_cast<std::size_t>(v)]) {
            int w = g.edges[static_cast<std::size_t>(e)].dst;
            if (!seen[static_cast<std::size_t>(w)]) {
                seen[static_cast<std::size_t>(w)] = 1;
                stack.push_back(w);
            }
        }
    }
    if (std::find(seen.begin(), seen.end(), 0) != seen.end())
        throw std::invalid_argument("graph " + std::to_string(index) + " has nodes unreachable from its initial node");
}

std::vector<int> unrank(int q, int arity, int n) {
    std::vector<int> args(static_cast<std::size_t>(arity));
    for (int i = arity - 1; i >= 0; --i) {
        args[static_cast<std::size_t>(i)] = q % n;
        q /= n;
    }
    return args;
}

// Variables and constraints tying one graph to the model. Constraints are
// added in BFS layers from the initial node: stage k covers the out-edges,
// injectivity and completeness of nodes at depth < k and distinctness among
// nodes at depth <= k. Every prefix of stages is a relaxation.
class GraphEncoding {
public:
    GraphEncoding(Cnf& cnf, const Model& model, const Graph& g, int objects, std::vector<int> edge_schema)
        : cnf_(cnf), model_(model), g_(g), n_(objects), edge_schema_(std::move(edge_schema)), out_(g.out_edges()) {
        for (int a : model.fluent_arity) {
            fluent_base_.push_back(num_fluent_);
            num_fluent_ += ipow(n_, a);
        }
        for (int a : model.static_arity) {
            static_base_.push_back(num_static_);
            num_static_ += ipow(n_, a);
        }
        h_.resize(static_cast<std::size_t>(g.num_nodes));
        for (auto& row : h_) {
            for (int q = 0; q < num_fluent_; ++q) row.push_back(cnf_.fresh());
        }
        for (int q = 0; q < num_static_; ++q) st_.push_back(cnf_.fresh());
        if (model.static_order) encode_static_order();
        b_.resize(g_.edges.size());
        for (std::size_t e = 0; e < g_.edges.size(); ++e) {
            auto& be = b_[e];
            be.resize(static_cast<std::size_t>(model_.schemas[static_cast<std::size_t>(edge_schema_[e])].arity));
            for (auto& row : be) {
                for (int o = 0; o < n_; ++o) row.push_back(cnf_.fresh());
                cnf_.clause(row);
                for (int o1 = 0; o1 < n_; ++o1) {
                    for (int o2 = o1 + 1; o2 < n_; ++o2)
                        cnf_.clause({~row[static_cast<std::size_t>(o1)], ~row[static_cast<std::size_t>(o2)]});
                }
            }
        }
        depth_.assign(static_cast<std::size_t>(g.num_nodes), -1);
        order_.push_back(init_node(g));
        depth_[static_cast<std::size_t>(init_node(g))] = 0;
        for (std::size_t i = 0; i < order_.size(); ++i) {
            int v = order_[i];
            for (int e : out_[static_cast<std::size_t>(v)]) {
                int w = g.edges[static_cast<std::size_t>(e)].dst;
                if (depth_[static_cast<std::size_t>(w)] < 0) {
                    depth_[static_cast<std::size_t>(w)] = depth_[static_cast<std::size_t>(v)] + 1;
                    order_.push_back(w);
                }
            }
        }
        color_ = refine_colors(g_);
        break_object_symmetry();
    }

    [[nodiscard]] int stages() const { return depth_[static_cast<std::size_t>(order_.back())] + 1; }

    void add_stage(int k) {
        for (int u : order_) {
            int du = depth_[static_cast<std::size_t>(u)];
            if (du == k - 1) {
                for (int e : out_[static_cast<std::size_t>(u)]) encode_edge(e);
                encode_injective(u);
                encode_completeness(u);
            }
        }
        for (int u : order_) {
            for (int v : order_) {
                if (u >= v) continue;
                int m = std::max(depth_[static_cast<std::size_t>(u)], depth_[static_cast<std::size_t>(v)]);
                if (m == k || (k == 1 && m == 0)) encode_distinct(u, v);
            }
        }
    }

    [[nodiscard]] const std::vector<std::vector<Lit>>& h() const { return h_; }
    [[nodiscard]] const std::vector<Lit>& st() const { return st_; }
    [[nodiscard]] const std::vector<int>& fluent_base() const { return fluent_base_; }
    [[nodiscard]] const std::vector<int>& static_base() const { return static_base_; }

private:
    Cnf& cnf_;
    const Model& model_;
    const Graph& g_;
    int n_;
    std::vector<int> edge_schema_;
    std::vector<std::vector<int>> out_;
    std::vector<int> fluent_base_;
    std::vector<int> static_base_;
    int num_fluent_ = 0;
    int num_static_ = 0;
    std::vector<std::vector<Lit>> h_;
    std::vector<Lit> st_;
    std::vector<std::vector<std::vector<Lit>>> b_;  // edge, param, object
    std::vector<int> depth_;
    std::vector<int> order_;  // BFS order
    std::vector<int> color_;
    std::unordered_map<std::uint64_t, Lit> static_viol_;

    [[nodiscard]] int atom(const std::vector<int>& base, int pred, const Template& t,
                           const std::vector<int>& param_obj) const {
        int q = 0;
        for (int a : t.args) q = q * n_ + param_obj[static_cast<std::size_t>(a)];
        return base[static_cast<std::size_t>(pred)] + q;
    }

    // Calls fn(q, binding literals) for each assignment of objects to the
    // template's distinct parameters on edge e.
    template <class F>
    void for_each_binding(int e, const Template& t, const std::vector<int>& base, F&& fn) {
        const auto& be = b_[static_cast<std::size_t>(e)];
        std::vector<int> param_obj(be.size(), 0);
        for_each_tuple(n_, static_cast<int>(t.distinct.size()), [&](const std::vector<int>& objs) {
            std::vector<Lit> bind;
            for (std::size_t k = 0; k < objs.size(); ++k) {
                int p = t.distinct[k];
                param_obj[static_cast<std::size_t>(p)] = objs[k];
                bind.push_back(be[static_cast<std::size_t>(p)][static_cast<std::size_t>(objs[k])]);
            }
            fn(atom(base, t.pred, t, param_obj), bind);
        });
    }

    // Each static predicate is a strict weak order: irreflexive, transitive
    // and negatively transitive.
    void encode_static_order() {
        for (std::size_t p = 0; p < static_base_.size(); ++p) {
            if (model_.static_arity[p] != 2) continue;
            auto s = [&](int a, int b) { return st_[static_cast<std::size_t>(static_base_[p] + a * n_ + b)]; };
            for (int a = 0; a < n_; ++a) {
                cnf_.clause({~s(a, a)});
                for (int b = 0; b < n_; ++b) {
                    for (int c = 0; c < n_; ++c) {
                        cnf_.clause({~s(a, b), ~s(b, c), s(a, c)});
                        cnf_.clause({s(a, b), s(b, c), ~s(a, c)});
                    }
                }
            }
        }
    }

    void encode_edge(int ie) {
        auto e = static_cast<std::size_t>(ie);
        const auto& edge = g_.edges[e];
        const auto& sm = model_.schemas[static_cast<std::size_t>(edge_schema_[e])];
        const auto& be = b_[e];
        const auto& hu = h_[static_cast<std::size_t>(edge.src)];
        const auto& hv = h_[static_cast<std::size_t>(edge.dst)];

        for (std::size_t k = 0; k < sm.fluent.size(); ++k) {
            const auto& t = sm.fluent[k];
            for (int sign = 0; sign < 2; ++sign) {
                Lit flag = sign == 0 ? sm.pre[k] : sm.pre_neg[k];
                if (cnf_.is_false(flag)) continue;
                for_each_binding(ie, t, fluent_base_, [&](int q, const std::vector<Lit>& bind) {
                    Lit hq = hu[static_cast<std::size_t>(q)];
                    std::vector<Lit> c{~flag, sign == 0 ? hq : ~hq};
                    for (Lit l : bind) c.push_back(~l);
                    cnf_.clause(std::move(c));
                });
            }
        }
        for (std::size_t k = 0; k < sm.stat.size(); ++k) {
            const auto& t = sm.stat[k];
            for (int sign = 0; sign < 2; ++sign) {
                Lit flag = sign == 0 ? sm.spos[k] : sm.sneg[k];
                if (cnf_.is_false(flag)) continue;
                for_each_binding(ie, t, static_base_, [&](int q, const std::vector<Lit>& bind) {
                    Lit s = st_[static_cast<std::size_t>(q)];
                    std::vector<Lit> c{~flag, sign == 0 ? s : ~s};
                    for (Lit l : bind) c.push_back(~l);
                    cnf_.clause(std::move(c));
                });
            }
        }
        for (std::size_t k = 0; k < sm.eq.size(); ++k) {
            auto [i, j] = sm.eq[k];
            for (int o1 = 0; o1 < n_; ++o1) {
                for (int o2 = 0; o2 < n_; ++o2) {
                    Lit flag = o1 == o2 ? sm.eq_neg[k] : sm.eq_pos[k];
                    if (cnf_.is_false(flag)) continue;
                    if (i == j && o1 != o2) continue;
                    cnf_.clause({~flag, ~be[static_cast<std::size_t>(i)][static_cast<std::size_t>(o1)],
                                 ~be[static_cast<std::size_t>(j)][static_cast<std::size_t>(o2)]});
                }
            }
        }

        std::vector<std::vector<Lit>> adds(static_cast<std::size_t>(num_fluent_));
        std::vector<std::vector<Lit>> dels(static_cast<std::size_t>(num_fluent_));
        for (std::size_t k = 0; k < sm.fluent.size(); ++k) {
            const auto& t = sm.fluent[k];
            for (int side = 0; side < 2; ++side) {
                Lit flag = side == 0 ? sm.add[k] : sm.del[k];
                if (cnf_.is_false(flag)) continue;
                auto& sink = side == 0 ? adds : dels;
                for_each_binding(ie, t, fluent_base_, [&](int q, std::vector<Lit> bind) {
                    bind.push_back(flag);
                    sink[static_cast<std::size_t>(q)].push_back(cnf_.all_of(bind));
                });
            }
        }
        for (int q = 0; q < num_fluent_; ++q) {
            Lit add = cnf_.any_of(adds[static_cast<std::size_t>(q)]);
            Lit del = cnf_.any_of(dels[static_cast<std::size_t>(q)]);
            Lit u = hu[static_cast<std::size_t>(q)];
            Lit v = hv[static_cast<std::size_t>(q)];
            cnf_.clause({~add, v});
            cnf_.clause({~del, add, ~v});
            cnf_.clause({~u, del, v});
            cnf_.clause({u, add, ~v});
        }
    }

    // Edges leaving u with the same schema carry distinct bindings.
    void encode_injective(int u) {
        const auto& es = out_[static_cast<std::size_t>(u)];
        for (std::size_t x = 0; x < es.size(); ++x) {
            for (std::size_t y = x + 1; y < es.size(); ++y) {
                auto e1 = static_cast<std::size_t>(es[x]);
                auto e2 = static_cast<std::size_t>(es[y]);
                if (edge_schema_[e1] != edge_schema_[e2]) continue;
                std::vector<Lit> c;
                for (std::size_t i = 0; i < b_[e1].size(); ++i) {
                    for (std::size_t o = 0; o < static_cast<std::size_t>(n_); ++o)
                        c.push_back(cnf_.and2(b_[e1][i][o], ~b_[e2][i][o]));
                }
                cnf_.clause(std::move(c));
            }
        }
    }

    // Every ground action applicable at u is matched by an out-edge.
    void encode_completeness(int u) {
        const auto& hu = h_[static_cast<std::size_t>(u)];
        std::unordered_map<std::uint64_t, Lit> viol;
        auto key_of = [](std::size_t s, std::size_t k, int sign, int q) {
            return ((s * 4096 + k) * 2 + static_cast<std::uint64_t>(sign)) * 1'000'003ULL + static_cast<std::uint64_t>(q);
        };
        for (std::size_t s = 0; s < model_.schemas.size(); ++s) {
            const auto& sm = model_.schemas[s];
            std::vector<int> edges;
            for (int e : out_[static_cast<std::size_t>(u)]) {
                if (edge_schema_[static_cast<std::size_t>(e)] == static_cast<int>(s)) edges.push_back(e);
            }
            for_each_tuple(n_, sm.arity, [&](const std::vector<int>& g) {
                std::vector<Lit> c;
                for (std::size_t k = 0; k < sm.fluent.size(); ++k) {
                    int q = atom(fluent_base_, sm.fluent[k].pred, sm.fluent[k], g);
                    for (int sign = 0; sign < 2; ++sign) {
                        Lit flag = sign == 0 ? sm.pre[k] : sm.pre_neg[k];
                        if (cnf_.is_false(flag)) continue;
                        auto key = key_of(s, k, sign, q);
                        auto it = viol.find(key);
                        if (it == viol.end()) {
                            Lit hq = hu[static_cast<std::size_t>(q)];
                            it = viol.emplace(key, cnf_.and2(flag, sign == 0 ? ~hq : hq)).first;
                        }
                        c.push_back(it->second);
                    }
                }
                for (std::size_t k = 0; k < sm.stat.size(); ++k) {
                    int q = atom(static_base_, sm.stat[k].pred, sm.stat[k], g);
                    for (int sign = 0; sign < 2; ++sign) {
                        Lit flag = sign == 0 ? sm.spos[k] : sm.sneg[k];
                        if (cnf_.is_false(flag)) continue;
                        auto key = key_of(s, k, sign, q);
                        auto it = static_viol_.find(key);
                        if (it == static_viol_.end()) {
                            Lit sq = st_[static_cast<std::size_t>(q)];
                            it = static_viol_.emplace(key, cnf_.and2(flag, sign == 0 ? ~sq : sq)).first;
                        }
                        c.push_back(it->second);
                    }
                }
                for (std::size_t k = 0; k < sm.eq.size(); ++k) {
                    auto [i, j] = sm.eq[k];
                    bool same = g[static_cast<std::size_t>(i)] == g[static_cast<std::size_t>(j)];
                    c.push_back(same ? sm.eq_neg[k] : sm.eq_pos[k]);
                }
                for (int e : edges) {
                    const auto& be = b_[static_cast<std::size_t>(e)];
                    std::vector<Lit> bind;
                    for (std::size_t i = 0; i < g.size(); ++i) bind.push_back(be[i][static_cast<std::size_t>(g[i])]);
                    if (bind.size() <= 1) {
                        c.push_back(bind.empty() ? cnf_.yes() : bind[0]);
                        continue;
                    }
                    Lit m = cnf_.fresh();
                    for (Lit l : bind) cnf_.clause({~m, l});
                    c.push_back(m);
                }
                cnf_.clause(std::move(c));
            });
        }
    }

    // Lex-leader constraints for every object transposition over the static
    // atoms followed by the node atoms in BFS order.
    void break_object_symmetry() {
        std::vector<Lit> x = st_;
        for (int v : order_) x.insert(x.end(), h_[static_cast<std::size_t>(v)].begin(), h_[static_cast<std::size_t>(v)].end());
        auto swapped = [&](const std::vector<int>& base, const std::vector<int>& arity, int q, int o1, int o2) {
            std::size_t p = 0;
            while (p + 1 < base.size() && base[p + 1] <= q) ++p;
            auto args = unrank(q - base[p], arity[p], n_);
            int r = 0;
            for (int a : args) r = r * n_ + (a == o1 ? o2 : a == o2 ? o1 : a);
            return base[p] + r;
        };
        for (int o1 = 0; o1 < n_; ++o1) {
            for (int o2 = o1 + 1; o2 < n_; ++o2) {
                std::vector<Lit> y;
                for (int q = 0; q < num_static_; ++q)
                    y.push_back(st_[static_cast<std::size_t>(swapped(static_base_, model_.static_arity, q, o1, o2))]);
                for (int v : order_) {
                    const auto& hv = h_[static_cast<std::size_t>(v)];
                    for (int q = 0; q < num_fluent_; ++q)
                        y.push_back(hv[static_cast<std::size_t>(swapped(fluent_base_, model_.fluent_arity, q, o1, o2))]);
                }
                lex_leq(cnf_, x, y);
            }
        }
    }

    // Distinct atom sets; skipped for nodes of different refinement colors,
    // which cannot share a state in any consistent model.
    void encode_distinct(int u, int v) {
        if (color_[static_cast<std::size_t>(u)] != color_[static_cast<std::size_t>(v)]) return;
        std::vector<Lit> c;
        for (int q = 0; q < num_fluent_; ++q) {
            Lit a = h_[static_cast<std::size_t>(u)][static_cast<std::size_t>(q)];
            Lit b = h_[static_cast<std::size_t>(v)][static_cast<std::size_t>(q)];
            Lit x = cnf_.fresh();
            cnf_.clause({~x, a, b});
            cnf_.clause({~x, ~a, ~b});
            c.push_back(x);
        }
        cnf_.clause(std::move(c));
    }
};

// Labels of a graph mapped to schema indices; nullopt on an unknown label.
std::optional<std::vector<int>> edge_schemas(const Graph& g, const Model& m) {
    std::vector<int> out;
    for (const auto& e : g.edges) {
        int found = -1;
        for (std::size_t s = 0; s < m.schemas.size(); ++s) {
            if (m.schemas[s].name == *e.label) found = static_cast<int>(s);
        }
        if (found < 0) return std::nullopt;
        out.push_back(found);
    }
    return out;
}

// Learnable flags for a structure.
Model learnable_model(Cnf& cnf, const Structure& st, const HypothesisSpace& space) {
    Model m;
    m.fluent_arity = st.predicate_arities;
    m.static_order = space.static_order;
    bool use_static = space.static_predicate;
    if (use_static) {
        use_static = std::any_of(st.schema_arities.begin(), st.schema_arities.end(), [](int a) { return a >= 1; });
    }
    if (use_static) m.static_arity = {2};
    for (std::size_t l = 0; l < st.labels.size(); ++l) {
        SchemaModel sm;
        sm.name = st.labels[l];
        sm.arity = st.schema_arities[l];
        for (std::size_t p = 0; p < m.fluent_arity.size(); ++p) {
            for_each_tuple(sm.arity, m.fluent_arity[p], [&](const std::vector<int>& args) {
                sm.fluent.push_back(make_template(static_cast<int>(p), args));
                sm.pre.push_back(cnf.fresh());
                sm.pre_neg.push_back(cnf.no());
                sm.add.push_back(cnf.fresh());
                sm.del.push_back(cnf.fresh());
            });
        }
        if (use_static) {
            for_each_tuple(sm.arity, 2, [&](const std::vector<int>& args) {
                sm.stat.push_back(make_template(0, args));
                sm.spos.push_back(cnf.fresh());
                sm.sneg.push_back(cnf.no());
            });
        }
        for (int i = 0; i < sm.arity; ++i) {
            for (int j = i + 1; j < sm.arity; ++j) {
                sm.eq.emplace_back(i, j);
                sm.eq_pos.push_back(cnf.no());
                sm.eq_neg.push_back(cnf.fresh());
            }
        }
        std::vector<Lit> effects;
        for (std::size_t k = 0; k < sm.fluent.size(); ++k) {
            cnf.clause({~sm.add[k], ~sm.del[k]});
            cnf.clause({~sm.add[k], ~sm.pre[k]});
            effects.push_back(sm.add[k]);
            effects.push_back(sm.del[k]);
        }
        cnf.clause(effects);
        m.schemas.push_back(std::move(sm));
    }
    for (std::size_t p = 0; p < m.fluent_arity.size(); ++p) {
        std::vector<Lit> used;
        for (const auto& sm : m.schemas) {
            for (std::size_t k = 0; k < sm.fluent.size(); ++k) {
                if (sm.fluent[k].pred == static_cast<int>(p)) {
                    used.push_back(sm.add[k]);
                    used.push_back(sm.del[k]);
                }
            }
        }
        cnf.clause(used);
    }
    return m;
}

// Flags in a fixed order; `image` gives, per schema, the template
// permutation applied before reading (identity when empty).
struct FlagMap {
    std::vector<std::vector<std::size_t>> fluent, stat, eq;
};

std::vector<Lit> flag_vector(const Model& m, const FlagMap* f) {
    std::vector<Lit> out;
    for (std::size_t s = 0; s < m.schemas.size(); ++s) {
        const auto& sm = m.schemas[s];
        auto at = [&](const std::vector<std::vector<std::size_t>>* table, std::size_t k) {
            return table ? (*table)[s][k] : k;
        };
        for (std::size_t k = 0; k < sm.fluent.size(); ++k) {
            std::size_t j = at(f ? &f->fluent : nullptr, k);
            out.push_back(sm.pre[j]);
            out.push_back(sm.add[j]);
            out.push_back(sm.del[j]);
        }
        for (std::size_t k = 0; k < sm.stat.size(); ++k) out.push_back(sm.spos[at(f ? &f->stat : nullptr, k)]);
        for (std::size_t k = 0; k < sm.eq.size(); ++k) out.push_back(sm.eq_neg[at(f ? &f->eq : nullptr, k)]);
    }
    return out;
}

// FlagMap induced by renaming template atoms and parameter pairs.
template <class Atoms, class Pairs>
FlagMap induced_map(const Model& m, Atoms&& map_atom, Pairs&& map_pair) {
    FlagMap f;
    for (std::size_t s = 0; s < m.schemas.size(); ++s) {
        const auto& sm = m.schemas[s];
        auto find = [](const std::vector<Template>& ts, int pred, const std::vector<int>& args) {
            for (std::size_t k = 0; k < ts.size(); ++k) {
                if (ts[k].pred == pred && ts[k].args == args) return k;
            }
            throw std::logic_error("template image missing");
        };
        std::vector<std::size_t> fl;
        std::vector<std::size_t> stt;
        std::vector<std::size_t> eqs;
        for (const auto& t : sm.fluent) {
            auto [p, args] = map_atom(s, false, t.pred, t.args);
            fl.push_back(find(sm.fluent, p, args));
        }
        for (const auto& t : sm.stat) {
            auto [p, args] = map_atom(s, true, t.pred, t.args);
            stt.push_back(find(sm.stat, p, args));
        }
        for (const auto& pr : sm.eq) {
            auto img = map_pair(s, pr);
            if (img.first > img.second) std::swap(img.first, img.second);
            eqs.push_back(static_cast<std::size_t>(std::find(sm.eq.begin(), sm.eq.end(), img) - sm.eq.begin()));
        }
        f.fluent.push_back(std::move(fl));
        f.stat.push_back(std::move(stt));
        f.eq.push_back(std::move(eqs));
    }
    return f;
}

// Lex-leader constraints over the flags for parameter transpositions within
// a schema, argument transpositions of a predicate and swaps of predicates
// of equal arity.
void break_flag_symmetry(Cnf& cnf, const Model& m) {
    auto x = flag_vector(m, nullptr);
    auto id_pair = [](std::size_t, std::pair<int, int> pr) { return pr; };
    for (std::size_t s = 0; s < m.schemas.size(); ++s) {
        for (int i = 0; i < m.schemas[s].arity; ++i) {
            for (int j = i + 1; j < m.schemas[s].arity; ++j) {
                auto sw = [&](std::size_t sc, int a) { return sc == s ? (a == i ? j : a == j ? i : a) : a; };
                auto f = induced_map(
                    m,
                    [&](std::size_t sc, bool, int p, std::vector<int> args) {
                        for (int& a : args) a = sw(sc, a);
                        return std::pair{p, args};
                    },
                    [&](std::size_t sc, std::pair<int, int> pr) { return std::pair{sw(sc, pr.first), sw(sc, pr.second)}; });
                lex_leq(cnf, x, flag_vector(m, &f));
            }
        }
    }
    for (std::size_t p = 0; p < m.fluent_arity.size(); ++p) {
        for (int i = 0; i < m.fluent_arity[p]; ++i) {
            for (int j = i + 1; j < m.fluent_arity[p]; ++j) {
                auto f = induced_map(
                    m,
                    [&](std::size_t, bool is_static, int q, std::vector<int> args) {
                        if (!is_static && q == static_cast<int>(p))
                            std::swap(args[static_cast<std::size_t>(i)], args[static_cast<std::size_t>(j)]);
                        return std::pair{q, args};
                    },
                    id_pair);
                lex_leq(cnf, x, flag_vector(m, &f));
            }
        }
        for (std::size_t p2 = p + 1; p2 < m.fluent_arity.size(); ++p2) {
            if (m.fluent_arity[p2] != m.fluent_arity[p]) continue;
            auto f = induced_map(
                m,
                [&](std::size_t, bool is_static, int q, std::vector<int> args) {
                    if (!is_static && q == static_cast<int>(p)) q = static_cast<int>(p2);
                    else if (!is_static && q == static_cast<int>(p2)) q = static_cast<int>(p);
                    return std::pair{q, args};
                },
                id_pair);
            lex_leq(cnf, x, flag_vector(m, &f));
        }
    }
}

// Constant flags mirroring a given domain. fluent_of/static_of map domain
// predicate indices to model indices (-1 when not of that kind).
Model frozen_model(Cnf& cnf, const Domain& d, std::vector<int>& fluent_of, std::vector<int>& static_of) {
    Model m;
    fluent_of.assign(d.predicates().size(), -1);
    static_of.assign(d.predicates().size(), -1);
    for (std::size_t p = 0; p < d.predicates().size(); ++p) {
        const auto& pred = d.predicates()[p];
        if (d.is_equality(static_cast<int>(p))) continue;
        if (pred.kind == PredicateKind::Fluent) {
            fluent_of[p] = static_cast<int>(m.fluent_arity.size());
            m.fluent_arity.push_back(pred.arity);
        } else {
            static_of[p] = static_cast<int>(m.static_arity.size());
            m.static_arity.push_back(pred.arity);
        }
    }
    for (const auto& s : d.schemas()) {
        SchemaModel sm;
        sm.name = s.name;
        sm.arity = s.arity();
        auto fluent_slot = [&](const Atom& a) {
            int mp = fluent_of[static_cast<std::size_t>(a.predicate)];
            for (std::size_t k = 0; k < sm.fluent.size(); ++k) {
                if (sm.fluent[k].pred == mp && sm.fluent[k].args == a.args) return k;
            }
            sm.fluent.push_back(make_template(mp, a.args));
            sm.pre.push_back(cnf.no());
            sm.pre_neg.push_back(cnf.no());
            sm.add.push_back(cnf.no());
            sm.del.push_back(cnf.no());
            return sm.fluent.size() - 1;
        };
        for (const auto& l : s.pre) {
            auto k = fluent_slot(l.atom);
            (l.positive ? sm.pre : sm.pre_neg)[k] = cnf.yes();
        }
        for (const auto& l : s.eff) {
            auto k = fluent_slot(l.atom);
            (l.positive ? sm.add : sm.del)[k] = cnf.yes();
        }
        for (const auto& l : s.static_pre) {
            if (d.is_equality(l.atom.predicate)) {
                sm.eq.emplace_back(l.atom.args[0], l.atom.args[1]);
                sm.eq_pos.push_back(l.positive ? cnf.yes() : cnf.no());
                sm.eq_neg.push_back(l.positive ? cnf.no() : cnf.yes());
            } else {
                sm.stat.push_back(make_template(static_of[static_cast<std::size_t>(l.atom.predicate)], l.atom.args));
                sm.spos.push_back(l.positive ? cnf.yes() : cnf.no());
                sm.sneg.push_back(l.positive ? cnf.no() : cnf.yes());
            }
        }
        m.schemas.push_back(std::move(sm));
    }
    return m;
}

std::vector<std::string> object_names(int n) {
    std::vector<std::string> out;
    for (int o = 0; o < n; ++o) out.push_back("o" + std::to_string(o));
    return out;
}

// Instance and node states read off a model of one graph encoding.
struct Extracted {
    Instance instance;
    std::vector<State> states;
};

Extracted extract(sat::Solver& solver, const GraphEncoding& enc, const Graph& g, int n,
                  const std::shared_ptr<const Domain>& domain, const std::vector<int>& fluent_pred,
                  const std::vector<int>& static_pred, const std::vector<int>& fluent_arity,
                  const std::vector<int>& static_arity, const std::string& name) {
    auto read_atoms = [&](const std::vector<Lit>& lits, const std::vector<int>& base, const std::vector<int>& arity,
                          const std::vector<int>& pred) {
        std::vector<Atom> atoms;
        for (std::size_t p = 0; p < base.size(); ++p) {
            if (pred[p] < 0) continue;
            int count = ipow(n, arity[p]);
            for (int q = 0; q < count; ++q) {
                if (solver.value(lits[static_cast<std::size_t>(base[p] + q)]))
                    atoms.push_back(Atom{pred[p], unrank(q, arity[p], n)});
            }
        }
        return atoms;
    };
    auto init = read_atoms(enc.h()[static_cast<std::size_t>(init_node(g))], enc.fluent_base(), fluent_arity, fluent_pred);
    auto statics = read_atoms(enc.st(), enc.static_base(), static_arity, static_pred);
    init.insert(init.end(), statics.begin(), statics.end());
    Extracted out{Instance(domain, name, object_names(n), init, {}), {}};
    for (int v = 0; v < g.num_nodes; ++v) {
        std::vector<int> ids;
        for (const auto& a : read_atoms(enc.h()[static_cast<std::size_t>(v)], enc.fluent_base(), fluent_arity, fluent_pred))
            ids.push_back(out.instance.atom_id(a));
        std::sort(ids.begin(), ids.end());
        out.states.emplace_back(std::move(ids));
    }
    return out;
}

std::shared_ptr<const Domain> build_domain(sat::Solver& solver, const Model& m, std::vector<int>& fluent_pred,
                                           std::vector<int>& static_pred) {
    std::vector<Predicate> preds;
    for (std::size_t p = 0; p < m.fluent_arity.size(); ++p) {
        fluent_pred.push_back(static_cast<int>(preds.size()));
        preds.push_back({"p" + std::to_string(p), m.fluent_arity[p], PredicateKind::Fluent});
    }
    bool static_used = false;
    for (const auto& sm : m.schemas) {
        for (Lit f : sm.spos) static_used = static_used || solver.value(f);
    }
    for (std::size_t p = 0; p < m.static_arity.size(); ++p) {
        static_pred.push_back(static_used ? static_cast<int>(preds.size()) : -1);
        if (static_used) preds.push_back({"st", m.static_arity[p], PredicateKind::Static});
    }
    int eq = static_cast<int>(preds.size());
    preds.push_back({kEquality, 2, PredicateKind::Static});

    std::vector<ActionSchema> schemas;
    for (const auto& sm : m.schemas) {
        ActionSchema s;
        s.name = sm.name;
        for (int i = 0; i < sm.arity; ++i) s.params.push_back("x" + std::to_string(i));
        for (std::size_t k = 0; k < sm.fluent.size(); ++k) {
            Atom a{fluent_pred[static_cast<std::size_t>(sm.fluent[k].pred)], sm.fluent[k].args};
            if (solver.value(sm.pre[k])) s.pre.push_back({a, true});
            if (solver.value(sm.add[k])) s.eff.push_back({a, true});
            if (solver.value(sm.del[k])) s.eff.push_back({a, false});
        }
        for (std::size_t k = 0; k < sm.stat.size(); ++k) {
            if (solver.value(sm.spos[k]))
                s.static_pre.push_back({Atom{static_pred[static_cast<std::size_t>(sm.stat[k].pred)], sm.stat[k].args}, true});
        }
        for (std::size_t k = 0; k < sm.eq.size(); ++k) {
            if (solver.value(sm.eq_neg[k])) s.static_pre.push_back({Atom{eq, {sm.eq[k].first, sm.eq[k].second}}, false});
        }
        std::sort(s.pre.begin(), s.pre.end());
        std::sort(s.eff.begin(), s.eff.end());
        schemas.push_back(std::move(s));
    }
    return std::make_shared<const Domain>("learned", std::move(preds), std::move(schemas));
}

std::optional<std::string> precheck(const Structure& st, std::span<const Graph> graphs, const std::vector<int>& objects) {
    for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
        const auto& g = graphs[gi];
        int n = objects[gi];
        long long atoms = 0;
        for (int a : st.predicate_arities) atoms += ipow(n, a);
        if (atoms < 62 && (1LL << atoms) < g.num_nodes) return "too few atoms for graph " + std::to_string(gi);
        auto out = g.out_edges();
        for (std::size_t l = 0; l < st.labels.size(); ++l) {
            int cap = ipow(n, st.schema_arities[l]);
            for (const auto& es : out) {
                int deg = 0;
                for (int e : es) deg += g.edges[static_cast<std::size_t>(e)].label == st.labels[l] ? 1 : 0;
                if (deg > cap) return "out-degree of '" + st.labels[l] + "' exceeds bindings in graph " + std::to_string(gi);
            }
        }
    }
    return std::nullopt;
}

}  // namespace

int Structure::cost() const {
    int c = 0;
    for (int a : predicate_arities) c += 1 + a;
    for (int a : schema_arities) c += 1 + a;
    return c;
}

std::string Structure::to_string() const {
    std::ostringstream os;
    os << "predicates(";
    for (std::size_t i = 0; i < predicate_arities.size(); ++i) os << (i ? "," : "") << predicate_arities[i];
    os << ") schemas(";
    for (std::size_t i = 0; i < labels.size(); ++i) os << (i ? "," : "") << labels[i] << "/" << schema_arities[i];
    os << ") cost " << cost();
    return os.str();
}

std::string to_string(ModelStatus s) {
    switch (s) {
        case ModelStatus::Found: return "Found";
        case ModelStatus::Infeasible: return "Infeasible";
        case ModelStatus::Timeout: return "Timeout";
    }
    return "?";
}

std::vector<Structure> enumerate_structures(const std::vector<std::string>& labels, const HypothesisSpace& space) {
    std::vector<std::string> sorted = labels;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

    std::vector<std::vector<int>> pred_sets{{}};
    for (int len = 1; len <= space.max_predicates; ++len) {
        for_each_tuple(space.max_pred_arity + 1, len, [&](const std::vector<int>& t) {
            if (std::is_sorted(t.begin(), t.end())) pred_sets.push_back(t);
        });
    }
    std::vector<int> bounds;
    for (const auto& l : sorted) {
        auto it = space.schema_arity.find(l);
        bounds.push_back(it == space.schema_arity.end() ? space.max_schema_arity : it->second);
    }
    std::vector<std::vector<int>> schema_sets;
    std::vector<int> cur(sorted.size(), 0);
    auto rec = [&](auto&& self, std::size_t i) -> void {
        if (i == sorted.size()) {
            schema_sets.push_back(cur);
            return;
        }
        for (int a = 0; a <= bounds[i]; ++a) {
            cur[i] = a;
            self(self, i + 1);
        }
    };
    rec(rec, 0);

    std::vector<Structure> out;
    for (const auto& p : pred_sets) {
        for (const auto& s : schema_sets) out.push_back(Structure{p, sorted, s});
    }
    std::stable_sort(out.begin(), out.end(), [](const Structure& a, const Structure& b) {
        if (a.cost() != b.cost()) return a.cost() < b.cost();
        if (a.predicate_arities != b.predicate_arities) return a.predicate_arities < b.predicate_arities;
        return a.schema_arities < b.schema_arities;
    });
    return out;
}

int cost(const Domain& domain) {
    int c = 0;
    for (const auto& s : domain.schemas()) c += 1 + s.arity();
    for (std::size_t p = 0; p < domain.predicates().size(); ++p) {
        const auto& pred = domain.predicates()[p];
        if (pred.kind == PredicateKind::Fluent && !domain.is_equality(static_cast<int>(p))) c += 1 + pred.arity;
    }
    return c;
}

namespace {

// Adds the encodings' stages one at a time; Unsat on a prefix is final.
sat::Result solve_staged(Cnf& cnf, std::vector<GraphEncoding*> encs, const ModelConfig& config) {
    int stages = 0;
    for (auto* e : encs) stages = std::max(stages, e->stages());
    auto r = sat::Result::Sat;
    for (int k = 1; k <= stages; ++k) {
        for (auto* e : encs) e->add_stage(k);
        r = cnf.solver().solve({}, sat::Limits{-1, config.deadline});
        if (r != sat::Result::Sat) return r;
    }
    return r;
}

// Greedily switches off schema flags: each query assumes every currently
// false flag and one more false. Accepted models only lose flags.
void minimize_flags(Cnf& cnf, const Model& model, const ModelConfig& config) {
    auto& solver = cnf.solver();
    std::vector<Lit> flags;
    for (Lit f : flag_vector(model, nullptr)) {
        if (!cnf.is_true(f) && !cnf.is_false(f)) flags.push_back(f);
    }
    std::vector<char> on(flags.size());
    for (std::size_t i = 0; i < flags.size(); ++i) on[i] = solver.value(flags[i]) ? 1 : 0;
    auto assumptions = [&](std::optional<std::size_t> extra) {
        std::vector<Lit> a;
        for (std::size_t i = 0; i < flags.size(); ++i) {
            if (!on[i] || (extra && *extra == i)) a.push_back(~flags[i]);
        }
        return a;
    };
    // A flag that cannot be dropped within the budget stays on.
    constexpr std::int64_t kConflictsPerFlag = 2000;
    bool model_current = true;
    for (std::size_t i = 0; i < flags.size(); ++i) {
        if (!on[i]) continue;
        if (config.deadline && Clock::now() >= *config.deadline) break;
        auto a = assumptions(i);
        auto r = solver.solve(a, sat::Limits{kConflictsPerFlag, config.deadline});
        model_current = r == sat::Result::Sat;
        if (r == sat::Result::Sat) {
            for (std::size_t j = 0; j < flags.size(); ++j) on[j] = solver.value(flags[j]) ? 1 : 0;
        }
    }
    if (!model_current) {
        auto a = assumptions(std::nullopt);
        if (solver.solve(a) != sat::Result::Sat) throw std::logic_error("lost the model while minimizing flags");
    }
}

}  // namespace

ModelResult learn_domain(std::span<const Graph> graphs_in, const HypothesisSpace& space, const ModelConfig& config) {
    if (space.objects.size() != graphs_in.size())
        throw std::invalid_argument("one object count per input graph is required");
    std::vector<Graph> graphs;
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < graphs_in.size(); ++i) {
        graphs_in[i].validate();
        if (!graphs_in[i].edges.empty() && !graphs_in[i].labeled())
            throw std::invalid_argument("graph " + std::to_string(i) + " is unlabeled");
        if (space.objects[i] < 0) throw std::invalid_argument("negative object count");
        check_reachable(graphs_in[i], i);
        graphs.push_back(action_type_labels(graphs_in[i]));
        for (const auto& e : graphs.back().edges) labels.push_back(*e.label);
    }

    ModelResult result;
    for (const auto& st : enumerate_structures(labels, space)) {
        auto t0 = Clock::now();
        if (config.deadline && Clock::now() >= *config.deadline) {
            result.status = ModelStatus::Timeout;
            result.diagnosis = "deadline reached before " + st.to_string();
            return result;
        }
        if (auto why = precheck(st, graphs, space.objects)) {
            result.probes.push_back({st, "pruned: " + *why, ms_since(t0)});
            continue;
        }
        Cnf cnf;
        Model model = learnable_model(cnf, st, space);
        break_flag_symmetry(cnf, model);
        std::vector<std::unique_ptr<GraphEncoding>> encs;
        std::vector<GraphEncoding*> raw;
        for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
            encs.push_back(std::make_unique<GraphEncoding>(cnf, model, graphs[gi], space.objects[gi],
                                                           *edge_schemas(graphs[gi], model)));
            raw.push_back(encs.back().get());
        }
        auto r = solve_staged(cnf, raw, config);
        if (r == sat::Result::Unknown) {
            result.probes.push_back({st, "timeout", ms_since(t0)});
            result.status = ModelStatus::Timeout;
            result.diagnosis = "deadline reached while probing " + st.to_string();
            return result;
        }
        if (r == sat::Result::Unsat) {
            result.probes.push_back({st, "unsat", ms_since(t0)});
            continue;
        }
        minimize_flags(cnf, model, config);
        DomainHypothesis hyp;
        std::vector<int> fluent_pred;
        std::vector<int> static_pred;
        hyp.domain = build_domain(cnf.solver(), model, fluent_pred, static_pred);
        hyp.structure = st;
        hyp.cost = cost(*hyp.domain);
        for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
            auto ex = extract(cnf.solver(), *encs[gi], graphs[gi], space.objects[gi], hyp.domain, fluent_pred,
                              static_pred, model.fluent_arity, model.static_arity, "learned-g" + std::to_string(gi));
            auto sp = expand(ex.instance);
            if (!isomorphic(action_type_labels(sp.graph), graphs[gi], true))
                throw std::logic_error("learned domain does not reproduce graph " + std::to_string(gi));
            hyp.instances.push_back(std::move(ex.instance));
            hyp.node_states.push_back(std::move(ex.states));
        }
        result.probes.push_back({st, "sat", ms_since(t0)});
        result.hypothesis = std::move(hyp);
        result.status = ModelStatus::Found;
        return result;
    }
    result.status = ModelStatus::Infeasible;
    result.diagnosis = "no structure within the hypothesis space reproduces the graphs";
    return result;
}

DomainValidation validate_domain(std::shared_ptr<const Domain> domain, const Graph& graph_in, int max_objects,
                                 const ModelConfig& config) {
    graph_in.validate();
    if (!graph_in.edges.empty() && !graph_in.labeled()) throw std::invalid_argument("graph is unlabeled");
    check_reachable(graph_in, 0);
    Graph graph = action_type_labels(graph_in);
    DomainValidation out;
    for (int n = max_objects; n >= 0; --n) {
        if (config.deadline && Clock::now() >= *config.deadline) {
            out.timed_out = true;
            out.detail = "deadline reached at " + std::to_string(n) + " objects";
            return out;
        }
        Cnf cnf;
        std::vector<int> fluent_of;
        std::vector<int> static_of;
        Model model = frozen_model(cnf, *domain, fluent_of, static_of);
        model.static_order = config.ordered_statics;
        auto es = edge_schemas(graph, model);
        if (!es) {
            out.detail = "graph uses a label with no matching schema";
            return out;
        }
        long long atoms = 0;
        for (int a : model.fluent_arity) atoms += ipow(n, a);
        if (atoms < 62 && (1LL << atoms) < graph.num_nodes) continue;
        GraphEncoding enc(cnf, model, graph, n, *es);
        auto r = solve_staged(cnf, {&enc}, config);
        if (r == sat::Result::Unknown) {
            out.timed_out = true;
            out.detail = "deadline reached at " + std::to_string(n) + " objects";
            return out;
        }
        if (r == sat::Result::Unsat) continue;

        std::vector<int> fluent_pred(model.fluent_arity.size());
        std::vector<int> static_pred(model.static_arity.size());
        for (std::size_t p = 0; p < fluent_of.size(); ++p) {
            if (fluent_of[p] >= 0) fluent_pred[static_cast<std::size_t>(fluent_of[p])] = static_cast<int>(p);
            if (static_of[p] >= 0) static_pred[static_cast<std::size_t>(static_of[p])] = static_cast<int>(p);
        }
        auto ex = extract(cnf.solver(), enc, graph, n, domain, fluent_pred, static_pred, model.fluent_arity,
                          model.static_arity, domain->name() + "-witness");
        auto sp = expand(ex.instance);
        if (!isomorphic(action_type_labels(sp.graph), graph, true))
            throw std::logic_error("validation witness does not reproduce the graph");
        out.valid = true;
        out.objects = n;
        out.witness = std::move(ex.instance);
        return out;
    }
    out.detail = "no instance with at most " + std::to_string(max_objects) + " objects reproduces the graph";
    return out;
}

}  // namespace gplan
