#include "gplan/pddl.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace gplan::pddl {

namespace {

struct Sexp {
    bool list = false;
    std::string text;
    std::vector<Sexp> items;
    int line = 1;
    int col = 1;

    [[nodiscard]] bool is(std::string_view word) const { return !list && text == word; }
    [[nodiscard]] bool head_is(std::string_view word) const {
        return list && !items.empty() && items.front().is(word);
    }
};

// Thrown to stop at a structural error after its diagnostic was recorded.
struct Abort {};

class Reader {
public:
    explicit Reader(std::string_view text) : text_(text) {}

    std::vector<Diagnostic> diags;

    void error(const Sexp& at, std::string msg) { diags.push_back({at.line, at.col, Severity::Error, std::move(msg)}); }
    void warning(const Sexp& at, std::string msg) {
        diags.push_back({at.line, at.col, Severity::Warning, std::move(msg)});
    }
    [[noreturn]] void fail(const Sexp& at, std::string msg) {
        error(at, std::move(msg));
        throw Abort{};
    }
    [[nodiscard]] bool has_errors() const {
        return std::any_of(diags.begin(), diags.end(), [](const Diagnostic& d) { return d.severity == Severity::Error; });
    }

    std::vector<Sexp> read_all() {
        std::vector<Sexp> out;
        skip_space();
        while (pos_ < text_.size()) {
            out.push_back(read());
            skip_space();
        }
        return out;
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;

    void advance() {
        if (text_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    void skip_space() {
        while (pos_ < text_.size()) {
            char c = text_[pos_];
            if (c == ';') {
                while (pos_ < text_.size() && text_[pos_] != '\n') advance();
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else {
                break;
            }
        }
    }

    Sexp read() {
        Sexp e;
        e.line = line_;
        e.col = col_;
        char c = text_[pos_];
        if (c == ')') fail(e, "unexpected ')'");
        if (c == '(') {
            e.list = true;
            advance();
            for (;;) {
                skip_space();
                if (pos_ >= text_.size()) fail(e, "unbalanced '(': missing ')'");
                if (text_[pos_] == ')') {
                    advance();
                    return e;
                }
                e.items.push_back(read());
            }
        }
        while (pos_ < text_.size()) {
            c = text_[pos_];
            if (c == '(' || c == ')' || c == ';' || std::isspace(static_cast<unsigned char>(c))) break;
            e.text.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
            advance();
        }
        return e;
    }
};

const std::set<std::string> kSupportedRequirements{":strips", ":negative-preconditions", ":equality"};

std::string expect_word(Reader& r, const Sexp& e, const char* what) {
    if (e.list) r.fail(e, std::string("expected ") + what);
    return e.text;
}

// "(define (<kind> name) ...)" -> name and the remaining sections.
std::pair<std::string, std::vector<const Sexp*>> open_define(Reader& r, const std::vector<Sexp>& top,
                                                              const char* kind) {
    Sexp origin;
    if (top.empty()) r.fail(origin, "empty input");
    if (top.size() > 1) r.fail(top[1], "unexpected text after the define form");
    const Sexp& d = top.front();
    if (!d.head_is("define")) r.fail(d, "expected (define ...)");
    if (d.items.size() < 2 || !d.items[1].head_is(kind) || d.items[1].items.size() != 2)
        r.fail(d, std::string("expected (") + kind + " <name>)");
    std::string name = expect_word(r, d.items[1].items[1], "a name");
    std::vector<const Sexp*> sections;
    for (std::size_t i = 2; i < d.items.size(); ++i) {
        const Sexp& s = d.items[i];
        if (!s.list || s.items.empty() || s.items.front().list) r.fail(s, "expected a (:section ...) form");
        sections.push_back(&s);
    }
    return {name, sections};
}

std::set<std::string> read_requirements(Reader& r, const Sexp& section) {
    std::set<std::string> reqs;
    for (std::size_t i = 1; i < section.items.size(); ++i) {
        const Sexp& f = section.items[i];
        std::string flag = expect_word(r, f, "a requirement flag");
        if (!kSupportedRequirements.count(flag)) {
            r.error(f, "unsupported requirement '" + flag + "'");
        } else {
            reqs.insert(flag);
        }
    }
    return reqs;
}

struct LiteralContext {
    const std::vector<Predicate>* predicates = nullptr;
    std::unordered_map<std::string, int> predicate_index;
    int equality = -1;  // index once used
    bool equality_allowed = false;
    bool negation_used = false;
};

// Parses a literal or a conjunction of literals; terms resolved by `term`.
template <class TermFn>
std::vector<Literal> read_conjunction(Reader& r, const Sexp& e, LiteralContext& ctx, bool allow_negation,
                                      bool allow_equality, TermFn&& term) {
    std::vector<Literal> out;
    auto read_atom = [&](const Sexp& a, bool positive) -> std::optional<Literal> {
        if (!a.list || a.items.empty() || a.items.front().list) {
            r.error(a, "expected an atom");
            return std::nullopt;
        }
        const std::string& name = a.items.front().text;
        static const std::set<std::string> kUnsupported{"or", "forall", "exists", "imply", "when", "and", "not",
                                                        "increase", "decrease", "assign"};
        if (kUnsupported.count(name)) {
            r.error(a, "unsupported construct '" + name + "'");
            return std::nullopt;
        }
        Literal lit;
        lit.positive = positive;
        if (name == kEquality) {
            if (!allow_equality) {
                r.error(a, "equality is not allowed here");
                return std::nullopt;
            }
            if (!ctx.equality_allowed) {
                r.error(a, "equality requires the :equality requirement");
                return std::nullopt;
            }
            if (ctx.equality < 0) {
                ctx.equality = static_cast<int>(ctx.predicate_index.size());
                ctx.predicate_index[kEquality] = ctx.equality;
            }
            lit.atom.predicate = ctx.equality;
            if (a.items.size() != 3) {
                r.error(a, "equality takes 2 arguments");
                return std::nullopt;
            }
        } else {
            auto it = ctx.predicate_index.find(name);
            if (it == ctx.predicate_index.end()) {
                r.error(a.items.front(), "undeclared predicate '" + name + "'");
                return std::nullopt;
            }
            lit.atom.predicate = it->second;
            const auto& p = (*ctx.predicates)[static_cast<std::size_t>(it->second)];
            if (static_cast<int>(a.items.size()) - 1 != p.arity) {
                r.error(a, "predicate '" + name + "' expects " + std::to_string(p.arity) + " argument(s), got " +
                               std::to_string(a.items.size() - 1));
                return std::nullopt;
            }
        }
        for (std::size_t i = 1; i < a.items.size(); ++i) {
            std::optional<int> t = term(a.items[i]);
            if (!t) return std::nullopt;
            lit.atom.args.push_back(*t);
        }
        return lit;
    };
    auto read_literal = [&](const Sexp& l) {
        if (l.head_is("not")) {
            if (l.items.size() != 2) {
                r.error(l, "'not' takes one argument");
                return;
            }
            if (!allow_negation) {
                r.error(l, "negation is not allowed here");
                return;
            }
            ctx.negation_used = true;
            if (auto lit = read_atom(l.items[1], false)) out.push_back(*lit);
        } else if (auto lit = read_atom(l, true)) {
            out.push_back(*lit);
        }
    };
    if (e.list && e.items.empty()) return out;
    if (e.head_is("and")) {
        for (std::size_t i = 1; i < e.items.size(); ++i) read_literal(e.items[i]);
    } else {
        read_literal(e);
    }
    return out;
}

}  // namespace

std::string Diagnostic::format(std::string_view file) const {
    std::ostringstream os;
    os << file << ':' << line << ':' << col << ": " << (severity == Severity::Error ? "error" : "warning") << ": "
       << message;
    return os.str();
}

namespace {
std::string join_diagnostics(const std::string& file, const std::vector<Diagnostic>& diags) {
    std::string s;
    for (const auto& d : diags) {
        if (!s.empty()) s += "\n";
        s += d.format(file);
    }
    return s;
}
}  // namespace

ParseError::ParseError(std::string file, std::vector<Diagnostic> diagnostics)
    : std::runtime_error(join_diagnostics(file, diagnostics)), diagnostics_(std::move(diagnostics)) {}

DomainResult parse_domain(std::string_view text, std::optional<std::set<std::string>> static_override) {
    Reader r(text);
    DomainResult result;
    try {
        auto top = r.read_all();
        auto [name, sections] = open_define(r, top, "domain");
        std::set<std::string> reqs;
        std::vector<Predicate> predicates;
        LiteralContext ctx;
        std::vector<const Sexp*> actions;
        bool seen_predicates = false;
        for (const Sexp* s : sections) {
            const std::string& key = s->items.front().text;
            if (key == ":requirements") {
                auto more = read_requirements(r, *s);
                reqs.insert(more.begin(), more.end());
            } else if (key == ":predicates") {
                if (seen_predicates) r.error(*s, "duplicate :predicates section");
                seen_predicates = true;
                for (std::size_t i = 1; i < s->items.size(); ++i) {
                    const Sexp& p = s->items[i];
                    if (!p.list || p.items.empty() || p.items.front().list) {
                        r.error(p, "expected a predicate declaration");
                        continue;
                    }
                    Predicate pred;
                    pred.name = p.items.front().text;
                    if (pred.name == kEquality) {
                        r.error(p, "'=' is built in and cannot be declared");
                        continue;
                    }
                    bool ok = true;
                    for (std::size_t k = 1; k < p.items.size(); ++k) {
                        const Sexp& v = p.items[k];
                        if (v.is("-")) {
                            r.error(v, "unsupported construct 'typing'");
                            ok = false;
                            break;
                        }
                        if (v.list || v.text.empty() || v.text[0] != '?') {
                            r.error(v, "expected a variable");
                            ok = false;
                            break;
                        }
                    }
                    if (!ok) continue;
                    pred.arity = static_cast<int>(p.items.size()) - 1;
                    if (ctx.predicate_index.count(pred.name)) {
                        r.error(p, "duplicate predicate '" + pred.name + "'");
                        continue;
                    }
                    ctx.predicate_index[pred.name] = static_cast<int>(predicates.size());
                    predicates.push_back(pred);
                }
            } else if (key == ":action") {
                actions.push_back(s);
            } else {
                r.error(*s, "unsupported construct '" + key + "'");
            }
        }
        ctx.equality_allowed = reqs.count(":equality") > 0;
        ctx.predicates = &predicates;

        // Equality is appended after all declared predicates.
        std::vector<Predicate> all_predicates = predicates;
        ctx.predicates = &all_predicates;
        all_predicates.push_back({kEquality, 2, PredicateKind::Static});

        std::vector<ActionSchema> schemas;
        std::set<std::string> schema_names;
        for (const Sexp* a : actions) {
            if (a->items.size() < 2 || a->items[1].list) {
                r.error(*a, "expected an action name");
                continue;
            }
            ActionSchema schema;
            schema.name = a->items[1].text;
            if (!schema_names.insert(schema.name).second) {
                r.error(a->items[1], "duplicate action '" + schema.name + "'");
                continue;
            }
            const Sexp* params = nullptr;
            const Sexp* pre = nullptr;
            const Sexp* eff = nullptr;
            bool ok = true;
            for (std::size_t i = 2; i < a->items.size(); i += 2) {
                const Sexp& k = a->items[i];
                if (i + 1 >= a->items.size()) {
                    r.error(k, "missing value after '" + k.text + "'");
                    ok = false;
                    break;
                }
                const Sexp* v = &a->items[i + 1];
                if (k.is(":parameters")) {
                    params = v;
                } else if (k.is(":precondition")) {
                    pre = v;
                } else if (k.is(":effect")) {
                    eff = v;
                } else {
                    r.error(k, "unsupported construct '" + (k.list ? std::string("(...)") : k.text) + "'");
                    ok = false;
                }
            }
            if (!ok) continue;
            if (params) {
                if (!params->list) {
                    r.error(*params, "expected a parameter list");
                    continue;
                }
                for (const Sexp& v : params->items) {
                    if (v.is("-")) {
                        r.error(v, "unsupported construct 'typing'");
                        ok = false;
                        break;
                    }
                    if (v.list || v.text.size() < 2 || v.text[0] != '?') {
                        r.error(v, "expected a variable");
                        ok = false;
                        break;
                    }
                    std::string pname = v.text.substr(1);
                    if (std::find(schema.params.begin(), schema.params.end(), pname) != schema.params.end()) {
                        r.error(v, "duplicate parameter '" + v.text + "'");
                        ok = false;
                        break;
                    }
                    schema.params.push_back(pname);
                }
                if (!ok) continue;
            }
            auto term = [&](const Sexp& t) -> std::optional<int> {
                if (t.list || t.text.empty() || t.text[0] != '?') {
                    r.error(t, "expected a parameter variable (constants are unsupported)");
                    return std::nullopt;
                }
                auto it = std::find(schema.params.begin(), schema.params.end(), t.text.substr(1));
                if (it == schema.params.end()) {
                    r.error(t, "unknown variable '" + t.text + "'");
                    return std::nullopt;
                }
                return static_cast<int>(it - schema.params.begin());
            };
            std::size_t before = r.diags.size();
            if (pre) schema.pre = read_conjunction(r, *pre, ctx, true, true, term);
            if (!eff) {
                r.error(*a, "action '" + schema.name + "' has no :effect");
                continue;
            }
            const bool negative_pre = ctx.negation_used;
            schema.eff = read_conjunction(r, *eff, ctx, true, false, term);
            ctx.negation_used = negative_pre;
            if (r.diags.size() != before) continue;
            if (schema.eff.empty()) {
                r.error(*eff, "action '" + schema.name + "' has an empty effect");
                continue;
            }
            schemas.push_back(std::move(schema));
        }
        if (ctx.negation_used && !reqs.count(":negative-preconditions")) {
            r.warning(top.front(), "negative literals used without :negative-preconditions");
        }
        if (actions.empty()) r.warning(top.front(), "domain has no action schemas");
        if (ctx.equality < 0) all_predicates.pop_back();
        if (!r.has_errors()) {
            try {
                result.domain.emplace(name, std::move(all_predicates), std::move(schemas), std::move(static_override));
            } catch (const ValidationError& e) {
                r.error(top.front(), e.what());
            }
        }
    } catch (const Abort&) {
    }
    if (r.has_errors()) result.domain.reset();
    result.diagnostics = std::move(r.diags);
    return result;
}

ProblemResult parse_problem(std::string_view text, std::shared_ptr<const Domain> domain) {
    Reader r(text);
    ProblemResult result;
    try {
        auto top = r.read_all();
        auto [name, sections] = open_define(r, top, "problem");
        LiteralContext ctx;
        ctx.predicates = &domain->predicates();
        for (std::size_t i = 0; i < domain->predicates().size(); ++i) {
            if (!domain->is_equality(static_cast<int>(i)))
                ctx.predicate_index[domain->predicates()[i].name] = static_cast<int>(i);
        }
        std::vector<std::string> objects;
        std::unordered_map<std::string, int> object_index;
        const Sexp* init = nullptr;
        const Sexp* goal = nullptr;
        for (const Sexp* s : sections) {
            const std::string& key = s->items.front().text;
            if (key == ":domain") {
                if (s->items.size() != 2 || s->items[1].list) {
                    r.error(*s, "expected (:domain <name>)");
                } else if (s->items[1].text != domain->name()) {
                    r.warning(s->items[1], "problem names domain '" + s->items[1].text + "' but domain is '" +
                                               domain->name() + "'");
                }
            } else if (key == ":requirements") {
                read_requirements(r, *s);
            } else if (key == ":objects") {
                for (std::size_t i = 1; i < s->items.size(); ++i) {
                    const Sexp& o = s->items[i];
                    if (o.is("-")) {
                        r.error(o, "unsupported construct 'typing'");
                        break;
                    }
                    if (o.list || o.text.empty() || o.text[0] == '?') {
                        r.error(o, "expected an object name");
                        continue;
                    }
                    if (object_index.count(o.text)) {
                        r.error(o, "duplicate object '" + o.text + "'");
                        continue;
                    }
                    object_index[o.text] = static_cast<int>(objects.size());
                    objects.push_back(o.text);
                }
            } else if (key == ":init") {
                init = s;
            } else if (key == ":goal") {
                goal = s;
            } else {
                r.error(*s, "unsupported construct '" + key + "'");
            }
        }
        auto term = [&](const Sexp& t) -> std::optional<int> {
            if (t.list) {
                r.error(t, "expected an object");
                return std::nullopt;
            }
            auto it = object_index.find(t.text);
            if (it == object_index.end()) {
                r.error(t, "unknown object '" + t.text + "'");
                return std::nullopt;
            }
            return it->second;
        };
        std::vector<Atom> atoms;
        if (init) {
            for (std::size_t i = 1; i < init->items.size(); ++i) {
                auto lits = read_conjunction(r, init->items[i], ctx, false, false, term);
                for (auto& l : lits) atoms.push_back(std::move(l.atom));
            }
        }
        std::vector<Literal> goals;
        if (goal) {
            if (goal->items.size() != 2) {
                r.error(*goal, "expected (:goal <formula>)");
            } else {
                goals = read_conjunction(r, goal->items[1], ctx, true, false, term);
            }
        }
        if (!r.has_errors()) {
            try {
                result.instance.emplace(domain, name, std::move(objects), std::move(atoms), std::move(goals));
            } catch (const ValidationError& e) {
                r.error(goal ? *goal : top.front(), e.what());
            }
        }
    } catch (const Abort&) {
    }
    if (r.has_errors()) result.instance.reset();
    result.diagnostics = std::move(r.diags);
    return result;
}

namespace {

std::string atom_text(const Domain& d, const Atom& a, const std::vector<std::string>& names, const char* prefix) {
    std::string s = "(" + d.predicate(a.predicate).name;
    for (int x : a.args) s += std::string(" ") + prefix + names[static_cast<std::size_t>(x)];
    return s + ")";
}

std::string literal_text(const Domain& d, const Literal& l, const std::vector<std::string>& names, const char* prefix) {
    std::string a = atom_text(d, l.atom, names, prefix);
    return l.positive ? a : "(not " + a + ")";
}

std::string conjunction_text(const Domain& d, const std::vector<const Literal*>& lits,
                             const std::vector<std::string>& names, const char* prefix) {
    std::string s = "(and";
    for (const Literal* l : lits) s += " " + literal_text(d, *l, names, prefix);
    return s + ")";
}

}  // namespace

std::string print_domain(const Domain& domain) {
    bool negation = false;
    for (const auto& s : domain.schemas()) {
        for (const auto* v : {&s.pre, &s.static_pre, &s.eff}) {
            for (const auto& l : *v) negation = negation || !l.positive;
        }
    }
    std::ostringstream os;
    os << "(define (domain " << domain.name() << ")\n";
    os << "  (:requirements :strips";
    if (negation) os << " :negative-preconditions";
    if (domain.uses_equality()) os << " :equality";
    os << ")\n";
    os << "  (:predicates";
    for (std::size_t i = 0; i < domain.predicates().size(); ++i) {
        const auto& p = domain.predicates()[i];
        if (domain.is_equality(static_cast<int>(i))) continue;
        os << "\n    (" << p.name;
        for (int k = 0; k < p.arity; ++k) os << " ?x" << k;
        os << ")";
    }
    os << ")";
    for (const auto& s : domain.schemas()) {
        os << "\n  (:action " << s.name << "\n    :parameters (";
        for (std::size_t i = 0; i < s.params.size(); ++i) os << (i ? " ?" : "?") << s.params[i];
        os << ")\n";
        std::vector<const Literal*> pre;
        for (const auto& l : s.pre) pre.push_back(&l);
        for (const auto& l : s.static_pre) pre.push_back(&l);
        std::vector<const Literal*> eff;
        for (const auto& l : s.eff) eff.push_back(&l);
        os << "    :precondition " << conjunction_text(domain, pre, s.params, "?") << "\n";
        os << "    :effect " << conjunction_text(domain, eff, s.params, "?") << ")";
    }
    os << ")\n";
    return os.str();
}

std::string print_problem(const Instance& instance) {
    const Domain& d = instance.domain();
    std::ostringstream os;
    os << "(define (problem " << instance.name() << ")\n";
    os << "  (:domain " << d.name() << ")\n";
    os << "  (:objects";
    for (const auto& o : instance.objects()) os << " " << o;
    os << ")\n  (:init";
    for (const auto& a : instance.init()) os << "\n    " << atom_text(d, a, instance.objects(), "");
    os << ")\n  (:goal (and";
    for (const auto& l : instance.goal()) os << "\n    " << literal_text(d, l, instance.objects(), "");
    os << ")))\n";
    return os.str();
}

namespace {
std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}
}  // namespace

std::shared_ptr<const Domain> load_domain(const std::filesystem::path& path) {
    auto r = parse_domain(read_file(path));
    if (!r.domain) throw ParseError(path.string(), r.diagnostics);
    return std::make_shared<const Domain>(std::move(*r.domain));
}

Instance load_problem(const std::filesystem::path& path, std::shared_ptr<const Domain> domain) {
    auto r = parse_problem(read_file(path), std::move(domain));
    if (!r.instance) throw ParseError(path.string(), r.diagnostics);
    return std::move(*r.instance);
}

std::string print_plan(const Instance& instance, std::span<const GroundAction> actions,
                       std::span<const std::size_t> plan) {
    std::string s;
    for (std::size_t i : plan) s += instance.action_name(actions[i]) + "\n";
    return s;
}

std::vector<std::size_t> parse_plan(std::string_view text, const Instance& instance,
                                    std::span<const GroundAction> actions) {
    std::unordered_map<std::string, std::size_t> by_name;
    for (std::size_t i = 0; i < actions.size(); ++i) by_name.emplace(instance.action_name(actions[i]), i);
    std::vector<std::size_t> plan;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto c = line.find(';'); c != std::string::npos) line.erase(c);
        std::string norm;
        bool space = false;
        for (char ch : line) {
            if (std::isspace(static_cast<unsigned char>(ch))) {
                space = !norm.empty();
                continue;
            }
            if (space && norm.back() != '(' && ch != ')') norm.push_back(' ');
            space = false;
            norm.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
        }
        if (norm.empty()) continue;
        auto it = by_name.find(norm);
        if (it == by_name.end())
            throw ParseError("plan", {{lineno, 1, Severity::Error, "unknown ground action '" + norm + "'"}});
        plan.push_back(it->second);
    }
    return plan;
}

}  // namespace gplan::pddl
