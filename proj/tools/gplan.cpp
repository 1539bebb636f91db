// gplan: batch frontend. Every run writes a JSON report to --out (when
// given) and a short summary to stdout. Exit codes: 0 success, 1 the
// command ran but its verdict is negative, 2 usage or input error.

#include "gplan/bench.hpp"
#include "gplan/learner.hpp"
#include "gplan/model_learner.hpp"
#include "gplan/pddl.hpp"
#include "gplan/policy.hpp"
#include "gplan/state_space.hpp"
#include "gplan/width.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#ifndef GPLAN_VERSION
#define GPLAN_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace gplan;

namespace {

// Input and IO problems; mapped to exit code 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Common {
    std::string out;
    std::uint64_t seed = 0;
    int threads = 1;
    double timeout = 0;  // seconds, 0 = none
};

struct Run {
    std::string command;
    json inputs = json::object();
    json timings = json::object();
    json artifacts = json::object();
    json result = json::object();
    std::string outcome = "error";
    int code = 2;
};

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t) { return std::chrono::duration<double, std::milli>(Clock::now() - t).count(); }

std::optional<Clock::time_point> deadline_of(const Common& c) {
    if (c.timeout <= 0) return std::nullopt;
    return Clock::now() + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(c.timeout));
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw UsageError("cannot write " + path);
    out << text;
}

json read_json(const std::string& path) {
    try {
        return json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw UsageError(path + ": " + e.what());
    }
}

// --domain, or domain.pddl next to the problem file.
std::string domain_path(const std::string& given, const std::string& problem) {
    if (!given.empty()) return given;
    auto p = fs::path(problem).parent_path() / "domain.pddl";
    if (!fs::exists(p)) throw UsageError("no --domain given and " + p.string() + " does not exist");
    return p.string();
}

std::shared_ptr<const Domain> load_domain_file(const std::string& path) {
    if (!fs::exists(path)) throw UsageError("cannot read " + path);
    return pddl::load_domain(path);
}

std::shared_ptr<const Instance> load_instance(const std::shared_ptr<const Domain>& d, const std::string& path) {
    if (!fs::exists(path)) throw UsageError("cannot read " + path);
    return std::make_shared<const Instance>(pddl::load_problem(path, d));
}

Policy load_policy(const std::string& path, const Domain& d) { return policy_from_json(read_json(path), d); }

std::vector<Graph> load_graphs(const std::string& path, std::vector<int>* objects) {
    auto j = read_json(path);
    auto graphs = graphs_from_json(j);
    if (objects != nullptr && objects->empty()) {
        auto items = j.is_array() ? j : json::array({j});
        for (const auto& g : items) {
            if (!g.contains("objects")) {
                objects->clear();
                break;
            }
            objects->push_back(g["objects"].get<int>());
        }
    }
    for (const auto& g : graphs) g.validate();
    return graphs;
}

json segments_json(const std::vector<Segment>& segs) {
    auto a = json::array();
    for (const auto& s : segs) a.push_back({{"width", s.width}, {"length", s.length}});
    return a;
}

// ----------------------------------------------------------------------------

struct ExpandOpts {
    std::string domain, problem, graph_out, labels = "action";
    std::size_t max_states = 2'000'000;
};

void cmd_expand(const ExpandOpts& o, const Common& c, Run& r) {
    r.inputs = {{"domain", domain_path(o.domain, o.problem)}, {"problem", o.problem}, {"labels", o.labels}};
    auto d = load_domain_file(r.inputs["domain"]);
    auto inst = load_instance(d, o.problem);
    ExpandLimits lim{o.max_states, deadline_of(c)};
    auto t = Clock::now();
    auto sp = expand(*inst, lim);
    r.timings["expand_ms"] = ms_since(t);
    Graph g = o.labels == "type" ? action_type_labels(sp.graph) : sp.graph;
    std::size_t goals = std::count(sp.goal.begin(), sp.goal.end(), true);
    r.result = {{"states", g.num_nodes}, {"edges", g.edges.size()}, {"goal_states", goals}};
    if (!o.graph_out.empty()) {
        write_file(o.graph_out, graph_to_json(g).dump() + "\n");
        r.artifacts["graph"] = o.graph_out;
    }
    std::cout << "states " << g.num_nodes << " edges " << g.edges.size() << " goal states " << goals << "\n";
    r.outcome = "expanded";
    r.code = 0;
}

struct SiwOpts {
    std::string domain, problem, sketch, plan_out;
    int kmax = 2;
    std::size_t node_budget = 1'000'000;
};

void cmd_solve_siw(const SiwOpts& o, const Common&, Run& r) {
    r.inputs = {{"domain", domain_path(o.domain, o.problem)}, {"problem", o.problem}, {"sketch", o.sketch}, {"kmax", o.kmax}};
    auto d = load_domain_file(r.inputs["domain"]);
    auto inst = load_instance(d, o.problem);
    Policy sketch = o.sketch.empty() ? Policy{} : load_policy(o.sketch, *d);
    auto t = Clock::now();
    auto res = siw_r(*inst, sketch, SiwLimits{o.kmax, 1'000'000, o.node_budget});
    r.timings["search_ms"] = ms_since(t);
    int max_width = 0;
    for (const auto& s : res.segments) max_width = std::max(max_width, s.width);
    r.result = {{"solved", res.solved},     {"plan_length", res.plan.size()}, {"segments", segments_json(res.segments)},
                {"max_width", max_width},   {"generated", res.generated},     {"failure", res.failure}};
    if (!o.plan_out.empty() && res.solved) {
        std::string text;
        for (const auto& a : res.plan) text += a + "\n";
        write_file(o.plan_out, text);
        r.artifacts["plan"] = o.plan_out;
    }
    std::cout << (res.solved ? "solved" : "failed: " + res.failure) << ", plan length " << res.plan.size() << ", "
              << res.segments.size() << " segments, max width " << max_width << "\n";
    r.outcome = res.solved ? "solved" : "failed";
    r.code = res.solved ? 0 : 1;
}

struct VerifyOpts {
    std::string domain, policy;
    std::vector<std::string> problems;
    std::size_t max_states = 2'000'000;
};

void cmd_verify(const VerifyOpts& o, const Common& c, Run& r) {
    r.inputs = {{"domain", domain_path(o.domain, o.problems.front())}, {"policy", o.policy}, {"problems", o.problems}};
    auto d = load_domain_file(r.inputs["domain"]);
    auto policy = load_policy(o.policy, *d);
    auto per = json::array();
    std::string outcome = to_string(Outcome::Solves);
    auto t = Clock::now();
    for (const auto& p : o.problems) {
        auto inst = load_instance(d, p);
        auto v = verify(policy, *inst, ExpandLimits{o.max_states, deadline_of(c)}, c.threads);
        per.push_back({{"problem", p}, {"outcome", to_string(v.outcome)}, {"states", v.states}, {"detail", v.detail},
                       {"witness_length", v.witness.size()}});
        std::cout << p << ": " << to_string(v.outcome) << " (" << v.states << " states)\n";
        if (v.outcome != Outcome::Solves && outcome == to_string(Outcome::Solves)) outcome = to_string(v.outcome);
    }
    r.timings["verify_ms"] = ms_since(t);
    r.result = {{"instances", per}};
    r.outcome = outcome;
    r.code = outcome == to_string(Outcome::Solves) ? 0 : 1;
}

struct RunPolicyOpts {
    std::string domain, policy, problem, plan_out;
    std::size_t max_steps = 100'000;
    bool random = false;
};

void cmd_run_policy(const RunPolicyOpts& o, const Common& c, Run& r) {
    r.inputs = {{"domain", domain_path(o.domain, o.problem)}, {"policy", o.policy}, {"problem", o.problem},
                {"max_steps", o.max_steps}, {"random", o.random}};
    auto d = load_domain_file(r.inputs["domain"]);
    auto policy = load_policy(o.policy, *d);
    auto inst = load_instance(d, o.problem);
    auto t = Clock::now();
    auto ex = execute(policy, *inst, o.max_steps, o.random ? std::optional<std::uint64_t>(c.seed) : std::nullopt);
    r.timings["execute_ms"] = ms_since(t);
    r.result = {{"steps", ex.actions.size()}, {"plan", ex.actions}};
    if (!o.plan_out.empty()) {
        std::string text;
        for (const auto& a : ex.actions) text += a + "\n";
        write_file(o.plan_out, text);
        r.artifacts["plan"] = o.plan_out;
    }
    std::cout << to_string(ex.outcome) << " after " << ex.actions.size() << " steps\n";
    r.outcome = to_string(ex.outcome);
    r.code = ex.outcome == ExecOutcome::GoalReached ? 0 : 1;
}

struct WidthOpts {
    std::string domain, problem;
    int kmax = 2;
};

void cmd_width(const WidthOpts& o, const Common&, Run& r) {
    r.inputs = {{"domain", domain_path(o.domain, o.problem)}, {"problem", o.problem}, {"kmax", o.kmax}};
    auto d = load_domain_file(r.inputs["domain"]);
    auto inst = load_instance(d, o.problem);
    auto t = Clock::now();
    auto w = width(*inst, [&](const State& s) { return inst->is_goal(s); }, o.kmax);
    r.timings["search_ms"] = ms_since(t);
    r.result = {{"width", w.width ? json(*w.width) : json(nullptr)},
                {"plan_length", w.search.plan.size()},
                {"generated", w.search.generated}};
    if (w.width) {
        std::cout << "width " << *w.width << ", plan length " << w.search.plan.size() << "\n";
        r.outcome = "width " + std::to_string(*w.width);
        r.code = 0;
    } else {
        std::cout << "width exceeds " << o.kmax << "\n";
        r.outcome = "width > " + std::to_string(o.kmax);
        r.code = 1;
    }
}

struct LearnPolicyOpts {
    std::string domain, policy_out, criterion = "solvable", maxsat;
    std::vector<std::string> train, validate;
    int max_complexity = 8;
};

void cmd_learn_policy(const LearnPolicyOpts& o, const Common& c, Run& r) {
    r.inputs = {{"domain", domain_path(o.domain, o.train.front())}, {"train", o.train},
                {"validate", o.validate}, {"max_complexity", o.max_complexity}, {"criterion", o.criterion}};
    auto d = load_domain_file(r.inputs["domain"]);
    std::vector<std::shared_ptr<const Instance>> train, val;
    for (const auto& p : o.train) train.push_back(load_instance(d, p));
    for (const auto& p : o.validate) val.push_back(load_instance(d, p));
    LearnConfig cfg;
    cfg.max_complexity = o.max_complexity;
    cfg.criterion = o.criterion == "decreasing" ? GoodCriterion::Decreasing : GoodCriterion::Solvable;
    cfg.deadline = deadline_of(c);
    cfg.threads = c.threads;
    cfg.external_solver = o.maxsat;
    auto res = learn_policy(*d, train, val, cfg);
    r.timings = {{"pool_ms", res.report.pool_ms}, {"solve_ms", res.report.solve_ms}, {"validate_ms", res.report.validate_ms}};
    r.result = report_to_json(res.report);
    bool ok = res.policy.has_value();
    for (const auto& v : res.report.validation) ok = ok && v.outcome == Outcome::Solves;
    if (res.policy) {
        r.result["policy"] = policy_to_json(*res.policy);
        if (!o.policy_out.empty()) {
            write_file(o.policy_out, policy_to_json(*res.policy).dump(2) + "\n");
            r.artifacts["policy"] = o.policy_out;
        }
        for (const auto& rule : res.policy->rules) std::cout << rule_to_string(rule, res.policy->features) << "\n";
    }
    std::cout << to_string(res.report.status) << ", pool " << res.report.pool_size << ", cost " << res.report.cost << "\n";
    for (const auto& v : res.report.validation) std::cout << v.name << ": " << to_string(v.outcome) << "\n";
    r.outcome = to_string(res.report.status);
    if (res.policy && !ok) r.outcome = "validation failed";
    r.code = ok ? 0 : 1;
}

struct LearnSketchOpts {
    std::string domain, sketch_out;
    std::vector<std::string> train;
    SketchConfig cfg;
};

void cmd_learn_sketch(LearnSketchOpts o, const Common& c, Run& r) {
    r.inputs = {{"domain", domain_path(o.domain, o.train.front())}, {"train", o.train},
                {"max_complexity", o.cfg.max_complexity}, {"k", o.cfg.k},
                {"max_rules", o.cfg.max_rules}, {"max_features", o.cfg.max_features}};
    auto d = load_domain_file(r.inputs["domain"]);
    std::vector<std::shared_ptr<const Instance>> train;
    for (const auto& p : o.train) train.push_back(load_instance(d, p));
    o.cfg.deadline = deadline_of(c);
    o.cfg.threads = c.threads;
    auto t = Clock::now();
    auto res = learn_sketch(*d, train, o.cfg);
    r.timings["learn_ms"] = ms_since(t);
    r.result = {{"candidates_tested", res.candidates_tested}, {"failure", res.failure}};
    if (res.sketch) {
        r.result["sketch"] = policy_to_json(*res.sketch);
        auto segs = json::array();
        for (const auto& s : res.segments) segs.push_back(segments_json(s));
        r.result["segments"] = segs;
        if (!o.sketch_out.empty()) {
            write_file(o.sketch_out, policy_to_json(*res.sketch).dump(2) + "\n");
            r.artifacts["sketch"] = o.sketch_out;
        }
        for (const auto& rule : res.sketch->rules) std::cout << rule_to_string(rule, res.sketch->features) << "\n";
    }
    std::cout << (res.sketch ? "found" : "not found: " + res.failure) << " after " << res.candidates_tested
              << " candidates\n";
    r.outcome = res.sketch ? "found" : "not found";
    r.code = res.sketch ? 0 : 1;
}

struct LearnModelOpts {
    std::string graphs, domain_out, problems_out;
    std::vector<int> objects;
    std::vector<std::string> arity;  // label=n
    int max_arity = 3, max_pred_arity = 2, max_predicates = 1;
    bool no_static = false;
};

void cmd_learn_model(LearnModelOpts o, const Common& c, Run& r) {
    auto graphs = load_graphs(o.graphs, &o.objects);
    if (o.objects.size() != graphs.size())
        throw UsageError("need one object count per graph (--objects or an \"objects\" field per graph)");
    HypothesisSpace space;
    space.max_predicates = o.max_predicates;
    space.max_pred_arity = o.max_pred_arity;
    space.max_schema_arity = o.max_arity;
    space.objects = o.objects;
    space.static_predicate = !o.no_static;
    for (const auto& a : o.arity) {
        auto eq = a.find('=');
        if (eq == std::string::npos) throw UsageError("--arity expects label=n, got " + a);
        try {
            space.schema_arity[a.substr(0, eq)] = std::stoi(a.substr(eq + 1));
        } catch (const std::exception&) {
            throw UsageError("--arity expects label=n, got " + a);
        }
    }
    r.inputs = {{"graphs", o.graphs},          {"objects", o.objects},         {"max_arity", o.max_arity},
                {"max_pred_arity", o.max_pred_arity}, {"max_predicates", o.max_predicates}, {"static", !o.no_static},
                {"arity", o.arity}};
    auto t = Clock::now();
    ModelResult res;
    try {
        res = learn_domain(graphs, space, ModelConfig{deadline_of(c), true});
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    r.timings["learn_ms"] = ms_since(t);
    auto probes = json::array();
    for (const auto& p : res.probes)
        probes.push_back({{"structure", p.structure.to_string()}, {"cost", p.structure.cost()}, {"verdict", p.verdict}, {"ms", p.ms}});
    r.result = {{"status", to_string(res.status)}, {"probes", probes}, {"diagnosis", res.diagnosis}};
    if (res.hypothesis) {
        const auto& h = *res.hypothesis;
        auto text = pddl::print_domain(*h.domain);
        r.result["cost"] = h.cost;
        r.result["structure"] = h.structure.to_string();
        r.result["domain"] = text;
        auto insts = json::array();
        for (const auto& i : h.instances) insts.push_back(pddl::print_problem(i));
        r.result["instances"] = insts;
        if (!o.domain_out.empty()) {
            write_file(o.domain_out, text);
            r.artifacts["domain"] = o.domain_out;
        } else {
            std::cout << text;
        }
        if (!o.problems_out.empty()) {
            fs::create_directories(o.problems_out);
            for (std::size_t i = 0; i < h.instances.size(); ++i) {
                auto p = (fs::path(o.problems_out) / ("graph" + std::to_string(i) + ".pddl")).string();
                write_file(p, pddl::print_problem(h.instances[i]));
                r.artifacts["problem" + std::to_string(i)] = p;
            }
        }
        std::cout << "found " << h.structure.to_string() << " cost " << h.cost << " after " << res.probes.size()
                  << " probes\n";
    } else {
        std::cout << to_string(res.status) << ": " << res.diagnosis << "\n";
    }
    r.outcome = to_string(res.status);
    r.code = res.hypothesis ? 0 : 1;
}

struct ValidateModelOpts {
    std::string domain, graphs, witness_out;
    int max_objects = 8;
    bool free_statics = false;
};

void cmd_validate_model(const ValidateModelOpts& o, const Common& c, Run& r) {
    r.inputs = {{"domain", o.domain}, {"graphs", o.graphs}, {"max_objects", o.max_objects}};
    auto d = load_domain_file(o.domain);
    auto graphs = load_graphs(o.graphs, nullptr);
    auto per = json::array();
    bool all = true;
    auto t = Clock::now();
    for (std::size_t i = 0; i < graphs.size(); ++i) {
        DomainValidation v;
        try {
            v = validate_domain(d, graphs[i], o.max_objects, ModelConfig{deadline_of(c), !o.free_statics});
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
        json e = {{"graph", i}, {"valid", v.valid}, {"timed_out", v.timed_out}, {"objects", v.objects}, {"detail", v.detail}};
        if (v.witness) {
            e["witness"] = pddl::print_problem(*v.witness);
            if (!o.witness_out.empty()) {
                auto p = graphs.size() == 1 ? o.witness_out : o.witness_out + "." + std::to_string(i);
                write_file(p, pddl::print_problem(*v.witness));
                r.artifacts["witness" + std::to_string(i)] = p;
            }
        }
        std::cout << "graph " << i << ": " << (v.valid ? "valid with " + std::to_string(v.objects) + " objects"
                                                        : (v.timed_out ? "timeout" : "invalid"))
                  << "\n";
        all = all && v.valid;
        per.push_back(e);
    }
    r.timings["validate_ms"] = ms_since(t);
    r.result = {{"graphs", per}};
    r.outcome = all ? "valid" : "invalid";
    r.code = all ? 0 : 1;
}

struct GenOpts {
    std::string family, domain_out, problem_out;
    int n = 3, m = 3, packages = 1, blocks = 3, disks = 3, pegs = 3, balls = 2, levels = 3;
};

void cmd_gen(const GenOpts& o, const Common& c, Run& r) {
    Instance inst;
    if (o.family == "delivery") {
        try {
            inst = bench::make_delivery(o.n, o.m, o.packages, c.seed);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
        r.inputs = {{"family", o.family}, {"n", o.n}, {"m", o.m}, {"packages", o.packages}};
    } else if (o.family == "blocks") {
        inst = bench::make_blocks_clear(o.blocks, c.seed);
        r.inputs = {{"family", o.family}, {"blocks", o.blocks}};
    } else if (o.family == "hanoi") {
        inst = bench::make_hanoi(o.disks, o.pegs);
        r.inputs = {{"family", o.family}, {"disks", o.disks}, {"pegs", o.pegs}};
    } else if (o.family == "gripper") {
        inst = bench::make_gripper(o.balls);
        r.inputs = {{"family", o.family}, {"balls", o.balls}};
    } else {
        inst = bench::make_two_counters(o.levels);
        r.inputs = {{"family", o.family}, {"levels", o.levels}};
    }
    auto dtext = pddl::print_domain(inst.domain());
    auto ptext = pddl::print_problem(inst);
    if (!o.domain_out.empty()) {
        write_file(o.domain_out, dtext);
        r.artifacts["domain"] = o.domain_out;
    }
    if (!o.problem_out.empty()) {
        write_file(o.problem_out, ptext);
        r.artifacts["problem"] = o.problem_out;
    }
    if (o.domain_out.empty() && o.problem_out.empty()) std::cout << dtext << "\n" << ptext;
    r.result = {{"objects", inst.num_objects()}, {"init_atoms", inst.init().size()}};
    r.outcome = "generated";
    r.code = 0;
}

json report_json(const Run& r, const Common& c, double wall_ms, const std::string& error) {
    json j = {{"command", r.command},   {"version", std::string("gplan ") + GPLAN_VERSION},
              {"seed", c.seed},         {"threads", c.threads},
              {"inputs", r.inputs},     {"timings", r.timings},
              {"outcome", r.outcome},   {"exit_code", r.code},
              {"artifacts", r.artifacts}, {"result", r.result}};
    j["timings"]["wall_ms"] = wall_ms;
    if (!error.empty()) j["error"] = error;
    return j;
}

// --out value from raw argv, for reports on parse failures.
std::string raw_out(int argc, char** argv) {
    for (int i = 1; i < argc; ++i) {
        std::string a = argv[i];
        if (a == "--out" && i + 1 < argc) return argv[i + 1];
        if (a.rfind("--out=", 0) == 0) return a.substr(6);
    }
    return {};
}

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--out", c.out, "JSON report path")->envname("GPLAN_OUT");
    sub->add_option("--seed", c.seed, "random seed")->envname("GPLAN_SEED");
    sub->add_option("--threads", c.threads, "worker threads")->envname("GPLAN_THREADS")->check(CLI::PositiveNumber);
    sub->add_option("--timeout", c.timeout, "time limit in seconds, 0 for none")->envname("GPLAN_TIMEOUT")->check(CLI::NonNegativeNumber);
}

}  // namespace

int main(int argc, char** argv) {
    auto start = Clock::now();
    CLI::App app{"Generalized planning toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string("gplan ") + GPLAN_VERSION);
    Common c;
    Run r;

    ExpandOpts ex;
    auto* s_expand = app.add_subcommand("expand", "expand the reachable state space");
    s_expand->add_option("--domain", ex.domain, "domain PDDL (default: domain.pddl next to the problem)");
    s_expand->add_option("--problem", ex.problem)->required();
    s_expand->add_option("--graph-out", ex.graph_out, "write the graph JSON");
    s_expand->add_option("--labels", ex.labels, "edge labels: action or type")->check(CLI::IsMember({"action", "type"}));
    s_expand->add_option("--max-states", ex.max_states);

    SiwOpts siw;
    auto* s_siw = app.add_subcommand("solve-siw", "serialized IW, optionally guided by a sketch");
    s_siw->add_option("--domain", siw.domain);
    s_siw->add_option("--problem", siw.problem)->required();
    s_siw->add_option("--sketch", siw.sketch, "sketch JSON");
    s_siw->add_option("--kmax", siw.kmax)->check(CLI::PositiveNumber);
    s_siw->add_option("--node-budget", siw.node_budget);
    s_siw->add_option("--plan-out", siw.plan_out);

    VerifyOpts ver;
    auto* s_verify = app.add_subcommand("verify-policy", "exhaustively verify a policy");
    s_verify->add_option("--domain", ver.domain);
    s_verify->add_option("--policy", ver.policy)->required();
    s_verify->add_option("--problem", ver.problems)->required();
    s_verify->add_option("--max-states", ver.max_states);

    RunPolicyOpts run;
    auto* s_run = app.add_subcommand("run-policy", "execute a policy greedily");
    s_run->add_option("--domain", run.domain);
    s_run->add_option("--policy", run.policy)->required();
    s_run->add_option("--problem", run.problem)->required();
    s_run->add_option("--max-steps", run.max_steps);
    s_run->add_flag("--random", run.random, "break ties with the seed");
    s_run->add_option("--plan-out", run.plan_out);

    WidthOpts wo;
    auto* s_width = app.add_subcommand("width", "least k for which IW(k) reaches the goal");
    s_width->add_option("--domain", wo.domain);
    s_width->add_option("--problem", wo.problem)->required();
    s_width->add_option("--kmax", wo.kmax)->check(CLI::PositiveNumber);

    LearnPolicyOpts lp;
    auto* s_lp = app.add_subcommand("learn-policy", "learn a general policy from training instances");
    s_lp->add_option("--domain", lp.domain);
    s_lp->add_option("--train", lp.train)->required();
    s_lp->add_option("--validate", lp.validate);
    s_lp->add_option("--max-complexity", lp.max_complexity);
    s_lp->add_option("--criterion", lp.criterion)->check(CLI::IsMember({"solvable", "decreasing"}));
    s_lp->add_option("--maxsat", lp.maxsat, "external Max-SAT solver command")->envname("GPLAN_MAXSAT");
    s_lp->add_option("--policy-out", lp.policy_out);

    LearnSketchOpts ls;
    auto* s_ls = app.add_subcommand("learn-sketch", "learn a sketch of bounded width");
    s_ls->add_option("--domain", ls.domain);
    s_ls->add_option("--train", ls.train)->required();
    s_ls->add_option("--max-complexity", ls.cfg.max_complexity);
    s_ls->add_option("--k", ls.cfg.k)->check(CLI::PositiveNumber);
    s_ls->add_option("--max-rules", ls.cfg.max_rules);
    s_ls->add_option("--max-features", ls.cfg.max_features);
    s_ls->add_option("--node-budget", ls.cfg.node_budget);
    s_ls->add_option("--sketch-out", ls.sketch_out);

    LearnModelOpts lm;
    auto* s_lm = app.add_subcommand("learn-model", "learn a lifted domain from labeled graphs");
    s_lm->add_option("--graphs", lm.graphs, "graph JSON (one graph or an array)")->required();
    s_lm->add_option("--objects", lm.objects, "object count per graph");
    s_lm->add_option("--max-arity", lm.max_arity, "schema arity bound");
    s_lm->add_option("--arity", lm.arity, "per-label schema arity bound, label=n");
    s_lm->add_option("--max-pred-arity", lm.max_pred_arity);
    s_lm->add_option("--max-predicates", lm.max_predicates);
    s_lm->add_flag("--no-static", lm.no_static, "no learnable static predicate");
    s_lm->add_option("--domain-out", lm.domain_out);
    s_lm->add_option("--problems-out", lm.problems_out, "directory for per-graph problem files");

    ValidateModelOpts vm;
    auto* s_vm = app.add_subcommand("validate-model", "check that a domain reproduces labeled graphs");
    s_vm->add_option("--domain", vm.domain)->required();
    s_vm->add_option("--graphs", vm.graphs)->required();
    s_vm->add_option("--max-objects", vm.max_objects);
    s_vm->add_flag("--free-statics", vm.free_statics, "binary statics are arbitrary relations");
    s_vm->add_option("--witness-out", vm.witness_out);

    GenOpts gen;
    auto* s_gen = app.add_subcommand("gen-domain", "generate a benchmark instance");
    s_gen->add_option("family", gen.family)->required()->check(CLI::IsMember({"delivery", "blocks", "hanoi", "gripper", "counters"}));
    s_gen->add_option("--n", gen.n, "delivery grid columns");
    s_gen->add_option("--m", gen.m, "delivery grid rows");
    s_gen->add_option("--packages", gen.packages);
    s_gen->add_option("--blocks", gen.blocks);
    s_gen->add_option("--disks", gen.disks);
    s_gen->add_option("--pegs", gen.pegs);
    s_gen->add_option("--balls", gen.balls);
    s_gen->add_option("--levels", gen.levels);
    s_gen->add_option("--domain-out", gen.domain_out);
    s_gen->add_option("--problem-out", gen.problem_out);

    for (auto* s : app.get_subcommands([](CLI::App*) { return true; })) add_common(s, c);

    std::string error;
    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        c.out = raw_out(argc, argv);
        r.command = argc > 1 ? argv[1] : "";
        error = e.what();
    }

    if (error.empty()) {
        r.command = app.get_subcommands().front()->get_name();
        try {
            if (r.command == "expand") cmd_expand(ex, c, r);
            else if (r.command == "solve-siw") cmd_solve_siw(siw, c, r);
            else if (r.command == "verify-policy") cmd_verify(ver, c, r);
            else if (r.command == "run-policy") cmd_run_policy(run, c, r);
            else if (r.command == "width") cmd_width(wo, c, r);
            else if (r.command == "learn-policy") cmd_learn_policy(lp, c, r);
            else if (r.command == "learn-sketch") cmd_learn_sketch(ls, c, r);
            else if (r.command == "learn-model") cmd_learn_model(lm, c, r);
            else if (r.command == "validate-model") cmd_validate_model(vm, c, r);
            else cmd_gen(gen, c, r);
        } catch (const ExpansionLimitExceeded& e) {
            r.outcome = "limit exceeded";
            r.code = 1;
            error = e.what();
        } catch (const LearnError& e) {
            r.outcome = "unsolvable training data";
            r.code = 1;
            error = e.what();
        } catch (const std::exception& e) {
            // Parse, policy, feature, validation and IO errors are input problems.
            r.outcome = "error";
            r.code = 2;
            error = e.what();
        }
        if (!error.empty()) std::cerr << "gplan " << r.command << ": " << error << "\n";
    }

    if (!c.out.empty()) {
        std::ofstream out(c.out);
        if (!out) {
            std::cerr << "gplan: cannot write report " << c.out << "\n";
            return 2;
        }
        out << report_json(r, c, ms_since(start), error).dump(2) << "\n";
    }
    return r.code;
}
