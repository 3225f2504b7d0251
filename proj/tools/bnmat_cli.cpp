#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "bnmat/elimination.hpp"
#include "bnmat/engine.hpp"
#include "bnmat/error.hpp"
#include "bnmat/jtree.hpp"
#include "bnmat/lattice.hpp"
#include "bnmat/network.hpp"
#include "bnmat/parsers.hpp"
#include "bnmat/planner.hpp"
#include "bnmat/workload.hpp"

namespace fs = std::filesystem;
using namespace bnmat;

namespace {

struct Common {
    std::string net_path;
    std::string heuristic = "auto";
    std::optional<std::uint64_t> seed;
};

EliminationOrder order_for(const BayesianNetwork& net, const std::string& heuristic) {
    if (heuristic == "auto") return select_order(net);
    return elimination_order(net, parse_heuristic(heuristic));
}

struct Loaded {
    BayesianNetwork net;
    EliminationOrder order;
    EliminationTree tree;
};

Loaded load(const Common& c) {
    BayesianNetwork net = load_network(c.net_path);
    require_valid(net);
    EliminationOrder order = order_for(net, c.heuristic);
    EliminationTree tree = build_elimination_tree(net, order.order);
    return {std::move(net), std::move(order), std::move(tree)};
}

// A workload argument is a file path, or inline key=value pairs separated by ';'.
WorkloadSpec load_workload(const std::string& arg, const std::optional<std::uint64_t>& seed) {
    std::string text;
    if (fs::exists(arg)) {
        text = read_text_file(arg);
    } else {
        text = arg;
        for (char& ch : text)
            if (ch == ';') ch = '\n';
    }
    WorkloadSpec spec = parse_workload_spec(text);
    if (seed) spec.seed = *seed;
    return spec;
}

Budget parse_budget(const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ParseError(ParseIssue::syntax, "budget must be k=<int> or space=<int>");
    const auto key = text.substr(0, eq);
    const long long amount = parse_integer(text.substr(eq + 1));
    if (amount < 0) throw ParseError(ParseIssue::invalid_value, "budget must be non-negative");
    if (key == "k") return Budget::nodes(static_cast<std::uint64_t>(amount));
    if (key == "space") return Budget::space(static_cast<std::uint64_t>(amount));
    throw ParseError(ParseIssue::syntax, "budget must be k=<int> or space=<int>");
}

MaterializationPlan build_plan(const EliminationTree& tree, Budget budget, const std::string& algo,
                               const UsefulnessProfile& profile) {
    const auto amount = static_cast<std::int64_t>(budget.amount);
    if (algo == "dp") return budget.kind == BudgetKind::count ? plan_dp(tree, amount, profile) : plan_dp_space(tree, amount, profile);
    if (algo == "greedy")
        return budget.kind == BudgetKind::count ? plan_greedy(tree, amount, profile) : plan_greedy_space(tree, amount, profile);
    throw ContractError("unknown planning algorithm '" + algo + "'");
}

void emit(const std::string& out_path, const std::string& text) {
    if (out_path.empty() || out_path == "-") std::cout << text;
    else write_text_file(out_path, text);
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const auto n = static_cast<double>(x.size());
    if (x.size() < 2) return std::nan("");
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
    mx /= n, my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    return sxx == 0 || syy == 0 ? std::nan("") : sxy / std::sqrt(sxx * syy);
}

std::string csv_double(double v) { return std::isnan(v) ? std::string() : format_double(v); }

void apply_entry_cap(const std::optional<std::uint64_t>& flag) {
    if (flag) {
        set_entry_cap(*flag);
    } else if (const char* env = std::getenv("BNMAT_ENTRY_CAP")) {
        const long long cap = parse_integer(env);
        if (cap <= 0) throw ParseError(ParseIssue::invalid_value, "BNMAT_ENTRY_CAP must be positive");
        set_entry_cap(static_cast<std::uint64_t>(cap));
    }
}

}  // namespace

int run(int argc, char** argv) {
    CLI::App app{"Exact Bayesian-network inference with materialized elimination-tree nodes"};
    app.require_subcommand(1);
    std::optional<std::uint64_t> entry_cap_flag;
    Common common;
    app.add_option("--entry-cap", entry_cap_flag, "Largest factor (entries) any step may create");
    app.add_option("--seed", common.seed, "Seed for every sampler (overrides the workload seed)");

    auto with_net = [&](CLI::App* sub) {
        sub->add_option("--net", common.net_path, "Network file (.bif, .bn, optionally gzipped)")->required();
        sub->add_option("--heuristic", common.heuristic, "Elimination heuristic: mn, mw, mf, wmf or auto")
            ->check(CLI::IsMember({"mn", "mw", "mf", "wmf", "auto"}));
    };

    std::string in_path, out_path;
    auto* convert = app.add_subcommand("convert", "Validate a network and write it in the native format");
    convert->add_option("input", in_path)->required();
    convert->add_option("output", out_path)->required();

    auto* stats = app.add_subcommand("stats", "Node, edge and parameter counts");
    stats->add_option("--net", common.net_path)->required();

    auto* order = app.add_subcommand("order", "Elimination order and factor parameter sizes");
    with_net(order);

    bool dump = false;
    auto* tree_stats = app.add_subcommand("tree-stats", "Elimination tree size, height and fan-out");
    with_net(tree_stats);
    tree_stats->add_flag("--dump", dump, "Also print one line per node");

    std::string budget_text = "k=0", algo = "dp", workload_arg = "scheme=uniform", plan_path, store_path;
    auto* plan = app.add_subcommand("plan", "Choose nodes to materialize");
    with_net(plan);
    plan->add_option("--budget", budget_text, "k=<nodes> or space=<entries>");
    plan->add_option("--algo", algo)->check(CLI::IsMember({"dp", "greedy"}));
    plan->add_option("--workload", workload_arg, "Workload spec file or inline 'key=value;...'");
    plan->add_option("--out,-o", out_path, "Plan file (stdout when omitted)");

    auto* materialize_cmd = app.add_subcommand("materialize", "Compute and store the planned factors");
    with_net(materialize_cmd);
    materialize_cmd->add_option("--plan", plan_path, "Plan file written by plan")->required();
    materialize_cmd->add_option("--out,-o", out_path);

    std::string free_text, bound_text;
    bool conditional = false;
    auto* query = app.add_subcommand("query", "Answer one query");
    with_net(query);
    query->add_option("--free", free_text, "Comma-separated names or ids");
    query->add_option("--bound", bound_text, "Comma-separated var=state pairs");
    query->add_option("--store", store_path, "Materialized store to reuse");
    query->add_flag("--conditional", conditional, "Normalize over the bound assignment");

    std::string measure = "model";
    auto* bench = app.add_subcommand("bench", "Per-query-size costs and savings of a plan");
    with_net(bench);
    bench->add_option("--plan", plan_path, "Plan file written by plan")->required();
    bench->add_option("--workload", workload_arg, "Workload spec file or inline 'key=value;...'");
    bench->add_option("--measure", measure)->check(CLI::IsMember({"model", "wall", "both"}));

    int members = 3;
    std::string out_dir = "lattice_out";
    auto* lattice_cmd = app.add_subcommand("lattice", "Build a lattice of shrunk subnetworks and split a budget");
    with_net(lattice_cmd);
    lattice_cmd->add_option("--workload", workload_arg, "Workload spec file or inline 'key=value;...'");
    lattice_cmd->add_option("--members", members, "Extra members beyond the full network");
    lattice_cmd->add_option("--budget", budget_text, "k=<nodes>");
    lattice_cmd->add_option("--out-dir", out_dir, "Directory for member networks, plans and the manifest");

    auto* jt_bench = app.add_subcommand("jt-bench", "Junction-tree baseline against elimination-tree answers");
    with_net(jt_bench);
    jt_bench->add_option("--workload", workload_arg, "Workload spec file or inline 'key=value;...'");
    jt_bench->add_option("--plan", plan_path, "Optional plan for the materialized column");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(ExitCode::usage);
    }
    apply_entry_cap(entry_cap_flag);

    if (*convert) {
        BayesianNetwork net = load_network(in_path);
        require_valid(net);
        write_text_file(out_path, serialize_native(net));
    } else if (*stats) {
        BayesianNetwork net = load_network(common.net_path);
        require_valid(net);
        const auto s = network_stats(net);
        std::cout << "nodes " << s.node_count << "\nedges " << s.edge_count << "\nparameters " << s.parameter_count
                  << "\navg_degree " << format_double(s.avg_degree) << '\n';
    } else if (*order) {
        BayesianNetwork net = load_network(common.net_path);
        require_valid(net);
        const auto o = order_for(net, common.heuristic);
        std::cout << "heuristic " << to_string(o.heuristic) << "\norder";
        for (VarId v : o.order) std::cout << ' ' << net.variable(v).name;
        std::cout << "\navg_factor_size " << format_double(o.avg_factor_size) << "\nmax_factor_size "
                  << format_double(o.max_factor_size) << '\n';
    } else if (*tree_stats) {
        const Loaded l = load(common);
        std::cout << "heuristic " << to_string(l.order.heuristic) << "\nnodes " << l.tree.real_node_count()
                  << "\nheight " << l.tree.height() << "\nmax_children " << l.tree.max_children() << '\n';
        if (dump) std::cout << dump_tree(l.tree);
    } else if (*plan) {
        const Loaded l = load(common);
        const WorkloadSpec spec = load_workload(workload_arg, common.seed);
        validate_workload_spec(spec, l.net.size());
        const auto profile = profile_for(l.tree, spec, &l.net);
        emit(out_path, format_plan(build_plan(l.tree, parse_budget(budget_text), algo, profile)));
    } else if (*materialize_cmd) {
        const Loaded l = load(common);
        const auto p = parse_plan(read_text_file(plan_path));
        emit(out_path, format_store(materialize(p, l.net, l.tree)));
    } else if (*query) {
        const Loaded l = load(common);
        std::string text = "free: " + free_text;
        if (!bound_text.empty()) text += " bound: " + bound_text;
        const Query q = parse_query(text, l.net);
        std::optional<MaterializationStore> store;
        if (!store_path.empty()) store = parse_store(read_text_file(store_path));
        auto answer = answer_query(q, l.net, l.tree, store ? &*store : nullptr);
        if (conditional) answer.table = conditional_answer(answer);
        std::cout << format_answer(answer);
    } else if (*bench) {
        const Loaded l = load(common);
        const WorkloadSpec spec = load_workload(workload_arg, common.seed);
        validate_workload_spec(spec, l.net.size());
        const auto p = parse_plan(read_text_file(plan_path));
        const bool wall = measure != "model";
        std::optional<MaterializationStore> store;
        if (wall) store = materialize(p, l.net, l.tree);
        struct Row {
            double base = 0, planned = 0, saving = 0;
            std::size_t count = 0;
            std::vector<double> model, seconds;
        };
        std::map<std::size_t, Row> rows;
        Row all;
        for (const Query& q : sample_workload(l.tree, spec, &l.net)) {
            Row& row = rows[q.free.size()];
            const auto base = static_cast<double>(query_cost(q, l.tree));
            const auto planned = static_cast<double>(query_cost(q, l.tree, p.selected));
            const double saving = base == 0 ? 0.0 : 100.0 * (base - planned) / base;
            for (Row* r : {&row, &all}) r->base += base, r->planned += planned, r->saving += saving, ++r->count;
            if (wall) {
                for (const MaterializationStore* s : {static_cast<const MaterializationStore*>(nullptr), static_cast<const MaterializationStore*>(&*store)}) {
                    const auto a = answer_query(q, l.net, l.tree, s);
                    for (Row* r : {&row, &all}) {
                        r->model.push_back(static_cast<double>(a.cost_estimated));
                        r->seconds.push_back(a.wall_seconds);
                    }
                }
            }
        }
        std::cout << "r,queries,mean_cost_base,mean_cost_plan,mean_saving_pct,pearson_rho\n";
        auto line = [&](const std::string& label, const Row& r) {
            const auto n = static_cast<double>(r.count);
            std::cout << label << ',' << r.count << ',' << format_double(r.base / n) << ',' << format_double(r.planned / n)
                      << ',' << format_double(r.saving / n) << ',' << (wall ? csv_double(pearson(r.model, r.seconds)) : "")
                      << '\n';
        };
        for (const auto& [r, row] : rows) line(std::to_string(r), row);
        line("all", all);
    } else if (*lattice_cmd) {
        BayesianNetwork net = load_network(common.net_path);
        require_valid(net);
        const WorkloadSpec spec = load_workload(workload_arg, common.seed);
        validate_workload_spec(spec, net.size());
        const EliminationTree full_tree = build_elimination_tree(net, order_for(net, common.heuristic).order);
        WorkloadSpec fresh_spec = spec;
        fresh_spec.seed = spec.seed + 1;
        const Lattice lat = build_lattice(net, sample_workload(full_tree, spec, &net), members,
                                          sample_workload(full_tree, fresh_spec, &net));
        const Budget budget = parse_budget(budget_text);
        if (budget.kind != BudgetKind::count) throw ContractError("lattice budgets are node counts");
        const auto alloc = allocate_budget(lat, static_cast<int>(budget.amount));
        fs::create_directories(out_dir);
        std::ostringstream manifest;
        manifest << format_manifest(lat);
        for (std::size_t i = 0; i < lat.members.size(); ++i) {
            const auto& m = lat.members[i];
            write_text_file((fs::path(out_dir) / ("member" + std::to_string(i) + ".bn")).string(), serialize_native(m.sub.net));
            write_text_file((fs::path(out_dir) / ("member" + std::to_string(i) + ".plan")).string(),
                            format_plan(plan_dp(m.tree, alloc[i], m.profile)));
            manifest << "budget " << i << ' ' << alloc[i] << '\n';
        }
        write_text_file((fs::path(out_dir) / "manifest.txt").string(), manifest.str());
        std::cout << manifest.str();
    } else if (*jt_bench) {
        const Loaded l = load(common);
        const WorkloadSpec spec = load_workload(workload_arg, common.seed);
        validate_workload_spec(spec, l.net.size());
        const auto t0 = std::chrono::steady_clock::now();
        const JunctionTree jt = calibrate(build_junction_tree(l.net, l.order.order));
        const double calibrate_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const auto js = junction_stats(jt);
        std::optional<MaterializationPlan> p;
        if (!plan_path.empty()) p = parse_plan(read_text_file(plan_path));
        std::cerr << "cliques " << js.cliques << " max_clique_vars " << js.max_clique_vars << " max_clique_entries "
                  << js.max_clique_entries << " total_entries " << js.total_entries << " calibrate_s "
                  << format_double(calibrate_seconds) << '\n';
        struct Row {
            double jt = 0, ve = 0, planned = 0;
            std::size_t count = 0;
        };
        std::map<std::size_t, Row> rows;
        for (const Query& q : sample_workload(l.tree, spec, &l.net)) {
            Row& row = rows[q.free.size()];
            row.jt += static_cast<double>(jt_query(jt, q).cost_estimated);
            row.ve += static_cast<double>(query_cost(q, l.tree));
            if (p) row.planned += static_cast<double>(query_cost(q, l.tree, p->selected));
            ++row.count;
        }
        std::cout << "r,queries,mean_cost_jt,mean_cost_ve,mean_cost_ve_plan\n";
        for (const auto& [r, row] : rows) {
            const auto n = static_cast<double>(row.count);
            std::cout << r << ',' << row.count << ',' << format_double(row.jt / n) << ',' << format_double(row.ve / n) << ','
                      << (p ? format_double(row.planned / n) : "") << '\n';
        }
    }
    return 0;
}

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return static_cast<int>(e.exit_code());
    } catch (const std::bad_alloc&) {
        std::cerr << "error: out of memory\n";
        return static_cast<int>(ExitCode::size_limit);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return static_cast<int>(ExitCode::usage);
    }
}
