// Python bindings: networks, elimination trees, planning, materialized query answering
// and the junction-tree baseline.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "bnmat/engine.hpp"
#include "bnmat/error.hpp"
#include "bnmat/jtree.hpp"
#include "bnmat/parsers.hpp"
#include "bnmat/planner.hpp"
#include "bnmat/workload.hpp"

namespace py = pybind11;
using namespace bnmat;

namespace {

using VarRef = std::variant<VarId, std::string>;
using StateRef = std::variant<int, std::string>;

struct Network {
    std::shared_ptr<const BayesianNetwork> net;

    VarId resolve(const VarRef& ref) const {
        if (const auto* id = std::get_if<VarId>(&ref)) {
            if (*id < 0 || static_cast<std::size_t>(*id) >= net->size())
                throw ContractError("variable id " + std::to_string(*id) + " out of range");
            return *id;
        }
        const auto& name = std::get<std::string>(ref);
        if (auto id = net->find(name)) return *id;
        throw ContractError("unknown variable " + name);
    }

    int resolve_state(VarId v, const StateRef& ref) const {
        if (const auto* s = std::get_if<int>(&ref)) return *s;
        const auto& states = net->variable(v).states;
        for (std::size_t i = 0; i < states.size(); ++i)
            if (states[i] == std::get<std::string>(ref)) return static_cast<int>(i);
        throw ContractError("unknown state " + std::get<std::string>(ref) + " of " + net->variable(v).name);
    }

    Query query(const std::vector<VarRef>& free, const std::map<VarRef, StateRef>& bound) const {
        Query q;
        for (const auto& f : free) q.free.push_back(resolve(f));
        for (const auto& [var, state] : bound) {
            const VarId v = resolve(var);
            q.bound[v] = resolve_state(v, state);
        }
        return normalized(*net, std::move(q));
    }

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        for (const auto& v : net->variables()) out.push_back(v.name);
        return out;
    }
};

struct Tree {
    Network network;
    EliminationTree tree;
    Heuristic heuristic = Heuristic::min_fill;
};

struct Answer {
    std::vector<std::string> scope;
    std::vector<int> cardinalities;
    std::vector<double> values;
    std::uint64_t cost = 0;
    std::vector<NodeId> skipped;
};

Answer to_answer(const Network& n, const Factor& table, std::uint64_t cost, std::vector<NodeId> skipped = {}) {
    Answer a;
    for (VarId v : table.scope()) a.scope.push_back(n.net->variable(v).name);
    a.cardinalities = table.cardinalities();
    a.values.assign(table.values().begin(), table.values().end());
    a.cost = cost;
    a.skipped = std::move(skipped);
    return a;
}

Network load(const std::string& path) { return {std::make_shared<const BayesianNetwork>(load_network(path))}; }
Network from_text(const std::string& text) { return {std::make_shared<const BayesianNetwork>(parse_network(text))}; }

Tree elimination_tree(const Network& n, const std::string& heuristic) {
    const EliminationOrder order =
        heuristic == "auto" ? select_order(*n.net) : elimination_order(*n.net, parse_heuristic(heuristic));
    return {n, build_elimination_tree(*n.net, order.order), order.heuristic};
}

UsefulnessProfile profile_of(const Tree& t, const std::string& workload) {
    return profile_for(t.tree, parse_workload_spec(workload), t.network.net.get());
}

MaterializationPlan plan(const Tree& t, std::int64_t budget, const std::string& algo, const std::string& workload,
                         bool space) {
    const auto profile = profile_of(t, workload);
    if (algo == "dp") return space ? plan_dp_space(t.tree, budget, profile) : plan_dp(t.tree, budget, profile);
    if (algo == "greedy") return space ? plan_greedy_space(t.tree, budget, profile) : plan_greedy(t.tree, budget, profile);
    throw ContractError("unknown planning algorithm " + algo + " (expected dp or greedy)");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Exact Bayesian-network inference with workload-aware materialization";

    auto base = py::register_exception<Error>(m, "BnmatError", PyExc_RuntimeError);
    py::register_exception<ParseError>(m, "ParseError", base.ptr());
    py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
    py::register_exception<SizeLimitError>(m, "SizeLimitError", base.ptr());
    py::register_exception<IoError>(m, "IoError", base.ptr());

    m.def("set_entry_cap", &set_entry_cap, py::arg("cap"), "Largest factor (in entries) any operation may create.");
    m.def("entry_cap", &entry_cap);

    py::class_<Network>(m, "Network")
        .def_static("load", &load, py::arg("path"), "Reads a .bif or native .bn file, optionally gzipped.")
        .def_static("from_text", &from_text, py::arg("text"))
        .def_property_readonly("size", [](const Network& n) { return n.net->size(); })
        .def_property_readonly("edge_count", [](const Network& n) { return n.net->edge_count(); })
        .def_property_readonly("names", &Network::names)
        .def("cardinality", [](const Network& n, const VarRef& v) { return n.net->cardinality(n.resolve(v)); })
        .def("states", [](const Network& n, const VarRef& v) { return n.net->variable(n.resolve(v)).states; })
        .def("to_native", [](const Network& n) { return serialize_native(*n.net); })
        .def(
            "brute_force",
            [](const Network& n, const std::vector<VarRef>& free, const std::map<VarRef, StateRef>& bound) {
                return to_answer(n, joint_brute_force(*n.net, n.query(free, bound)), 0);
            },
            py::arg("free"), py::arg("bound") = std::map<VarRef, StateRef>{},
            "Joint answer by full enumeration, for small networks.")
        .def("__len__", [](const Network& n) { return n.net->size(); });

    py::class_<MaterializationPlan>(m, "Plan")
        .def_readonly("selected", &MaterializationPlan::selected)
        .def_readonly("benefit", &MaterializationPlan::benefit)
        .def("to_text", [](const MaterializationPlan& p) { return format_plan(p); })
        .def_static("from_text", [](const std::string& text) { return parse_plan(text); });

    py::class_<MaterializationStore>(m, "Store")
        .def_property_readonly("entry_count", &MaterializationStore::entry_count)
        .def_property_readonly("nodes", [](const MaterializationStore& s) {
            std::vector<NodeId> ids;
            for (const auto& [id, table] : s.tables) ids.push_back(id);
            return ids;
        });

    py::class_<Answer>(m, "Answer")
        .def_readonly("scope", &Answer::scope)
        .def_readonly("cardinalities", &Answer::cardinalities)
        .def_readonly("values", &Answer::values)
        .def_readonly("cost", &Answer::cost)
        .def_readonly("skipped", &Answer::skipped)
        .def_property_readonly("mass", [](const Answer& a) {
            double s = 0;
            for (double v : a.values) s += v;
            return s;
        });

    py::class_<Tree>(m, "EliminationTree")
        .def(py::init(&elimination_tree), py::arg("network"), py::arg("heuristic") = "auto",
             "Elimination tree along an order from mn, mw, mf, wmf, or the automatically selected one.")
        .def_property_readonly("heuristic", [](const Tree& t) { return to_string(t.heuristic); })
        .def_property_readonly("order", [](const Tree& t) { return t.tree.order(); })
        .def_property_readonly("node_count", [](const Tree& t) { return t.tree.real_node_count(); })
        .def_property_readonly("height", [](const Tree& t) { return t.tree.height(); })
        .def_property_readonly("max_children", [](const Tree& t) { return t.tree.max_children(); })
        .def("usefulness", [](const Tree& t, const std::string& workload) { return profile_of(t, workload).base; },
             py::arg("workload") = "scheme=uniform")
        .def("plan", &plan, py::arg("budget"), py::arg("algo") = "dp", py::arg("workload") = "scheme=uniform",
             py::arg("space") = false, "Chooses nodes to materialize under a node-count or entry budget.")
        .def("materialize", [](const Tree& t, const MaterializationPlan& p) {
            return materialize(p, *t.network.net, t.tree);
        })
        .def(
            "query",
            [](const Tree& t, const std::vector<VarRef>& free, const std::map<VarRef, StateRef>& bound,
               const MaterializationStore* store) {
                const auto a = answer_query(t.network.query(free, bound), *t.network.net, t.tree, store);
                return to_answer(t.network, a.table, a.cost_estimated, a.nodes_skipped);
            },
            py::arg("free"), py::arg("bound") = std::map<VarRef, StateRef>{}, py::arg("store") = nullptr,
            "Joint answer over the free variables with the bound ones fixed.")
        .def(
            "query_cost",
            [](const Tree& t, const std::vector<VarRef>& free, const std::map<VarRef, StateRef>& bound,
               const MaterializationPlan* p) {
                return query_cost(t.network.query(free, bound), t.tree, p ? p->selected : std::vector<NodeId>{});
            },
            py::arg("free"), py::arg("bound") = std::map<VarRef, StateRef>{}, py::arg("plan") = nullptr);

    py::class_<JunctionTree>(m, "JunctionTree")
        .def(py::init([](const Tree& t) { return calibrate(build_junction_tree(*t.network.net, t.tree.order())); }),
             py::arg("tree"), "Calibrated junction tree built along the elimination tree's order.")
        .def_readonly("cliques", &JunctionTree::cliques)
        .def_property_readonly("total_entries", [](const JunctionTree& jt) { return junction_stats(jt).total_entries; })
        .def(
            "query",
            [](const JunctionTree& jt, const Tree& t, const std::vector<VarRef>& free,
               const std::map<VarRef, StateRef>& bound) {
                const auto a = jt_query(jt, t.network.query(free, bound));
                return to_answer(t.network, a.table, a.cost_estimated);
            },
            py::arg("tree"), py::arg("free"), py::arg("bound") = std::map<VarRef, StateRef>{});
}
