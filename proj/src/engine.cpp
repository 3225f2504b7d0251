#include "bnmat/engine.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <sstream>

#include "bnmat/error.hpp"
#include "bnmat/parsers.hpp"

namespace bnmat {

namespace {

void require_plain_tree(const EliminationTree& tree) {
    for (const auto& n : tree.nodes())
        if (n.kind == NodeKind::dummy) throw ContractError("queries run on the unbinarized elimination tree");
}

// blocked[u]: some variable eliminated in subtree(u) is free or bound.
std::vector<char> blocked_nodes(const Query& q, const EliminationTree& tree) {
    std::vector<char> kept(tree.variable_count(), 0);
    for (VarId v : q.free) kept.at(static_cast<std::size_t>(v)) = 1;
    for (const auto& [v, s] : q.bound) kept.at(static_cast<std::size_t>(v)) = 1;
    std::vector<char> blocked(tree.size(), 0);
    for (NodeId u : tree.postorder()) {
        const TreeNode& n = tree.node(u);
        char b = n.kind == NodeKind::internal && kept[static_cast<std::size_t>(n.var)];
        for (NodeId c : n.children) b |= blocked[static_cast<std::size_t>(c)];
        blocked[static_cast<std::size_t>(u)] = b;
    }
    return blocked;
}

std::uint64_t saturating_mul(std::uint64_t a, std::uint64_t b) {
    if (a != 0 && b > std::numeric_limits<std::uint64_t>::max() / a) return std::numeric_limits<std::uint64_t>::max();
    return a * b;
}

class Evaluator {
public:
    Evaluator(const Query& q, const BayesianNetwork& net, const EliminationTree& tree, const MaterializationStore* store,
              std::vector<NodeId> useful)
        : net_(net), tree_(tree), store_(store), roles_(roles(net, q)), q_(q), skip_(tree.size(), 0) {
        for (NodeId u : useful) skip_[static_cast<std::size_t>(u)] = 1;
    }

    Factor run(NodeId u) {
        const TreeNode& node = tree_.node(u);
        if (skip_[static_cast<std::size_t>(u)]) {
            skipped_.push_back(u);
            return store_->tables.at(u);
        }
        if (node.kind == NodeKind::leaf) return net_.cpt(node.var);
        std::vector<Factor> parts;
        parts.reserve(node.children.size());
        for (NodeId c : node.children) parts.push_back(run(c));
        std::vector<const Factor*> ptrs;
        for (const auto& f : parts) ptrs.push_back(&f);
        Factor joined = [&] {
            try {
                return factor_join(ptrs);
            } catch (const SizeLimitError& e) {
                throw SizeLimitError("node " + std::to_string(u) + ": " + e.what());
            }
        }();
        if (node.kind == NodeKind::virtual_root) return joined;
        cost_ += 2 * static_cast<std::uint64_t>(joined.size());
        switch (roles_[static_cast<std::size_t>(node.var)]) {
            case Role::summed: return factor_sum_out(joined, node.var);
            case Role::bound: return factor_reduce(joined, node.var, q_.bound.at(node.var));
            case Role::free: return joined;
        }
        return joined;
    }

    std::uint64_t cost() const { return cost_; }
    std::vector<NodeId> skipped() const {
        auto s = skipped_;
        std::sort(s.begin(), s.end());
        return s;
    }

private:
    const BayesianNetwork& net_;
    const EliminationTree& tree_;
    const MaterializationStore* store_;
    std::vector<Role> roles_;
    const Query& q_;
    std::vector<char> skip_;
    std::vector<NodeId> skipped_;
    std::uint64_t cost_ = 0;
};

}  // namespace

std::uint64_t MaterializationStore::entry_count() const {
    std::uint64_t n = 0;
    for (const auto& [id, f] : tables) n += f.size();
    return n;
}

std::vector<NodeId> useful_set(const Query& q, const std::vector<NodeId>& selected, const EliminationTree& tree) {
    if (selected.empty()) return {};
    const auto blocked = blocked_nodes(q, tree);
    std::vector<char> in_set(tree.size(), 0);
    for (NodeId u : selected) in_set.at(static_cast<std::size_t>(u)) = 1;
    std::vector<NodeId> out;
    std::vector<NodeId> stack{tree.root()};
    while (!stack.empty()) {
        const NodeId u = stack.back();
        stack.pop_back();
        const auto i = static_cast<std::size_t>(u);
        if (in_set[i] && !blocked[i]) {
            out.push_back(u);
            continue;
        }
        for (NodeId c : tree.node(u).children) stack.push_back(c);
    }
    std::sort(out.begin(), out.end());
    return out;
}

QueryAnswer answer_query(const Query& q, const BayesianNetwork& net, const EliminationTree& tree,
                         const MaterializationStore* store) {
    validate_query(net, q);
    require_plain_tree(tree);
    if (tree.variable_count() != net.size()) throw ContractError("elimination tree does not belong to this network");
    const auto start = std::chrono::steady_clock::now();
    std::vector<NodeId> useful;
    if (store) {
        useful = useful_set(q, store->plan.selected, tree);
        for (NodeId u : useful)
            if (!store->tables.count(u)) throw ContractError("store lacks the table of node " + std::to_string(u));
    }
    Evaluator eval(q, net, tree, store, std::move(useful));
    QueryAnswer answer;
    answer.table = eval.run(tree.root());
    answer.cost_estimated = eval.cost();
    answer.nodes_skipped = eval.skipped();
    answer.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return answer;
}

std::uint64_t query_cost(const Query& q, const EliminationTree& tree, const std::vector<NodeId>& selected) {
    require_plain_tree(tree);
    std::vector<char> is_free(tree.variable_count(), 0);
    for (VarId v : q.free) is_free.at(static_cast<std::size_t>(v)) = 1;
    std::vector<char> skip(tree.size(), 0);
    for (NodeId u : useful_set(q, selected, tree)) skip[static_cast<std::size_t>(u)] = 1;
    // Nodes at or below a useful node are never computed.
    std::vector<char> covered(tree.size(), 0);
    {
        std::vector<NodeId> stack{tree.root()};
        while (!stack.empty()) {
            const NodeId u = stack.back();
            stack.pop_back();
            const auto i = static_cast<std::size_t>(u);
            const NodeId p = tree.node(u).parent;
            covered[i] = skip[i] || (p != kNoNode && covered[static_cast<std::size_t>(p)]);
            for (NodeId c : tree.node(u).children) stack.push_back(c);
        }
    }

    // free_below[u]: free variables eliminated inside subtree(u), u included.
    std::vector<std::vector<VarId>> free_below(tree.size());
    std::uint64_t total = 0;
    const auto& cards = tree.cardinalities();
    for (NodeId u : tree.postorder()) {
        const auto i = static_cast<std::size_t>(u);
        const TreeNode& n = tree.node(u);
        if (n.kind != NodeKind::internal) {
            // Leaves eliminate nothing; a virtual root is not costed.
            continue;
        }
        std::vector<VarId> fb;
        for (NodeId c : n.children) {
            const auto& cf = free_below[static_cast<std::size_t>(c)];
            fb.insert(fb.end(), cf.begin(), cf.end());
        }
        std::sort(fb.begin(), fb.end());
        if (!covered[i]) {
            std::uint64_t size = static_cast<std::uint64_t>(cards[static_cast<std::size_t>(n.var)]);
            for (VarId v : n.scope_after) size = saturating_mul(size, static_cast<std::uint64_t>(cards[static_cast<std::size_t>(v)]));
            for (VarId v : fb) size = saturating_mul(size, static_cast<std::uint64_t>(cards[static_cast<std::size_t>(v)]));
            total += 2 * size;
        }
        if (is_free[static_cast<std::size_t>(n.var)]) fb.push_back(n.var);
        free_below[i] = std::move(fb);
    }
    return total;
}

MaterializationStore materialize(const MaterializationPlan& plan, const BayesianNetwork& net, const EliminationTree& tree) {
    require_plain_tree(tree);
    if (plan.tree_fingerprint != 0 && plan.tree_fingerprint != tree.fingerprint())
        throw ValidationError("plan was computed for a different elimination tree");
    MaterializationStore store;
    store.plan = plan;
    std::vector<char> wanted(tree.size(), 0);
    for (NodeId u : plan.selected) {
        if (u < 0 || static_cast<std::size_t>(u) >= tree.size() || !tree.node(u).selectable())
            throw ValidationError("plan selects node " + std::to_string(u) + ", which cannot be materialized");
        wanted[static_cast<std::size_t>(u)] = 1;
    }
    // Post-order lets nested selections reuse tables computed just before.
    const Query everything_summed;
    for (NodeId u : tree.postorder()) {
        if (!wanted[static_cast<std::size_t>(u)]) continue;
        std::vector<NodeId> inner;
        for (const auto& [id, f] : store.tables)
            if (tree.is_ancestor(u, id)) inner.push_back(id);
        // Only the highest stored descendants are consulted.
        std::vector<NodeId> top;
        for (NodeId d : inner) {
            bool covered = false;
            for (NodeId e : inner)
                if (e != d && tree.is_ancestor(e, d)) covered = true;
            if (!covered) top.push_back(d);
        }
        Evaluator eval(everything_summed, net, tree, &store, top);
        store.tables.emplace(u, eval.run(u));
    }
    return store;
}

std::string format_store(const MaterializationStore& store) {
    std::string out = format_plan(store.plan);
    for (const auto& [id, f] : store.tables) out += "table " + std::to_string(id) + "\n" + format_factor(f) + "\n";
    return out;
}

MaterializationStore parse_store(std::string_view text) {
    MaterializationStore store;
    store.plan = parse_plan(text);
    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    NodeId pending = kNoNode;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.rfind("table ", 0) == 0) {
            pending = static_cast<NodeId>(parse_integer(std::string_view(line).substr(6), line_no, 7));
        } else if (line.rfind("factor ", 0) == 0) {
            if (pending == kNoNode) throw ParseError(ParseIssue::syntax, "factor block without a table line", line_no, 1);
            store.tables.emplace(pending, parse_factor_line(line, line_no));
            pending = kNoNode;
        }
    }
    for (NodeId u : store.plan.selected)
        if (!store.tables.count(u)) throw ParseError(ParseIssue::row_count, "store lacks the table of node " + std::to_string(u));
    return store;
}

Factor conditional_answer(const QueryAnswer& joint) {
    const double mass = joint.table.total_mass();
    if (!(mass > 0.0)) throw ValidationError("cannot condition on evidence of probability zero");
    std::vector<double> v(joint.table.values().begin(), joint.table.values().end());
    for (double& x : v) x /= mass;
    return Factor(joint.table.scope(), joint.table.cardinalities(), std::move(v));
}

Factor range_answer(const std::vector<VarId>& free, const std::vector<std::map<VarId, int>>& assignments,
                    const BayesianNetwork& net, const EliminationTree& tree, const MaterializationStore* store) {
    if (assignments.empty()) throw ContractError("range query needs at least one assignment");
    std::vector<double> sum;
    Factor first;
    for (const auto& bound : assignments) {
        Query q{free, bound};
        q = normalized(net, std::move(q));
        const auto a = answer_query(q, net, tree, store);
        if (sum.empty()) {
            first = a.table;
            sum.assign(a.table.values().begin(), a.table.values().end());
        } else {
            for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += a.table.values()[i];
        }
    }
    return Factor(first.scope(), first.cardinalities(), std::move(sum));
}

std::string format_answer(const QueryAnswer& answer) {
    return "answer scope=" + format_scope(answer.table.scope()) + " mass=" + format_double(answer.table.total_mass()) + "\n" +
           format_factor(answer.table) + "\n";
}

}  // namespace bnmat
