#include "bnmat/elimination.hpp"

#include <algorithm>
#include <bit>
#include <functional>
#include <limits>
#include <sstream>

#include "bnmat/error.hpp"

namespace bnmat {

std::size_t MoralGraph::edge_count() const noexcept {
    std::size_t e = 0;
    for (const auto& a : adjacency) e += a.size();
    return e / 2;
}

bool MoralGraph::adjacent(VarId a, VarId b) const {
    const auto& n = adjacency.at(static_cast<std::size_t>(a));
    return std::binary_search(n.begin(), n.end(), b);
}

MoralGraph moral_graph(const BayesianNetwork& net) {
    MoralGraph g;
    g.adjacency.resize(net.size());
    auto link = [&](VarId a, VarId b) {
        if (a == b) return;
        g.adjacency[static_cast<std::size_t>(a)].push_back(b);
        g.adjacency[static_cast<std::size_t>(b)].push_back(a);
    };
    for (VarId v = 0; v < static_cast<VarId>(net.size()); ++v) {
        const auto& ps = net.parents(v);
        for (std::size_t i = 0; i < ps.size(); ++i) {
            link(v, ps[i]);
            for (std::size_t j = i + 1; j < ps.size(); ++j) link(ps[i], ps[j]);
        }
    }
    for (auto& a : g.adjacency) {
        std::sort(a.begin(), a.end());
        a.erase(std::unique(a.begin(), a.end()), a.end());
    }
    return g;
}

std::string to_string(Heuristic h) {
    switch (h) {
        case Heuristic::min_neighbors: return "mn";
        case Heuristic::min_weight: return "mw";
        case Heuristic::min_fill: return "mf";
        case Heuristic::weighted_min_fill: return "wmf";
    }
    return "?";
}

Heuristic parse_heuristic(const std::string& name) {
    for (Heuristic h : kAllHeuristics)
        if (to_string(h) == name) return h;
    throw ContractError("unknown heuristic '" + name + "' (expected mn, mw, mf or wmf)");
}

namespace {

// Elimination graph with bitset rows so fill counts are popcounts.
class WorkingGraph {
public:
    WorkingGraph(const MoralGraph& g, const std::vector<int>& cards)
        : n_(g.size()), words_((n_ + 63) / 64), rows_(n_ * words_, 0), alive_(n_, true), cards_(cards) {
        for (std::size_t v = 0; v < n_; ++v)
            for (VarId u : g.adjacency[v]) set(v, static_cast<std::size_t>(u));
    }

    std::vector<std::size_t> neighbors(std::size_t v) const {
        std::vector<std::size_t> out;
        const std::uint64_t* r = row(v);
        for (std::size_t w = 0; w < words_; ++w)
            for (std::uint64_t bits = r[w]; bits; bits &= bits - 1)
                out.push_back(w * 64 + static_cast<std::size_t>(std::countr_zero(bits)));
        return out;
    }

    bool adjacent(std::size_t a, std::size_t b) const { return (row(a)[b / 64] >> (b % 64)) & 1U; }

    double cost(std::size_t v, Heuristic h) const {
        const auto nb = neighbors(v);
        switch (h) {
            case Heuristic::min_neighbors: return static_cast<double>(nb.size());
            case Heuristic::min_weight: {
                double p = 1.0;
                for (auto u : nb) p *= cards_[u];
                return p;
            }
            case Heuristic::min_fill: {
                double present = 0.0;
                for (auto a : nb) present += static_cast<double>(common(a, v));
                const double pairs = static_cast<double>(nb.size()) * static_cast<double>(nb.size() - (nb.empty() ? 0 : 1)) / 2.0;
                return pairs - present / 2.0;
            }
            case Heuristic::weighted_min_fill: {
                double fill = 0.0;
                for (std::size_t i = 0; i < nb.size(); ++i)
                    for (std::size_t j = i + 1; j < nb.size(); ++j)
                        if (!adjacent(nb[i], nb[j])) fill += static_cast<double>(cards_[nb[i]]) * cards_[nb[j]];
                return fill;
            }
        }
        return 0.0;
    }

    // Connects the neighbors of v into a clique and removes v.
    std::vector<std::size_t> eliminate(std::size_t v) {
        const auto nb = neighbors(v);
        for (auto a : nb) {
            for (auto b : nb)
                if (a != b) set(a, b);
            clear(a, v);
        }
        std::fill_n(mutable_row(v), words_, 0);
        alive_[v] = false;
        return nb;
    }

    bool alive(std::size_t v) const { return alive_[v]; }

private:
    std::size_t common(std::size_t a, std::size_t v) const {
        std::size_t c = 0;
        const std::uint64_t* ra = row(a);
        const std::uint64_t* rv = row(v);
        for (std::size_t w = 0; w < words_; ++w) c += static_cast<std::size_t>(std::popcount(ra[w] & rv[w]));
        return c;
    }
    const std::uint64_t* row(std::size_t v) const { return rows_.data() + v * words_; }
    std::uint64_t* mutable_row(std::size_t v) { return rows_.data() + v * words_; }
    void set(std::size_t a, std::size_t b) { mutable_row(a)[b / 64] |= std::uint64_t{1} << (b % 64); }
    void clear(std::size_t a, std::size_t b) { mutable_row(a)[b / 64] &= ~(std::uint64_t{1} << (b % 64)); }

    std::size_t n_;
    std::size_t words_;
    std::vector<std::uint64_t> rows_;
    std::vector<bool> alive_;
    const std::vector<int>& cards_;
};

void fill_stats(const BayesianNetwork& net, EliminationOrder& eo) {
    WorkingGraph g(moral_graph(net), net.cardinalities());
    double total = 0.0, worst = 0.0;
    for (VarId v : eo.order) {
        const auto nb = g.eliminate(static_cast<std::size_t>(v));
        double size = 1.0;
        for (auto u : nb) size *= net.cardinality(static_cast<VarId>(u));
        total += size;
        worst = std::max(worst, size);
    }
    eo.avg_factor_size = total / static_cast<double>(eo.order.size());
    eo.max_factor_size = worst;
}

}  // namespace

EliminationOrder order_from(const BayesianNetwork& net, std::vector<VarId> order, Heuristic label) {
    std::vector<bool> seen(net.size(), false);
    if (order.size() != net.size()) throw ContractError("elimination order must list every variable once");
    for (VarId v : order) {
        if (v < 0 || static_cast<std::size_t>(v) >= net.size() || seen[static_cast<std::size_t>(v)])
            throw ContractError("elimination order is not a permutation");
        seen[static_cast<std::size_t>(v)] = true;
    }
    EliminationOrder eo{std::move(order), label, 0.0, 0.0};
    fill_stats(net, eo);
    return eo;
}

EliminationOrder elimination_order(const BayesianNetwork& net, Heuristic heuristic) {
    const std::size_t n = net.size();
    WorkingGraph g(moral_graph(net), net.cardinalities());
    std::vector<double> cost(n);
    for (std::size_t v = 0; v < n; ++v) cost[v] = g.cost(v, heuristic);
    std::vector<VarId> order;
    order.reserve(n);
    std::vector<char> stale(n, 0);
    for (std::size_t step = 0; step < n; ++step) {
        std::size_t best = n;
        for (std::size_t v = 0; v < n; ++v)
            if (g.alive(v) && (best == n || cost[v] < cost[best])) best = v;
        order.push_back(static_cast<VarId>(best));
        const auto nb = g.eliminate(best);
        // Costs can change only within distance two of the eliminated node.
        std::vector<std::size_t> touched;
        for (auto a : nb) {
            if (!stale[a]) touched.push_back(a), stale[a] = 1;
            if (heuristic == Heuristic::min_fill || heuristic == Heuristic::weighted_min_fill)
                for (auto b : g.neighbors(a))
                    if (!stale[b]) touched.push_back(b), stale[b] = 1;
        }
        for (auto v : touched) {
            cost[v] = g.cost(v, heuristic);
            stale[v] = 0;
        }
    }
    return order_from(net, std::move(order), heuristic);
}

EliminationOrder select_order(const BayesianNetwork& net, std::uint64_t cap) {
    std::optional<EliminationOrder> best;
    for (Heuristic h : kAllHeuristics) {
        auto eo = elimination_order(net, h);
        if (eo.max_factor_size > static_cast<double>(cap)) continue;
        if (!best || eo.avg_factor_size < best->avg_factor_size ||
            (eo.avg_factor_size == best->avg_factor_size && eo.max_factor_size < best->max_factor_size))
            best = std::move(eo);
    }
    if (!best)
        throw SizeLimitError("every elimination heuristic creates a factor larger than the entry cap " + std::to_string(cap));
    return *best;
}

std::string to_string(NodeKind k) {
    switch (k) {
        case NodeKind::leaf: return "leaf";
        case NodeKind::internal: return "internal";
        case NodeKind::dummy: return "dummy";
        case NodeKind::virtual_root: return "root";
    }
    return "?";
}

EliminationTree::EliminationTree(std::vector<TreeNode> nodes, NodeId root, std::vector<VarId> order, std::vector<int> cards)
    : nodes_(std::move(nodes)), root_(root), order_(std::move(order)), cards_(std::move(cards)) {
    elim_node_.assign(cards_.size(), kNoNode);
    depth_.assign(nodes_.size(), 0);
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (nodes_[i].kind == NodeKind::internal) elim_node_[static_cast<std::size_t>(nodes_[i].var)] = static_cast<NodeId>(i);
    std::vector<NodeId> stack{root_};
    while (!stack.empty()) {
        const NodeId u = stack.back();
        stack.pop_back();
        for (NodeId c : node(u).children) {
            depth_[static_cast<std::size_t>(c)] = depth_[static_cast<std::size_t>(u)] + 1;
            stack.push_back(c);
        }
    }
}

int EliminationTree::height() const noexcept {
    int h = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (nodes_[i].children.empty()) h = std::max(h, depth_[i]);
    if (root_ != kNoNode && nodes_[static_cast<std::size_t>(root_)].kind == NodeKind::virtual_root) h = std::max(0, h - 1);
    return h;
}

std::size_t EliminationTree::max_children() const noexcept {
    std::size_t m = 0;
    for (const auto& n : nodes_)
        if (n.kind != NodeKind::virtual_root) m = std::max(m, n.children.size());
    return m;
}

std::size_t EliminationTree::real_node_count() const noexcept {
    return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) {
        return n.kind == NodeKind::leaf || n.kind == NodeKind::internal;
    }));
}

bool EliminationTree::is_binary() const noexcept {
    return std::all_of(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.children.size() <= 2; });
}

std::vector<NodeId> EliminationTree::postorder() const {
    std::vector<NodeId> out;
    out.reserve(nodes_.size());
    std::vector<std::pair<NodeId, std::size_t>> stack{{root_, 0}};
    while (!stack.empty()) {
        auto& [u, next] = stack.back();
        const auto& ch = node(u).children;
        if (next < ch.size()) {
            const NodeId c = ch[next++];
            stack.emplace_back(c, 0);
        } else {
            out.push_back(u);
            stack.pop_back();
        }
    }
    return out;
}

bool EliminationTree::is_ancestor(NodeId ancestor, NodeId u) const {
    for (NodeId p = node(u).parent; p != kNoNode; p = node(p).parent)
        if (p == ancestor) return true;
    return false;
}

std::uint64_t EliminationTree::fingerprint() const {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](std::uint64_t x) {
        for (int i = 0; i < 8; ++i) {
            h ^= (x >> (8 * i)) & 0xFF;
            h *= 1099511628211ULL;
        }
    };
    mix(nodes_.size());
    for (const auto& n : nodes_) {
        mix(static_cast<std::uint64_t>(n.kind));
        mix(static_cast<std::uint64_t>(static_cast<std::int64_t>(n.var)));
        mix(static_cast<std::uint64_t>(static_cast<std::int64_t>(n.parent)));
        mix(n.partial_cost);
        mix(n.weight);
    }
    return h;
}

EliminationTree build_elimination_tree(const BayesianNetwork& net, const std::vector<VarId>& order) {
    const auto n = net.size();
    order_from(net, order);  // permutation check
    std::vector<TreeNode> nodes;
    nodes.reserve(2 * n + 1);
    std::vector<NodeId> live;  // ascending node ids
    for (VarId v = 0; v < static_cast<VarId>(n); ++v) {
        TreeNode leaf;
        leaf.kind = NodeKind::leaf;
        leaf.var = v;
        leaf.scope_after = net.cpt(v).scope();
        leaf.weight = net.cpt(v).size();
        nodes.push_back(std::move(leaf));
        live.push_back(v);
    }
    const auto& cards = net.cardinalities();
    auto table_size = [&](const std::vector<VarId>& scope) {
        std::vector<int> cs;
        for (VarId s : scope) cs.push_back(cards[static_cast<std::size_t>(s)]);
        return checked_table_size(scope, cs, entry_cap());
    };

    for (VarId x : order) {
        TreeNode node;
        node.kind = NodeKind::internal;
        node.var = x;
        const auto id = static_cast<NodeId>(nodes.size());
        std::vector<VarId> join_scope;
        std::vector<NodeId> rest;
        for (NodeId f : live) {
            const auto& s = nodes[static_cast<std::size_t>(f)].scope_after;
            if (!std::binary_search(s.begin(), s.end(), x)) {
                rest.push_back(f);
                continue;
            }
            node.children.push_back(f);
            std::vector<VarId> merged;
            std::set_union(join_scope.begin(), join_scope.end(), s.begin(), s.end(), std::back_inserter(merged));
            join_scope = std::move(merged);
        }
        std::uint64_t join_size = 0;
        try {
            join_size = table_size(join_scope);
        } catch (const SizeLimitError& e) {
            throw SizeLimitError("eliminating variable " + net.variable(x).name + ": " + e.what());
        }
        node.scope_after = join_scope;
        node.scope_after.erase(std::find(node.scope_after.begin(), node.scope_after.end(), x));
        node.partial_cost = 2 * join_size;
        node.weight = join_size / static_cast<std::uint64_t>(cards[static_cast<std::size_t>(x)]);
        node.total_cost = node.partial_cost;
        node.vars = {x};
        for (NodeId c : node.children) {
            auto& child = nodes[static_cast<std::size_t>(c)];
            child.parent = id;
            node.total_cost += child.total_cost;
            std::vector<VarId> merged;
            std::set_union(node.vars.begin(), node.vars.end(), child.vars.begin(), child.vars.end(), std::back_inserter(merged));
            node.vars = std::move(merged);
        }
        nodes.push_back(std::move(node));
        rest.push_back(id);
        live = std::move(rest);
    }

    NodeId root = live.front();
    if (live.size() > 1) {
        TreeNode top;
        top.kind = NodeKind::virtual_root;
        top.children = live;
        top.weight = 1;
        root = static_cast<NodeId>(nodes.size());
        for (NodeId c : live) {
            auto& child = nodes[static_cast<std::size_t>(c)];
            child.parent = root;
            top.total_cost += child.total_cost;
        }
        for (VarId v = 0; v < static_cast<VarId>(n); ++v) top.vars.push_back(v);
        nodes.push_back(std::move(top));
    }
    return EliminationTree(std::move(nodes), root, order, cards);
}

EliminationTree binarize(const EliminationTree& tree) {
    std::vector<TreeNode> nodes = tree.nodes();
    // Groups `kids` under a fresh dummy when more than one remains.
    std::function<NodeId(NodeId, std::vector<NodeId>)> group = [&](NodeId parent, std::vector<NodeId> kids) -> NodeId {
        if (kids.size() == 1) {
            nodes[static_cast<std::size_t>(kids[0])].parent = parent;
            return kids[0];
        }
        TreeNode dummy;
        dummy.kind = NodeKind::dummy;
        dummy.parent = parent;
        const auto id = static_cast<NodeId>(nodes.size());
        nodes.push_back(dummy);
        const auto half = kids.size() / 2;
        std::vector<NodeId> left(kids.begin(), kids.begin() + static_cast<std::ptrdiff_t>(half));
        std::vector<NodeId> right(kids.begin() + static_cast<std::ptrdiff_t>(half), kids.end());
        const NodeId l = group(id, std::move(left));
        const NodeId r = group(id, std::move(right));
        TreeNode& d = nodes[static_cast<std::size_t>(id)];
        d.children = {l, r};
        for (NodeId c : d.children) {
            const TreeNode& child = nodes[static_cast<std::size_t>(c)];
            d.total_cost += child.total_cost;
            std::vector<VarId> merged;
            std::set_union(d.vars.begin(), d.vars.end(), child.vars.begin(), child.vars.end(), std::back_inserter(merged));
            d.vars = std::move(merged);
            merged.clear();
            std::set_union(d.scope_after.begin(), d.scope_after.end(), child.scope_after.begin(), child.scope_after.end(),
                           std::back_inserter(merged));
            d.scope_after = std::move(merged);
        }
        return id;
    };
    const auto original = nodes.size();
    for (std::size_t u = 0; u < original; ++u) {
        auto kids = nodes[u].children;
        if (kids.size() <= 2) continue;
        const auto half = kids.size() / 2;
        std::vector<NodeId> left(kids.begin(), kids.begin() + static_cast<std::ptrdiff_t>(half));
        std::vector<NodeId> right(kids.begin() + static_cast<std::ptrdiff_t>(half), kids.end());
        const NodeId l = group(static_cast<NodeId>(u), std::move(left));
        const NodeId r = group(static_cast<NodeId>(u), std::move(right));
        nodes[u].children = {l, r};
    }
    return EliminationTree(std::move(nodes), tree.root(), tree.order(), tree.cardinalities());
}

std::string dump_tree(const EliminationTree& tree) {
    std::ostringstream out;
    for (std::size_t i = 0; i < tree.size(); ++i) {
        const TreeNode& n = tree.node(static_cast<NodeId>(i));
        out << "node " << i << ' ' << to_string(n.kind) << ' ';
        if (n.var >= 0) out << n.var;
        else out << '-';
        out << " parent=";
        if (n.parent == kNoNode) out << '-';
        else out << n.parent;
        out << " c=" << n.partial_cost << " U=" << n.total_cost << " w=" << n.weight << '\n';
    }
    return out.str();
}

}  // namespace bnmat
