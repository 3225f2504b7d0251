#include "fixtures.hpp"

#include <algorithm>
#include <bit>
#include <numeric>

#include "bnmat/factor.hpp"

#ifndef BNMAT_SOURCE_DIR
#define BNMAT_SOURCE_DIR "."
#endif

namespace fixtures {

using namespace bnmat;

namespace {

Factor cpt_from_rows(VarId child, const std::vector<VarId>& parents, const std::vector<int>& cards,
                     const std::vector<double>& values) {
    auto [scope, scope_cards] = cpt_scope(child, parents, cards);
    return Factor(scope, scope_cards, values);
}

}  // namespace

BayesianNetwork survey() {
    const std::vector<std::string> names{"A", "S", "E", "O", "R", "T"};
    const std::vector<std::vector<std::string>> states{
        {"young", "adult", "old"}, {"M", "F"}, {"high", "uni"}, {"emp", "self"}, {"small", "big"}, {"car", "train", "other"}};
    std::vector<Variable> vars;
    std::vector<int> cards;
    for (std::size_t i = 0; i < names.size(); ++i) {
        vars.push_back({static_cast<VarId>(i), names[i], static_cast<int>(states[i].size()), states[i]});
        cards.push_back(static_cast<int>(states[i].size()));
    }
    const std::vector<std::vector<VarId>> parents{{}, {}, {0, 1}, {2}, {2}, {3, 4}};
    // Row-major over ascending ids, child fastest when it has the largest id.
    std::vector<Factor> cpts;
    cpts.push_back(cpt_from_rows(0, {}, cards, {0.3, 0.5, 0.2}));
    cpts.push_back(cpt_from_rows(1, {}, cards, {0.6, 0.4}));
    cpts.push_back(cpt_from_rows(2, {0, 1}, cards, {0.75, 0.25, 0.64, 0.36, 0.72, 0.28, 0.7, 0.3, 0.88, 0.12, 0.9, 0.1}));
    cpts.push_back(cpt_from_rows(3, {2}, cards, {0.96, 0.04, 0.92, 0.08}));
    cpts.push_back(cpt_from_rows(4, {2}, cards, {0.25, 0.75, 0.2, 0.8}));
    cpts.push_back(cpt_from_rows(5, {3, 4}, cards, {0.48, 0.42, 0.1, 0.58, 0.24, 0.18, 0.56, 0.36, 0.08, 0.7, 0.21, 0.09}));
    return BayesianNetwork(std::move(vars), parents, std::move(cpts));
}

BayesianNetwork random_network(Rng& rng, int n, int max_card, int max_parents) {
    std::uniform_int_distribution<int> card_dist(1, max_card);
    std::vector<Variable> vars;
    std::vector<int> cards;
    for (int i = 0; i < n; ++i) {
        const int card = card_dist(rng);
        std::vector<std::string> states;
        for (int s = 0; s < card; ++s) states.push_back("s" + std::to_string(s));
        vars.push_back({i, "v" + std::to_string(i), card, states});
        cards.push_back(card);
    }
    // Parents are drawn among earlier variables of a random permutation, then relabeled.
    std::vector<VarId> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<std::vector<VarId>> parents(static_cast<std::size_t>(n));
    for (int i = 1; i < n; ++i) {
        const int count = std::uniform_int_distribution<int>(0, std::min(i, max_parents))(rng);
        std::vector<int> pool(static_cast<std::size_t>(i));
        std::iota(pool.begin(), pool.end(), 0);
        std::shuffle(pool.begin(), pool.end(), rng);
        auto& ps = parents[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
        for (int j = 0; j < count; ++j) ps.push_back(perm[static_cast<std::size_t>(pool[static_cast<std::size_t>(j)])]);
        std::sort(ps.begin(), ps.end());
    }
    std::uniform_real_distribution<double> val(0.05, 1.0);
    std::vector<Factor> cpts;
    for (int v = 0; v < n; ++v) {
        auto [scope, scope_cards] = cpt_scope(v, parents[static_cast<std::size_t>(v)], cards);
        std::size_t size = 1;
        for (int c : scope_cards) size *= static_cast<std::size_t>(c);
        std::vector<double> values(size);
        for (double& x : values) x = val(rng);
        // Normalize over the child: stride = product of cards after the child in the scope.
        const auto pos = static_cast<std::size_t>(std::find(scope.begin(), scope.end(), v) - scope.begin());
        std::size_t inner = 1;
        for (std::size_t i = pos + 1; i < scope.size(); ++i) inner *= static_cast<std::size_t>(scope_cards[i]);
        const auto card = static_cast<std::size_t>(cards[static_cast<std::size_t>(v)]);
        for (std::size_t outer = 0; outer < size / (card * inner); ++outer)
            for (std::size_t in = 0; in < inner; ++in) {
                double sum = 0;
                for (std::size_t s = 0; s < card; ++s) sum += values[(outer * card + s) * inner + in];
                for (std::size_t s = 0; s < card; ++s) values[(outer * card + s) * inner + in] /= sum;
            }
        cpts.emplace_back(scope, scope_cards, std::move(values));
    }
    return BayesianNetwork(std::move(vars), std::move(parents), std::move(cpts));
}

Query random_query(Rng& rng, const BayesianNetwork& net) {
    Query q;
    std::uniform_int_distribution<int> role(0, 2);
    for (VarId v = 0; v < static_cast<VarId>(net.size()); ++v) {
        switch (role(rng)) {
            case 0: q.free.push_back(v); break;
            case 1: q.bound[v] = std::uniform_int_distribution<int>(0, net.cardinality(v) - 1)(rng); break;
            default: break;
        }
    }
    return q;
}

std::vector<VarId> random_order(Rng& rng, std::size_t n) {
    std::vector<VarId> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    return order;
}

EliminationTree random_annotated_tree(Rng& rng, int variables) {
    const BayesianNetwork net = random_network(rng, variables, 3, 3);
    const EliminationTree base = build_elimination_tree(net, random_order(rng, net.size()));
    std::vector<TreeNode> nodes = base.nodes();
    std::uniform_int_distribution<std::uint64_t> cost(1, 1000), weight(1, 16);
    for (NodeId u : base.postorder()) {
        auto& node = nodes[static_cast<std::size_t>(u)];
        if (node.kind != NodeKind::internal) continue;
        node.partial_cost = cost(rng);
        node.weight = weight(rng);
        node.total_cost = node.partial_cost;
        for (NodeId c : node.children) node.total_cost += nodes[static_cast<std::size_t>(c)].total_cost;
    }
    if (nodes[static_cast<std::size_t>(base.root())].kind == NodeKind::virtual_root) {
        auto& root = nodes[static_cast<std::size_t>(base.root())];
        root.total_cost = 0;
        for (NodeId c : root.children) root.total_cost += nodes[static_cast<std::size_t>(c)].total_cost;
    }
    return EliminationTree(std::move(nodes), base.root(), base.order(), base.cardinalities());
}

UsefulnessProfile random_profile(Rng& rng, const EliminationTree& tree) {
    UsefulnessProfile p;
    p.base.assign(tree.size(), 0.0);
    // Top-down: each selectable node draws at least its nearest selectable ancestor's value.
    std::vector<NodeId> stack{tree.root()};
    std::vector<double> floor(tree.size(), 0.0);
    while (!stack.empty()) {
        const NodeId u = stack.back();
        stack.pop_back();
        const auto& node = tree.node(u);
        double inherited = floor[static_cast<std::size_t>(u)];
        if (node.selectable()) {
            const int lo = static_cast<int>(inherited * 64);
            p.base[static_cast<std::size_t>(u)] = std::uniform_int_distribution<int>(lo, 64)(rng) / 64.0;
            inherited = p.base[static_cast<std::size_t>(u)];
        }
        for (NodeId c : node.children) {
            floor[static_cast<std::size_t>(c)] = inherited;
            stack.push_back(c);
        }
    }
    return p;
}

std::vector<Query> all_free_queries(std::size_t n, const std::vector<int>& sizes) {
    std::vector<Query> out;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        const int r = std::popcount(mask);
        if (std::find(sizes.begin(), sizes.end(), r) == sizes.end()) continue;
        Query q;
        for (std::size_t v = 0; v < n; ++v)
            if (mask >> v & 1u) q.free.push_back(static_cast<VarId>(v));
        out.push_back(std::move(q));
    }
    return out;
}

double counted_usefulness(NodeId u, const std::vector<NodeId>& selected, const EliminationTree& tree,
                          const std::vector<Query>& queries) {
    auto summed_out = [&](NodeId x, const Query& q) {
        for (VarId v : tree.node(x).vars)
            if (q.role(v) != Role::summed) return false;
        return true;
    };
    std::size_t hits = 0;
    for (const Query& q : queries) {
        if (!summed_out(u, q)) continue;
        bool shadowed = false;
        for (NodeId a = tree.node(u).parent; a != kNoNode && !shadowed; a = tree.node(a).parent)
            if (std::find(selected.begin(), selected.end(), a) != selected.end() && summed_out(a, q)) shadowed = true;
        if (!shadowed) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(queries.size());
}

std::string source_path(const std::string& relative) { return std::string(BNMAT_SOURCE_DIR) + "/" + relative; }

}  // namespace fixtures
