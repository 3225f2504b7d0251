#include "bnmat/jtree.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <tuple>

#include "bnmat/elimination.hpp"
#include "bnmat/error.hpp"

namespace bnmat {

namespace {

std::vector<VarId> intersect(const std::vector<VarId>& a, const std::vector<VarId>& b) {
    std::vector<VarId> out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

std::vector<int> cards_of(const std::vector<VarId>& scope, const std::vector<int>& cards) {
    std::vector<int> out;
    out.reserve(scope.size());
    for (VarId v : scope) out.push_back(cards[static_cast<std::size_t>(v)]);
    return out;
}

Factor marginal(const Factor& f, const std::vector<VarId>& keep) {
    Factor out = f;
    for (VarId v : f.scope())
        if (!std::binary_search(keep.begin(), keep.end(), v)) out = factor_sum_out(out, v);
    return out;
}

// Elementwise num/den over the same scope, with 0/0 = 0.
Factor ratio(const Factor& num, const Factor& den) {
    std::vector<double> values(num.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double d = den.values()[i];
        values[i] = d == 0.0 ? 0.0 : num.values()[i] / d;
    }
    return Factor(num.scope(), num.cardinalities(), std::move(values));
}

Factor reciprocal(const Factor& f) {
    std::vector<double> values(f.size());
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = f.values()[i] == 0.0 ? 0.0 : 1.0 / f.values()[i];
    return Factor(f.scope(), f.cardinalities(), std::move(values));
}

std::uint64_t join_entries(std::span<const Factor* const> factors, const std::vector<int>& cards) {
    std::vector<VarId> scope;
    for (const Factor* f : factors) scope.insert(scope.end(), f->scope().begin(), f->scope().end());
    std::sort(scope.begin(), scope.end());
    scope.erase(std::unique(scope.begin(), scope.end()), scope.end());
    const auto c = cards_of(scope, cards);
    return checked_table_size(scope, c, entry_cap());
}

struct DisjointSets {
    std::vector<int> up;
    explicit DisjointSets(std::size_t n) : up(n) { std::iota(up.begin(), up.end(), 0); }
    int find(int x) { return up[static_cast<std::size_t>(x)] == x ? x : up[static_cast<std::size_t>(x)] = find(up[static_cast<std::size_t>(x)]); }
    bool unite(int a, int b) {
        a = find(a), b = find(b);
        if (a == b) return false;
        up[static_cast<std::size_t>(b)] = a;
        return true;
    }
};

}  // namespace

std::vector<std::vector<std::pair<int, int>>> JunctionTree::adjacency() const {
    std::vector<std::vector<std::pair<int, int>>> adj(cliques.size());
    for (std::size_t e = 0; e < edges.size(); ++e) {
        adj[static_cast<std::size_t>(edges[e].a)].emplace_back(edges[e].b, static_cast<int>(e));
        adj[static_cast<std::size_t>(edges[e].b)].emplace_back(edges[e].a, static_cast<int>(e));
    }
    return adj;
}

JunctionTree build_junction_tree(const BayesianNetwork& net, const std::vector<VarId>& order) {
    const auto n = net.size();
    if (order.size() != n) throw ContractError("elimination order must list every variable once");
    std::vector<char> placed(n, 0);
    for (VarId v : order) {
        if (v < 0 || static_cast<std::size_t>(v) >= n || placed[static_cast<std::size_t>(v)])
            throw ContractError("elimination order must list every variable once");
        placed[static_cast<std::size_t>(v)] = 1;
    }

    const MoralGraph moral = moral_graph(net);
    std::vector<std::set<VarId>> graph(n);
    for (std::size_t v = 0; v < n; ++v) graph[v].insert(moral.adjacency[v].begin(), moral.adjacency[v].end());

    JunctionTree jt;
    jt.cardinalities = net.cardinalities();
    std::vector<std::vector<VarId>> elimination_cliques;
    for (VarId x : order) {
        auto& nb = graph[static_cast<std::size_t>(x)];
        std::vector<VarId> clique(nb.begin(), nb.end());
        clique.push_back(x);
        std::sort(clique.begin(), clique.end());
        for (VarId a : nb) {
            auto& na = graph[static_cast<std::size_t>(a)];
            na.erase(x);
            for (VarId b : nb)
                if (a != b) na.insert(b);
        }
        nb.clear();
        elimination_cliques.push_back(std::move(clique));
    }

    // Keep maximal cliques; among duplicates the first one survives.
    for (std::size_t i = 0; i < elimination_cliques.size(); ++i) {
        const auto& ci = elimination_cliques[i];
        bool maximal = true;
        for (std::size_t j = 0; j < elimination_cliques.size() && maximal; ++j) {
            if (i == j) continue;
            const auto& cj = elimination_cliques[j];
            if (cj.size() < ci.size() || !std::includes(cj.begin(), cj.end(), ci.begin(), ci.end())) continue;
            if (cj.size() > ci.size() || j < i) maximal = false;
        }
        if (maximal) jt.cliques.push_back(ci);
    }

    // Kruskal on separator size, heaviest first; zero-weight edges join disconnected parts.
    std::vector<std::tuple<std::size_t, int, int>> candidates;
    for (std::size_t i = 0; i < jt.cliques.size(); ++i)
        for (std::size_t j = i + 1; j < jt.cliques.size(); ++j)
            candidates.emplace_back(intersect(jt.cliques[i], jt.cliques[j]).size(), static_cast<int>(i), static_cast<int>(j));
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const auto& l, const auto& r) { return std::get<0>(l) > std::get<0>(r); });
    DisjointSets sets(jt.cliques.size());
    for (const auto& [w, a, b] : candidates)
        if (sets.unite(a, b))
            jt.edges.push_back({a, b, intersect(jt.cliques[static_cast<std::size_t>(a)], jt.cliques[static_cast<std::size_t>(b)])});

    jt.potentials.clear();
    for (const auto& c : jt.cliques) {
        const auto cc = cards_of(c, jt.cardinalities);
        checked_table_size(c, cc, entry_cap());
        jt.potentials.push_back(Factor::constant(c, cc, 1.0));
    }
    jt.cpt_home.assign(n, -1);
    for (VarId v = 0; v < static_cast<VarId>(n); ++v) {
        const auto& scope = net.cpt(v).scope();
        for (std::size_t c = 0; c < jt.cliques.size(); ++c)
            if (std::includes(jt.cliques[c].begin(), jt.cliques[c].end(), scope.begin(), scope.end())) {
                jt.cpt_home[static_cast<std::size_t>(v)] = static_cast<int>(c);
                break;
            }
        if (jt.cpt_home[static_cast<std::size_t>(v)] < 0)
            throw InvariantError("no clique covers the CPT of " + net.variable(v).name);
        auto& pot = jt.potentials[static_cast<std::size_t>(jt.cpt_home[static_cast<std::size_t>(v)])];
        pot = factor_join(pot, net.cpt(v));
    }
    return jt;
}

JunctionTree calibrate(JunctionTree jt) {
    if (jt.cliques.empty()) return jt;
    const auto adj = jt.adjacency();
    // Rooted at clique 0: parent edge and a preorder.
    std::vector<int> parent(jt.cliques.size(), -1), parent_edge(jt.cliques.size(), -1), preorder{0};
    std::vector<char> seen(jt.cliques.size(), 0);
    seen[0] = 1;
    for (std::size_t i = 0; i < preorder.size(); ++i) {
        const int c = preorder[i];
        for (auto [nb, e] : adj[static_cast<std::size_t>(c)]) {
            if (seen[static_cast<std::size_t>(nb)]) continue;
            seen[static_cast<std::size_t>(nb)] = 1;
            parent[static_cast<std::size_t>(nb)] = c;
            parent_edge[static_cast<std::size_t>(nb)] = e;
            preorder.push_back(nb);
        }
    }
    jt.separator_potentials.clear();
    for (const auto& e : jt.edges)
        jt.separator_potentials.push_back(Factor::constant(e.separator, cards_of(e.separator, jt.cardinalities), 1.0));

    auto pass = [&](int from, int to, int e) {
        auto& sep = jt.separator_potentials[static_cast<std::size_t>(e)];
        Factor updated = marginal(jt.potentials[static_cast<std::size_t>(from)], jt.edges[static_cast<std::size_t>(e)].separator);
        auto& target = jt.potentials[static_cast<std::size_t>(to)];
        target = factor_join(target, ratio(updated, sep));
        sep = std::move(updated);
    };
    for (auto it = preorder.rbegin(); it != preorder.rend(); ++it)
        if (parent[static_cast<std::size_t>(*it)] >= 0) pass(*it, parent[static_cast<std::size_t>(*it)], parent_edge[static_cast<std::size_t>(*it)]);
    for (int c : preorder)
        if (parent[static_cast<std::size_t>(c)] >= 0) pass(parent[static_cast<std::size_t>(c)], c, parent_edge[static_cast<std::size_t>(c)]);
    jt.calibrated = true;
    return jt;
}

JtAnswer jt_query(const JunctionTree& jt, const Query& q) {
    if (!jt.calibrated) throw ContractError("junction tree must be calibrated before answering queries");
    const auto n = jt.cardinalities.size();
    std::vector<VarId> targets = q.free;
    for (const auto& [v, s] : q.bound) targets.push_back(v);
    std::sort(targets.begin(), targets.end());
    for (VarId v : targets)
        if (v < 0 || static_cast<std::size_t>(v) >= n) throw ContractError("query variable out of range");

    auto restrict = [&](Factor f) {
        for (const auto& [v, s] : q.bound)
            if (f.contains(v)) f = factor_reduce(f, v, s);
        return f;
    };
    JtAnswer out;
    if (targets.empty()) {
        out.table = Factor::scalar(jt.potentials.empty() ? 1.0 : jt.potentials[0].total_mass());
        return out;
    }

    for (std::size_t c = 0; c < jt.cliques.size(); ++c) {
        const auto& clique = jt.cliques[c];
        if (!std::includes(clique.begin(), clique.end(), targets.begin(), targets.end())) continue;
        const Factor* one[] = {&jt.potentials[c]};
        out.cost_estimated = 2 * join_entries(one, jt.cardinalities);
        out.table = marginal(restrict(jt.potentials[c]), q.free);
        out.cliques_used = 1;
        return out;
    }

    // Steiner subtree: repeatedly prune leaf cliques that hold no target needed elsewhere.
    std::vector<int> home(n, -1);
    for (VarId v : targets)
        for (std::size_t c = 0; c < jt.cliques.size(); ++c)
            if (std::binary_search(jt.cliques[c].begin(), jt.cliques[c].end(), v)) {
                home[static_cast<std::size_t>(v)] = static_cast<int>(c);
                break;
            }
    std::vector<char> terminal(jt.cliques.size(), 0);
    for (VarId v : targets) terminal[static_cast<std::size_t>(home[static_cast<std::size_t>(v)])] = 1;
    const auto adj = jt.adjacency();
    std::vector<char> alive(jt.cliques.size(), 1);
    std::vector<int> degree(jt.cliques.size());
    for (std::size_t c = 0; c < jt.cliques.size(); ++c) degree[c] = static_cast<int>(adj[c].size());
    std::vector<int> leaves;
    for (std::size_t c = 0; c < jt.cliques.size(); ++c)
        if (degree[c] <= 1 && !terminal[c]) leaves.push_back(static_cast<int>(c));
    while (!leaves.empty()) {
        const int c = leaves.back();
        leaves.pop_back();
        if (!alive[static_cast<std::size_t>(c)]) continue;
        alive[static_cast<std::size_t>(c)] = 0;
        for (auto [nb, e] : adj[static_cast<std::size_t>(c)])
            if (alive[static_cast<std::size_t>(nb)] && --degree[static_cast<std::size_t>(nb)] <= 1 && !terminal[static_cast<std::size_t>(nb)])
                leaves.push_back(nb);
    }

    const int root = home[static_cast<std::size_t>(targets.front())];
    std::vector<char> keep_var(n, 0);
    for (VarId v : targets) keep_var[static_cast<std::size_t>(v)] = 1;

    // Upward messages: clique potential times child messages over the separator marginal.
    auto message = [&](auto&& self, int c, int from_edge) -> Factor {
        std::vector<Factor> parts{restrict(jt.potentials[static_cast<std::size_t>(c)])};
        for (auto [nb, e] : adj[static_cast<std::size_t>(c)]) {
            if (e == from_edge || !alive[static_cast<std::size_t>(nb)]) continue;
            parts.push_back(self(self, nb, e));
        }
        std::vector<VarId> keep;
        if (from_edge >= 0) {
            parts.push_back(restrict(reciprocal(jt.separator_potentials[static_cast<std::size_t>(from_edge)])));
            keep = jt.edges[static_cast<std::size_t>(from_edge)].separator;
        }
        std::vector<const Factor*> ptrs;
        for (const auto& f : parts) ptrs.push_back(&f);
        out.cost_estimated += 2 * join_entries(ptrs, jt.cardinalities);
        ++out.cliques_used;
        Factor joined = factor_join(std::span<const Factor* const>(ptrs));
        const std::vector<VarId> scope = joined.scope();
        for (VarId v : scope)
            if (!keep_var[static_cast<std::size_t>(v)] && !std::binary_search(keep.begin(), keep.end(), v))
                joined = factor_sum_out(joined, v);
        return joined;
    };
    out.table = marginal(message(message, root, -1), q.free);
    return out;
}

JunctionStats junction_stats(const JunctionTree& jt) {
    JunctionStats s;
    s.cliques = jt.cliques.size();
    for (const auto& c : jt.cliques) {
        const auto cc = cards_of(c, jt.cardinalities);
        const auto entries = checked_table_size(c, cc, ~std::uint64_t{0});
        s.max_clique_vars = std::max(s.max_clique_vars, c.size());
        s.max_clique_entries = std::max(s.max_clique_entries, entries);
        s.total_entries += entries;
    }
    for (const auto& e : jt.edges)
        s.total_entries += checked_table_size(e.separator, cards_of(e.separator, jt.cardinalities), ~std::uint64_t{0});
    return s;
}

std::vector<VarId> running_intersection_violations(const JunctionTree& jt) {
    const auto adj = jt.adjacency();
    std::vector<VarId> bad;
    for (VarId v = 0; v < static_cast<VarId>(jt.cardinalities.size()); ++v) {
        std::vector<int> holders;
        for (std::size_t c = 0; c < jt.cliques.size(); ++c)
            if (std::binary_search(jt.cliques[c].begin(), jt.cliques[c].end(), v)) holders.push_back(static_cast<int>(c));
        if (holders.size() <= 1) continue;
        std::vector<char> seen(jt.cliques.size(), 0);
        std::vector<int> stack{holders.front()};
        seen[static_cast<std::size_t>(holders.front())] = 1;
        std::size_t reached = 0;
        while (!stack.empty()) {
            const int c = stack.back();
            stack.pop_back();
            ++reached;
            for (auto [nb, e] : adj[static_cast<std::size_t>(c)]) {
                const auto& sep = jt.edges[static_cast<std::size_t>(e)].separator;
                if (seen[static_cast<std::size_t>(nb)] || !std::binary_search(sep.begin(), sep.end(), v)) continue;
                seen[static_cast<std::size_t>(nb)] = 1;
                stack.push_back(nb);
            }
        }
        if (reached != holders.size()) bad.push_back(v);
    }
    return bad;
}

}  // namespace bnmat
