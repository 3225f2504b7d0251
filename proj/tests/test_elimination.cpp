#include <doctest.h>

#include <algorithm>
#include <set>

#include "bnmat/elimination.hpp"
#include "bnmat/error.hpp"
#include "bnmat/parsers.hpp"
#include "bnmat/planner.hpp"
#include "fixtures.hpp"

using namespace bnmat;

namespace {

BayesianNetwork chain(int length, int card = 2) {
    std::vector<Variable> vars;
    std::vector<std::vector<VarId>> parents;
    std::vector<Factor> cpts;
    std::vector<int> cards(static_cast<std::size_t>(length), card);
    std::vector<std::string> states;
    for (int s = 0; s < card; ++s) states.push_back("s" + std::to_string(s));
    for (int i = 0; i < length; ++i) {
        vars.push_back({i, "x" + std::to_string(i), card, states});
        parents.push_back(i == 0 ? std::vector<VarId>{} : std::vector<VarId>{i - 1});
        auto [scope, sc] = cpt_scope(i, parents.back(), cards);
        const std::size_t rows = i == 0 ? 1 : static_cast<std::size_t>(card);
        cpts.emplace_back(scope, sc, std::vector<double>(rows * static_cast<std::size_t>(card), 1.0 / card));
    }
    return BayesianNetwork(std::move(vars), std::move(parents), std::move(cpts));
}

// Fill edges created by eliminating along `order`, counted on an explicit edge set.
std::size_t fill_of(const BayesianNetwork& net, const std::vector<VarId>& order) {
    std::set<std::pair<VarId, VarId>> edges;
    auto add = [&](VarId a, VarId b) { edges.insert({std::min(a, b), std::max(a, b)}); };
    for (VarId v = 0; v < static_cast<VarId>(net.size()); ++v) {
        const auto& ps = net.parents(v);
        for (VarId p : ps) add(p, v);
        for (std::size_t i = 0; i < ps.size(); ++i)
            for (std::size_t j = i + 1; j < ps.size(); ++j) add(ps[i], ps[j]);
    }
    std::vector<char> gone(net.size(), 0);
    std::size_t fill = 0;
    for (VarId x : order) {
        std::vector<VarId> nb;
        for (auto [a, b] : edges) {
            if (a == x && !gone[static_cast<std::size_t>(b)]) nb.push_back(b);
            if (b == x && !gone[static_cast<std::size_t>(a)]) nb.push_back(a);
        }
        for (std::size_t i = 0; i < nb.size(); ++i)
            for (std::size_t j = i + 1; j < nb.size(); ++j)
                if (!edges.count({std::min(nb[i], nb[j]), std::max(nb[i], nb[j])})) ++fill, add(nb[i], nb[j]);
        gone[static_cast<std::size_t>(x)] = 1;
    }
    return fill;
}

std::uint64_t product(const std::vector<VarId>& scope, const std::vector<int>& cards) {
    std::uint64_t p = 1;
    for (VarId v : scope) p *= static_cast<std::uint64_t>(cards[static_cast<std::size_t>(v)]);
    return p;
}

}  // namespace

TEST_CASE("moral graphs") {
    const auto c = moral_graph(chain(3));
    CHECK(c.edge_count() == 2);
    CHECK(c.adjacent(0, 1));
    CHECK_FALSE(c.adjacent(0, 2));

    const auto s = moral_graph(fixtures::survey());
    CHECK(s.edge_count() == 8);
    CHECK(s.adjacent(0, 1));  // A-S, co-parents of E
    CHECK(s.adjacent(3, 4));  // O-R, co-parents of T
    for (VarId a = 0; a < 6; ++a)
        for (VarId b : s.adjacency[static_cast<std::size_t>(a)]) CHECK(s.adjacent(b, a));

    std::vector<Variable> vars{{0, "a", 2, {"x", "y"}}, {1, "b", 2, {"x", "y"}}};
    const BayesianNetwork loose(vars, {{}, {}}, {Factor({0}, {2}, {0.5, 0.5}), Factor({1}, {2}, {0.5, 0.5})});
    CHECK(moral_graph(loose).edge_count() == 0);
}

TEST_CASE("simplicial nodes go first under min-fill, ties by smallest id") {
    // Star: hub 0 with leaves 1..3; every leaf is simplicial, the hub is not.
    std::vector<Variable> vars;
    for (int i = 0; i < 4; ++i) vars.push_back({i, "v" + std::to_string(i), 2, {"a", "b"}});
    const std::vector<int> cards(4, 2);
    std::vector<std::vector<VarId>> parents{{}, {0}, {0}, {0}};
    std::vector<Factor> cpts{Factor({0}, {2}, {0.5, 0.5})};
    for (int i = 1; i < 4; ++i) cpts.emplace_back(std::vector<VarId>{0, i}, std::vector<int>{2, 2}, std::vector<double>{0.5, 0.5, 0.5, 0.5});
    const BayesianNetwork star(vars, parents, cpts);
    const auto mf = elimination_order(star, Heuristic::min_fill);
    CHECK(mf.order.front() == 1);
    CHECK(mf.order[1] == 2);
}

TEST_CASE("min-fill on survey adds no fill edges") {
    const auto net = fixtures::survey();
    const auto mf = elimination_order(net, Heuristic::min_fill);
    CHECK(fill_of(net, mf.order) == 0);
    CHECK(fill_of(net, {0, 1, 5, 2, 3, 4}) == 0);
}

TEST_CASE("order statistics use the summed-out factor sizes") {
    const auto net = fixtures::survey();
    const auto eo = order_from(net, {0, 1, 5, 2, 3, 4});
    // Summed-out scopes: A->{S,E} 4, S->{E} 2, T->{O,R} 4, E->{O,R} 4, O->{R} 2, R->{} 1.
    CHECK(eo.avg_factor_size == doctest::Approx(17.0 / 6.0));
    CHECK(eo.max_factor_size == 4.0);
}

TEST_CASE("select_order applies the smallest-average rule with max as tie-breaker") {
    fixtures::Rng rng(5);
    for (int trial = 0; trial < 40; ++trial) {
        const auto net = fixtures::random_network(rng, 3 + static_cast<int>(rng() % 12), 4);
        const auto chosen = select_order(net);
        std::optional<EliminationOrder> best;
        for (Heuristic h : kAllHeuristics) {
            const auto eo = elimination_order(net, h);
            if (!best || std::make_pair(eo.avg_factor_size, eo.max_factor_size) <
                             std::make_pair(best->avg_factor_size, best->max_factor_size))
                best = eo;
        }
        CHECK(chosen.heuristic == best->heuristic);
        CHECK(chosen.order == best->order);
    }
    // All heuristics tie on a single variable: the first heuristic wins.
    CHECK(select_order(chain(1)).heuristic == Heuristic::min_neighbors);
    CHECK_THROWS_AS(select_order(chain(4, 3), 2), SizeLimitError);
}

TEST_CASE("mildew heuristics keep their relative ordering") {
    const auto net = load_network(fixtures::source_path("data/bnlearn/mildew.bif.gz"));
    const auto mn = elimination_order(net, Heuristic::min_neighbors);
    const auto mf = elimination_order(net, Heuristic::min_fill);
    CHECK(mf.avg_factor_size < mn.avg_factor_size);
    CHECK(mf.max_factor_size <= mn.max_factor_size);
}

TEST_CASE("survey tree under A,S,T,E,O,R") {
    const auto net = fixtures::survey();
    const EliminationTree tree = build_elimination_tree(net, {0, 1, 5, 2, 3, 4});
    REQUIRE(tree.size() == 12);
    CHECK(tree.real_node_count() == 12);
    const NodeId a = tree.elimination_node(0), s = tree.elimination_node(1), t = tree.elimination_node(5),
                 e = tree.elimination_node(2), o = tree.elimination_node(3), r = tree.elimination_node(4);
    CHECK(a == 6);
    CHECK(tree.node(a).children == std::vector<NodeId>{0, 2});
    CHECK(tree.node(s).children == std::vector<NodeId>{1, a});
    CHECK(tree.node(t).children == std::vector<NodeId>{5});
    CHECK(tree.node(e).children == std::vector<NodeId>{3, 4, s});
    CHECK(tree.node(o).children == std::vector<NodeId>{t, e});
    CHECK(tree.node(r).children == std::vector<NodeId>{o});
    CHECK(tree.root() == r);
    CHECK(tree.node(a).partial_cost == 24);  // join over {A,S,E}
    CHECK(tree.node(a).weight == 4);
    CHECK(tree.node(s).scope_after == std::vector<VarId>{2});
    CHECK(tree.node(s).vars == std::vector<VarId>{0, 1});
    CHECK(tree.node(r).vars == std::vector<VarId>{0, 1, 2, 3, 4, 5});
    CHECK(tree.height() == 5);
    CHECK(tree.max_children() == 3);
}

TEST_CASE("single-variable network") {
    const auto tree = build_elimination_tree(chain(1, 3), {0});
    REQUIRE(tree.size() == 2);
    const auto& root = tree.node(tree.root());
    CHECK(root.kind == NodeKind::internal);
    CHECK(root.partial_cost == 6);
    CHECK(root.total_cost == root.partial_cost);
    CHECK(root.weight == 1);
}

TEST_CASE("tree invariants and exact join sizes on random networks") {
    fixtures::Rng rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        const auto net = fixtures::random_network(rng, 1 + static_cast<int>(rng() % 12), 4);
        const auto order = fixtures::random_order(rng, net.size());
        const auto tree = build_elimination_tree(net, order);
        CHECK(tree.real_node_count() == 2 * net.size());
        const auto& cards = net.cardinalities();
        // Replay elimination on real factors and compare every join size.
        std::vector<Factor> results(tree.size());
        for (VarId v = 0; v < static_cast<VarId>(net.size()); ++v) results[static_cast<std::size_t>(v)] = net.cpt(v);
        for (NodeId u : tree.postorder()) {
            const auto& node = tree.node(u);
            if (node.kind == NodeKind::leaf) continue;
            std::vector<const Factor*> parts;
            std::uint64_t child_total = 0;
            std::set<VarId> vars;
            for (NodeId c : node.children) {
                parts.push_back(&results[static_cast<std::size_t>(c)]);
                child_total += tree.node(c).total_cost;
                vars.insert(tree.node(c).vars.begin(), tree.node(c).vars.end());
                if (node.kind != NodeKind::virtual_root) {
                    const auto& cv = tree.node(c).vars;
                    CHECK(std::includes(node.vars.begin(), node.vars.end(), cv.begin(), cv.end()));
                }
            }
            Factor joined = factor_join(std::span<const Factor* const>(parts));
            CHECK(node.total_cost == node.partial_cost + child_total);
            if (node.kind == NodeKind::internal) {
                vars.insert(node.var);
                CHECK(node.partial_cost == 2 * joined.size());
                CHECK(node.partial_cost == 2 * product(joined.scope(), cards));
                joined = factor_sum_out(joined, node.var);
                CHECK(node.weight == joined.size());
                CHECK(node.scope_after == joined.scope());
                CHECK(node.vars == std::vector<VarId>(vars.begin(), vars.end()));
                if (node.parent != kNoNode && tree.node(node.parent).kind == NodeKind::internal)
                    CHECK(tree.node(node.parent).total_cost > node.total_cost);
            } else {
                CHECK(node.kind == NodeKind::virtual_root);
                CHECK(node.partial_cost == 0);
                CHECK_FALSE(node.selectable());
            }
            results[static_cast<std::size_t>(u)] = std::move(joined);
        }
        CHECK(tree.node(tree.root()).vars.size() == net.size());
    }
}

TEST_CASE("forests get a non-selectable virtual root") {
    std::vector<Variable> vars{{0, "a", 2, {"x", "y"}}, {1, "b", 2, {"x", "y"}}};
    const BayesianNetwork loose(vars, {{}, {}}, {Factor({0}, {2}, {0.5, 0.5}), Factor({1}, {2}, {0.5, 0.5})});
    const auto tree = build_elimination_tree(loose, {0, 1});
    CHECK(tree.size() == 5);
    CHECK(tree.real_node_count() == 4);
    CHECK(tree.node(tree.root()).kind == NodeKind::virtual_root);
    CHECK(tree.height() == 1);
}

TEST_CASE("size guard names the variable") {
    const fixtures::ScopedEntryCap cap(4);
    try {
        (void)build_elimination_tree(fixtures::survey(), {0, 1, 5, 2, 3, 4});
        FAIL("expected a size-limit error");
    } catch (const SizeLimitError& e) {
        CHECK(std::string(e.what()).find("A") != std::string::npos);
    }
}

TEST_CASE("binarization") {
    const auto net = fixtures::survey();
    const auto tree = build_elimination_tree(net, {0, 1, 5, 2, 3, 4});
    const auto bin = binarize(tree);
    CHECK(bin.is_binary());
    CHECK(bin.size() == tree.size() + 1);  // E has three children
    const auto& dummy = bin.node(static_cast<NodeId>(tree.size()));
    CHECK(dummy.kind == NodeKind::dummy);
    CHECK(dummy.partial_cost == 0);
    CHECK(dummy.weight == 0);
    CHECK_FALSE(dummy.selectable());
    for (NodeId u = 0; u < static_cast<NodeId>(tree.size()); ++u) {
        CHECK(bin.node(u).total_cost == tree.node(u).total_cost);
        CHECK(bin.node(u).kind == tree.node(u).kind);
    }
    const auto chain_tree = build_elimination_tree(chain(4), {0, 1, 2, 3});
    CHECK(chain_tree.is_binary());
    CHECK(binarize(chain_tree).size() == chain_tree.size());

    fixtures::Rng rng(23);
    for (int trial = 0; trial < 50; ++trial) {
        const auto t = fixtures::random_annotated_tree(rng, 2 + static_cast<int>(rng() % 8));
        const auto b = binarize(t);
        CHECK(b.is_binary());
        const auto profile = fixtures::random_profile(rng, t);
        UsefulnessProfile padded = profile;
        padded.base.resize(b.size(), 0.0);
        std::vector<NodeId> internal;
        for (NodeId u = 0; u < static_cast<NodeId>(t.size()); ++u)
            if (t.node(u).selectable()) internal.push_back(u);
        for (std::uint32_t mask = 0; mask < (1u << std::min<std::size_t>(internal.size(), 10)); ++mask) {
            std::vector<NodeId> r;
            for (std::size_t i = 0; i < std::min<std::size_t>(internal.size(), 10); ++i)
                if (mask >> i & 1u) r.push_back(internal[i]);
            CHECK(benefit(r, t, profile) == benefit(r, b, padded));
        }
    }
}

TEST_CASE("tree dump format") {
    const auto tree = build_elimination_tree(fixtures::survey(), {0, 1, 5, 2, 3, 4});
    const auto dump = dump_tree(tree);
    CHECK(dump.find("node 0 leaf 0 parent=6 c=0 U=0 w=") == 0);
    CHECK(dump.find("node 11 internal 4 parent=- c=") != std::string::npos);
}
