#include <doctest.h>

#include "bnmat/engine.hpp"
#include "bnmat/error.hpp"
#include "bnmat/planner.hpp"
#include "bnmat/workload.hpp"
#include "fixtures.hpp"

using namespace bnmat;

namespace {

const std::vector<VarId> kSigma{0, 1, 5, 2, 3, 4};

MaterializationPlan plan_of(std::vector<NodeId> r, const EliminationTree& tree) {
    UsefulnessProfile zero;
    zero.base.assign(tree.size(), 0.0);
    return make_plan(std::move(r), Budget::nodes(tree.size()), tree, zero);
}

}  // namespace

TEST_CASE("useful set follows the three conditions") {
    const auto net = fixtures::survey();
    const auto tree = build_elimination_tree(net, kSigma);
    const NodeId s = tree.elimination_node(1), a = tree.elimination_node(0);
    CHECK(useful_set(Query{{5}, {}}, {}, tree).empty());
    CHECK(useful_set(Query{{5}, {}}, {a, s}, tree) == std::vector<NodeId>{s});
    CHECK(useful_set(Query{{5}, {{0, 0}}}, {s}, tree).empty());
    CHECK(useful_set(Query{{1}, {}}, {a, s}, tree) == std::vector<NodeId>{a});
}

TEST_CASE("Pr(T, A=young) on survey") {
    const auto net = fixtures::survey();
    const auto tree = build_elimination_tree(net, kSigma);
    const Query q{{5}, {{0, 0}}};
    const auto a = answer_query(q, net, tree);
    CHECK(a.table.scope() == std::vector<VarId>{5});
    CHECK(max_abs_diff(a.table, joint_brute_force(net, q)) <= 1e-12);
    CHECK(a.table.total_mass() == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(a.cost_estimated == query_cost(q, tree));

    const Factor cond = conditional_answer(a);
    CHECK(cond.total_mass() == doctest::Approx(1.0).epsilon(1e-12));
    const Factor range = range_answer({5}, {{{0, 0}}, {{0, 1}}, {{0, 2}}}, net, tree);
    CHECK(max_abs_diff(range, joint_brute_force(net, Query{{5}, {}})) <= 1e-12);

    const auto all = answer_query(Query{{0, 1, 2, 3, 4, 5}, {}}, net, tree);
    CHECK(all.table.total_mass() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("stored tables match recomputation and the marginal oracle") {
    const auto net = fixtures::survey();
    const auto tree = build_elimination_tree(net, kSigma);
    const NodeId s = tree.elimination_node(1), e = tree.elimination_node(2);
    const auto store = materialize(plan_of({s, e}, tree), net, tree);
    CHECK(store.tables.at(s).scope() == std::vector<VarId>{2});
    CHECK(max_abs_diff(store.tables.at(s), joint_brute_force(net, Query{{2}, {}})) <= 1e-12);
    CHECK(max_abs_diff(store.tables.at(e), joint_brute_force(net, Query{{3, 4}, {}})) <= 1e-12);
    CHECK(store.entry_count() == tree.node(s).weight + tree.node(e).weight);
    const auto back = parse_store(format_store(store));
    CHECK(back.plan.selected == store.plan.selected);
    CHECK(back.tables.at(s) == store.tables.at(s));
    CHECK(materialize(plan_of({}, tree), net, tree).tables.empty());

    const auto other = build_elimination_tree(net, {5, 4, 3, 2, 1, 0});
    CHECK_THROWS_AS(materialize(plan_of({s}, tree), net, other), ValidationError);
}

TEST_CASE("answers on random networks: brute force, materialization, cost accounting") {
    fixtures::Rng rng(101);
    for (int trial = 0; trial < 60; ++trial) {
        const auto net = fixtures::random_network(rng, 1 + static_cast<int>(rng() % 9), 4);
        const auto tree = build_elimination_tree(net, fixtures::random_order(rng, net.size()));
        std::vector<NodeId> r;
        for (NodeId u = 0; u < static_cast<NodeId>(tree.size()); ++u)
            if (tree.node(u).selectable() && rng() % 3 == 0) r.push_back(u);
        const auto store = materialize(plan_of(r, tree), net, tree);
        for (int k = 0; k < 20; ++k) {
            const Query q = fixtures::random_query(rng, net);
            const auto plain = answer_query(q, net, tree);
            const auto fast = answer_query(q, net, tree, &store);
            CHECK(max_abs_diff(plain.table, joint_brute_force(net, q)) <= 1e-9);
            CHECK(max_abs_diff(plain.table, fast.table) <= 1e-12);
            CHECK(plain.cost_estimated == query_cost(q, tree));
            CHECK(fast.cost_estimated == query_cost(q, tree, r));
            CHECK(fast.cost_estimated <= plain.cost_estimated);
            CHECK(fast.nodes_skipped == useful_set(q, r, tree));
        }
    }
}

TEST_CASE("a useful node saves exactly its total cost") {
    const auto net = fixtures::survey();
    const auto tree = build_elimination_tree(net, kSigma);
    const NodeId e = tree.elimination_node(2);
    const Query q{{4}, {}};  // vars(E-node) = {A,S,E} all summed out
    CHECK(query_cost(q, tree) - query_cost(q, tree, {e}) == tree.node(e).total_cost);
}

TEST_CASE("average realized saving over an enumerated workload equals the benefit") {
    fixtures::Rng rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 6);
        const auto net = fixtures::random_network(rng, n, 3);
        const auto tree = build_elimination_tree(net, fixtures::random_order(rng, net.size()));
        std::vector<int> sizes;
        for (int r = 1; r <= n; ++r) sizes.push_back(r);
        const auto queries = fixtures::all_free_queries(static_cast<std::size_t>(n), sizes);
        const auto prof = base_usefulness_sampled(tree, queries);
        std::vector<NodeId> r;
        for (NodeId u = 0; u < static_cast<NodeId>(tree.size()); ++u)
            if (tree.node(u).selectable() && rng() % 2) r.push_back(u);
        double saved = 0;
        for (const Query& q : queries)
            saved += static_cast<double>(query_cost(q, tree) - query_cost(q, tree, r));
        CHECK(saved / static_cast<double>(queries.size()) == doctest::Approx(benefit(r, tree, prof)).epsilon(1e-12));
    }
}

TEST_CASE("queries reject binarized trees and report oversized steps") {
    const auto net = fixtures::survey();
    const auto tree = build_elimination_tree(net, kSigma);
    CHECK_THROWS_AS(answer_query(Query{{5}, {}}, net, binarize(tree)), ContractError);
    const fixtures::ScopedEntryCap cap(20);
    try {
        (void)answer_query(Query{{0, 1, 2, 3, 4, 5}, {}}, net, tree);
        FAIL("expected a size-limit error");
    } catch (const SizeLimitError& e) {
        CHECK(std::string(e.what()).find("node") != std::string::npos);
    }
}

TEST_CASE("answer dump") {
    const auto net = fixtures::survey();
    const auto tree = build_elimination_tree(net, kSigma);
    const auto text = format_answer(answer_query(Query{{5}, {{0, 0}}}, net, tree));
    CHECK(text.find("answer scope={5} mass=0.3") == 0);
}
