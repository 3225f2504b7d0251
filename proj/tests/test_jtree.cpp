#include <doctest.h>

#include <set>

#include "bnmat/engine.hpp"
#include "bnmat/jtree.hpp"
#include "fixtures.hpp"

using namespace bnmat;

namespace {

BayesianNetwork chain3() {
    std::vector<Variable> vars;
    for (int i = 0; i < 3; ++i) vars.push_back({i, std::string(1, static_cast<char>('A' + i)), 2, {"a", "b"}});
    return BayesianNetwork(vars, {{}, {0}, {1}},
                           {Factor({0}, {2}, {0.4, 0.6}), Factor({0, 1}, {2, 2}, {0.3, 0.7, 0.9, 0.1}),
                            Factor({1, 2}, {2, 2}, {0.2, 0.8, 0.5, 0.5})});
}

// Independent triangulation: cliques of the fill-in graph from explicit edge sets.
std::set<std::vector<VarId>> reference_cliques(const BayesianNetwork& net, const std::vector<VarId>& order) {
    std::set<std::pair<VarId, VarId>> edges;
    auto add = [&](VarId a, VarId b) { edges.insert({std::min(a, b), std::max(a, b)}); };
    for (VarId v = 0; v < static_cast<VarId>(net.size()); ++v) {
        const auto& ps = net.parents(v);
        for (VarId p : ps) add(p, v);
        for (std::size_t i = 0; i < ps.size(); ++i)
            for (std::size_t j = i + 1; j < ps.size(); ++j) add(ps[i], ps[j]);
    }
    std::vector<char> gone(net.size(), 0);
    std::vector<std::vector<VarId>> all;
    for (VarId x : order) {
        std::vector<VarId> c{x};
        for (auto [a, b] : edges) {
            if (a == x && !gone[static_cast<std::size_t>(b)]) c.push_back(b);
            if (b == x && !gone[static_cast<std::size_t>(a)]) c.push_back(a);
        }
        for (std::size_t i = 1; i < c.size(); ++i)
            for (std::size_t j = i + 1; j < c.size(); ++j) add(c[i], c[j]);
        gone[static_cast<std::size_t>(x)] = 1;
        std::sort(c.begin(), c.end());
        all.push_back(c);
    }
    std::set<std::vector<VarId>> maximal;
    for (const auto& c : all) {
        bool dominated = false;
        for (const auto& d : all)
            if (d.size() > c.size() && std::includes(d.begin(), d.end(), c.begin(), c.end())) dominated = true;
        if (!dominated) maximal.insert(c);
    }
    return maximal;
}

}  // namespace

TEST_CASE("chain junction tree") {
    const auto net = chain3();
    const auto jt = build_junction_tree(net, {0, 1, 2});
    REQUIRE(jt.cliques.size() == 2);
    CHECK(jt.cliques[0] == std::vector<VarId>{0, 1});
    CHECK(jt.cliques[1] == std::vector<VarId>{1, 2});
    REQUIRE(jt.edges.size() == 1);
    CHECK(jt.edges[0].separator == std::vector<VarId>{1});

    const auto cal = calibrate(jt);
    const Query span{{0, 2}, {}};
    const auto a = jt_query(cal, span);
    CHECK(max_abs_diff(a.table, joint_brute_force(net, span)) <= 1e-12);
    CHECK(a.cliques_used == 2);
    const auto one = jt_query(cal, Query{{1}, {}});
    CHECK(one.cliques_used == 1);
    CHECK(max_abs_diff(one.table, joint_brute_force(net, Query{{1}, {}})) <= 1e-12);
    const auto all = jt_query(cal, Query{{0, 1, 2}, {}});
    CHECK(max_abs_diff(all.table, joint_brute_force(net, Query{{0, 1, 2}, {}})) <= 1e-12);
    CHECK_THROWS(jt_query(jt, Query{{0}, {}}));
}

TEST_CASE("survey cliques match an independent triangulation") {
    const auto net = fixtures::survey();
    const auto order = elimination_order(net, Heuristic::min_fill).order;
    const auto jt = build_junction_tree(net, order);
    CHECK(std::set<std::vector<VarId>>(jt.cliques.begin(), jt.cliques.end()) == reference_cliques(net, order));
    CHECK(jt.cliques.size() == 3);
    const auto stats = junction_stats(jt);
    CHECK(stats.cliques == 3);
    CHECK(stats.max_clique_vars == 3);
}

TEST_CASE("single clique calibrates to the full joint") {
    std::vector<Variable> vars{{0, "a", 2, {"x", "y"}}, {1, "b", 3, {"x", "y", "z"}}};
    const BayesianNetwork net(vars, {{}, {0}},
                              {Factor({0}, {2}, {0.25, 0.75}), Factor({0, 1}, {2, 3}, {0.2, 0.3, 0.5, 0.1, 0.1, 0.8})});
    const auto cal = calibrate(build_junction_tree(net, {0, 1}));
    REQUIRE(cal.cliques.size() == 1);
    CHECK(max_abs_diff(cal.potentials[0], joint_brute_force(net, Query{{0, 1}, {}})) <= 1e-12);
}

TEST_CASE("random networks: running intersection, calibration and answers") {
    fixtures::Rng rng(91);
    for (int trial = 0; trial < 80; ++trial) {
        const auto net = fixtures::random_network(rng, 1 + static_cast<int>(rng() % 9), 3);
        const auto order = fixtures::random_order(rng, net.size());
        const auto jt = build_junction_tree(net, order);
        CHECK(running_intersection_violations(jt).empty());
        CHECK(jt.edges.size() + 1 == jt.cliques.size());
        CHECK(std::set<std::vector<VarId>>(jt.cliques.begin(), jt.cliques.end()) == reference_cliques(net, order));
        for (VarId v = 0; v < static_cast<VarId>(net.size()); ++v) {
            const auto& c = jt.cliques[static_cast<std::size_t>(jt.cpt_home[static_cast<std::size_t>(v)])];
            const auto& s = net.cpt(v).scope();
            CHECK(std::includes(c.begin(), c.end(), s.begin(), s.end()));
        }
        const auto cal = calibrate(jt);
        for (std::size_t c = 0; c < cal.cliques.size(); ++c)
            CHECK(max_abs_diff(cal.potentials[c], joint_brute_force(net, Query{cal.cliques[c], {}})) <= 1e-9);
        const auto tree = build_elimination_tree(net, order);
        for (int k = 0; k < 20; ++k) {
            const Query q = fixtures::random_query(rng, net);
            CHECK(max_abs_diff(jt_query(cal, q).table, answer_query(q, net, tree).table) <= 1e-9);
        }
    }
}
