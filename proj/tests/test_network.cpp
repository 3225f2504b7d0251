#include <doctest.h>

#include <algorithm>

#include "bnmat/error.hpp"
#include "bnmat/network.hpp"
#include "fixtures.hpp"

using namespace bnmat;

namespace {

// Second enumeration: walks every full assignment and multiplies CPT entries directly.
Factor enumerate_joint(const BayesianNetwork& net, const Query& q) {
    const auto n = net.size();
    std::vector<int> state(n, 0);
    std::vector<int> free_cards;
    for (VarId v : q.free) free_cards.push_back(net.cardinality(v));
    std::size_t size = 1;
    for (int c : free_cards) size *= static_cast<std::size_t>(c);
    std::vector<double> out(size, 0.0);
    while (true) {
        bool consistent = true;
        for (const auto& [v, s] : q.bound) consistent = consistent && state[static_cast<std::size_t>(v)] == s;
        if (consistent) {
            double p = 1.0;
            for (VarId v = 0; v < static_cast<VarId>(n); ++v) {
                std::vector<int> idx;
                for (VarId s : net.cpt(v).scope()) idx.push_back(state[static_cast<std::size_t>(s)]);
                p *= net.cpt(v).at(idx);
            }
            std::size_t index = 0;
            for (std::size_t i = 0; i < q.free.size(); ++i)
                index = index * static_cast<std::size_t>(free_cards[i]) + static_cast<std::size_t>(state[static_cast<std::size_t>(q.free[i])]);
            out[index] += p;
        }
        std::size_t i = 0;
        while (i < n && ++state[i] == net.cardinality(static_cast<VarId>(i))) state[i++] = 0;
        if (i == n) break;
    }
    return Factor(q.free, free_cards, out);
}

}  // namespace

TEST_CASE("survey fixture is valid with the expected structure") {
    const auto net = fixtures::survey();
    CHECK(validate_network(net).empty());
    CHECK(net.edge_count() == 6);
    CHECK(net.parents(2) == std::vector<VarId>{0, 1});
    CHECK(net.parents(5) == std::vector<VarId>{3, 4});
    CHECK(net.find("T") == VarId{5});
    CHECK_FALSE(net.find("Z").has_value());
}

TEST_CASE("normalization violations name the variable and parent assignment") {
    const auto base = fixtures::survey();
    std::vector<Factor> cpts = base.cpts();
    auto values = std::vector<double>(cpts[3].values().begin(), cpts[3].values().end());
    values[2] = 0.82;  // row E=uni sums to 0.9
    cpts[3] = Factor(cpts[3].scope(), cpts[3].cardinalities(), values);
    std::vector<std::vector<VarId>> parents;
    for (VarId v = 0; v < 6; ++v) parents.push_back(base.parents(v));
    const BayesianNetwork bad(base.variables(), parents, cpts);
    const auto violations = validate_network(bad);
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].kind == Violation::Kind::normalization);
    CHECK(violations[0].variable == 3);
    CHECK(violations[0].message.find("E=uni") != std::string::npos);
    CHECK_THROWS_AS(require_valid(bad), ValidationError);
}

TEST_CASE("self-loop and cycles are acyclicity violations") {
    std::vector<Variable> vars{{0, "a", 2, {"x", "y"}}, {1, "b", 2, {"x", "y"}}};
    const std::vector<int> cards{2, 2};
    {
        CHECK_THROWS(cpt_scope(0, {0}, cards));
        const BayesianNetwork net(vars, {{0}, {}}, {Factor({0}, {2}, {0.5, 0.5}), Factor({1}, {2}, {0.5, 0.5})});
        const auto v = validate_network(net);
        CHECK(std::any_of(v.begin(), v.end(), [](const Violation& x) { return x.kind == Violation::Kind::cycle; }));
    }
    {
        const BayesianNetwork net(vars, {{1}, {0}},
                                  {Factor({0, 1}, {2, 2}, {0.5, 0.5, 0.5, 0.5}), Factor({0, 1}, {2, 2}, {0.5, 0.5, 0.5, 0.5})});
        const auto v = validate_network(net);
        CHECK(std::any_of(v.begin(), v.end(), [](const Violation& x) { return x.kind == Violation::Kind::cycle; }));
        CHECK(topological_order(net).empty());
    }
}

TEST_CASE("empty networks are rejected") {
    CHECK_THROWS(BayesianNetwork({}, {}, {}));
}

TEST_CASE("query validation") {
    const auto net = fixtures::survey();
    CHECK_THROWS_AS(validate_query(net, Query{{0}, {{0, 1}}}), ContractError);
    CHECK_THROWS_AS(validate_query(net, Query{{9}, {}}), ContractError);
    CHECK_THROWS_AS(validate_query(net, Query{{}, {{0, 3}}}), ContractError);
    CHECK_NOTHROW(validate_query(net, Query{{5}, {{0, 0}}}));
}

TEST_CASE("full joint sums to one and brute force agrees with a second enumeration") {
    const auto net = fixtures::survey();
    const Query all{{0, 1, 2, 3, 4, 5}, {}};
    CHECK(joint_brute_force(net, all).total_mass() == doctest::Approx(1.0).epsilon(1e-9));
    const Query t_young{{5}, {{0, 0}}};
    const Factor bf = joint_brute_force(net, t_young);
    CHECK(bf.scope() == std::vector<VarId>{5});
    CHECK(max_abs_diff(bf, enumerate_joint(net, t_young)) <= 1e-12);
    CHECK(bf.total_mass() == doctest::Approx(0.3).epsilon(1e-12));

    fixtures::Rng rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        const auto rnet = fixtures::random_network(rng, 1 + static_cast<int>(rng() % 7), 3);
        const Query q = fixtures::random_query(rng, rnet);
        CHECK(max_abs_diff(joint_brute_force(rnet, q), enumerate_joint(rnet, q)) <= 1e-12);
    }
}

TEST_CASE("brute force respects its cap") {
    const auto net = fixtures::survey();
    CHECK_THROWS_AS(joint_brute_force(net, Query{{5}, {}}, 10), SizeLimitError);
}

TEST_CASE("induced subnetwork keeps CPTs and requires closed parent sets") {
    const auto net = fixtures::survey();
    const Subnetwork sub = induced_subnetwork(net, {0, 1, 2, 3});
    CHECK(sub.original_ids == std::vector<VarId>{0, 1, 2, 3});
    CHECK(sub.net.size() == 4);
    CHECK(std::vector<double>(sub.net.cpt(3).values().begin(), sub.net.cpt(3).values().end()) ==
          std::vector<double>(net.cpt(3).values().begin(), net.cpt(3).values().end()));
    CHECK_THROWS(induced_subnetwork(net, {3}));
}

TEST_CASE("isolated variables are removed with monotone renumbering") {
    std::vector<Variable> vars{{0, "a", 2, {"x", "y"}}, {1, "lone", 2, {"x", "y"}}, {2, "b", 2, {"x", "y"}}};
    const BayesianNetwork net(vars, {{}, {}, {0}},
                              {Factor({0}, {2}, {0.5, 0.5}), Factor({1}, {2}, {0.5, 0.5}),
                               Factor({0, 2}, {2, 2}, {0.1, 0.9, 0.4, 0.6})});
    const Subnetwork s = without_isolated(net);
    CHECK(s.original_ids == std::vector<VarId>{0, 2});
    CHECK(s.net.variable(1).name == "b");
    CHECK(s.net.parents(1) == std::vector<VarId>{0});
}
