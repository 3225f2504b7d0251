#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "bnmat/factor.hpp"
#include "bnmat/network.hpp"

namespace bnmat {

struct JunctionEdge {
    int a = 0;
    int b = 0;
    std::vector<VarId> separator;
};

struct JunctionTree {
    std::vector<std::vector<VarId>> cliques;  // ascending variable ids
    std::vector<JunctionEdge> edges;
    std::vector<int> cpt_home;                // clique holding each variable's CPT
    std::vector<Factor> potentials;           // per clique
    std::vector<Factor> separator_potentials; // per edge, filled by calibrate
    std::vector<int> cardinalities;
    bool calibrated = false;

    std::vector<std::vector<std::pair<int, int>>> adjacency() const;  // (neighbor, edge index)
};

struct JunctionStats {
    std::size_t cliques = 0;
    std::size_t max_clique_vars = 0;
    std::uint64_t max_clique_entries = 0;
    std::uint64_t total_entries = 0;  // clique plus separator potentials
};

// Triangulates the moral graph along `order`, keeps the maximal cliques and joins them by a
// maximum spanning tree on separator size. Potentials hold the products of assigned CPTs.
JunctionTree build_junction_tree(const BayesianNetwork& net, const std::vector<VarId>& order);

// Two-pass sum-product calibration; afterwards each potential is its clique's joint marginal.
JunctionTree calibrate(JunctionTree jt);

struct JtAnswer {
    Factor table;
    std::uint64_t cost_estimated = 0;  // twice the join sizes, as in the VE engine
    int cliques_used = 0;
};

// Joint answer over the free variables with bound variables fixed. Needs a calibrated tree.
JtAnswer jt_query(const JunctionTree& jt, const Query& q);

JunctionStats junction_stats(const JunctionTree& jt);

// Variables of some clique that are not covered in a connected way; empty when the
// running intersection property holds.
std::vector<VarId> running_intersection_violations(const JunctionTree& jt);

}  // namespace bnmat
