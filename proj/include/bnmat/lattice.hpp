#pragma once

#include <string>
#include <vector>

#include "bnmat/elimination.hpp"
#include "bnmat/engine.hpp"
#include "bnmat/network.hpp"
#include "bnmat/workload.hpp"

namespace bnmat {

// True iff every path between a and b in the moral graph passes through `separator`.
bool m_separated(const BayesianNetwork& net, VarId a, VarId b, const std::vector<VarId>& separator);

// Smallest subnetwork answering q exactly. Variables that are not ancestors of the query
// variables are dropped, as are ancestors separated from the query variables by `given`
// (conditioning evidence). A kept conditioning variable that loses parents gets a uniform
// CPT, which only rescales the conditional answer by a constant.
Subnetwork shrink(const BayesianNetwork& net, const Query& q, const std::vector<VarId>& given = {});

struct LatticeMember {
    Subnetwork sub;
    EliminationTree tree;
    double pi = 0.0;
    UsefulnessProfile profile;  // from the queries mapped to this member, in member ids
    std::vector<Query> queries;
    std::vector<int> parents;   // covering members (immediate supersets)
    std::vector<int> children;  // maximal proper submembers
};

struct Lattice {
    std::vector<LatticeMember> members;  // member 0 is the full network
};

// Node and labeled-edge containment of `inner` in `outer`, compared by original ids.
bool contains(const Subnetwork& outer, const Subnetwork& inner, const BayesianNetwork& full);

// Member holding the fewest variables among those containing shrink(q); ties go to the lower id.
int map_query(const Lattice& lattice, const BayesianNetwork& full, const Query& q);
// Re-expresses a full-network query in a member's ids.
Query translate_query(const LatticeMember& member, const Query& q);

// Phase 1 counts shrink results of `sample`, phase 2 greedily adds up to `extra_members`
// subnetworks that lower the expected parameter count of the mapped member, phase 3
// estimates shares and per-member workloads from `fresh` (or `sample` when empty).
Lattice build_lattice(const BayesianNetwork& net, const std::vector<Query>& sample, int extra_members,
                      const std::vector<Query>& fresh = {});

// Expected CPT entry count of the mapped member over a query sample.
double expected_mapped_parameters(const Lattice& lattice, const BayesianNetwork& full, const std::vector<Query>& sample);

// Maximizes sum_i pi_i * curves_i[k_i] subject to sum_i k_i <= k; curves_i[j] is the
// optimal benefit of member i with budget j (index clamped to the curve length).
std::vector<int> allocate_budget(const std::vector<double>& pi, const std::vector<std::vector<double>>& curves, int k);
std::vector<int> allocate_budget(const Lattice& lattice, int k);

// Answers q on its mapped member (with that member's store when given), in full-network ids.
QueryAnswer lattice_answer(const Lattice& lattice, const BayesianNetwork& full, const Query& q,
                           const std::vector<MaterializationStore>* stores = nullptr);

// `member <id> vars=<ids> pi=<float> parent=<ids>` per member.
std::string format_manifest(const Lattice& lattice);

}  // namespace bnmat
