#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "bnmat/elimination.hpp"
#include "bnmat/factor.hpp"
#include "bnmat/network.hpp"
#include "bnmat/workload.hpp"

namespace fixtures {

using Rng = std::mt19937_64;

// Survey network: A,S -> E -> O,R -> T, ids in that declaration order (A=0 S=1 E=2 O=3 R=4 T=5).
bnmat::BayesianNetwork survey();

// Random DAG over n variables (each variable draws up to max_parents earlier parents) with
// random normalized CPTs.
bnmat::BayesianNetwork random_network(Rng& rng, int n, int max_card = 4, int max_parents = 3);

// Random query: each variable independently free, bound or summed out.
bnmat::Query random_query(Rng& rng, const bnmat::BayesianNetwork& net);

std::vector<bnmat::VarId> random_order(Rng& rng, std::size_t n);

// Elimination tree of a random network with integer partial costs and weights, so that
// benefits built from dyadic profiles are exact in floating point.
bnmat::EliminationTree random_annotated_tree(Rng& rng, int variables);

// Monotone profile with values in multiples of 1/64; dummies and the virtual root get 0.
bnmat::UsefulnessProfile random_profile(Rng& rng, const bnmat::EliminationTree& tree);

// Every query with Y_q empty whose free-set size lies in `sizes`.
std::vector<bnmat::Query> all_free_queries(std::size_t n, const std::vector<int>& sizes);

// Relative frequency over `queries` of "vars(u) inside Z_q and no node of R on the path
// strictly above u qualifies": Definition-style usefulness counted directly.
double counted_usefulness(bnmat::NodeId u, const std::vector<bnmat::NodeId>& selected,
                          const bnmat::EliminationTree& tree, const std::vector<bnmat::Query>& queries);

std::string source_path(const std::string& relative);

// Lowers the process-wide entry cap for one scope.
class ScopedEntryCap {
public:
    explicit ScopedEntryCap(std::uint64_t cap) : saved_(bnmat::entry_cap()) { bnmat::set_entry_cap(cap); }
    ~ScopedEntryCap() { bnmat::set_entry_cap(saved_); }
    ScopedEntryCap(const ScopedEntryCap&) = delete;
    ScopedEntryCap& operator=(const ScopedEntryCap&) = delete;

private:
    std::uint64_t saved_;
};

}  // namespace fixtures
