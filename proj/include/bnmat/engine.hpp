#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "bnmat/elimination.hpp"
#include "bnmat/network.hpp"
#include "bnmat/planner.hpp"

namespace bnmat {

// Summed-out tables for the nodes of a plan, keyed by node id.
struct MaterializationStore {
    MaterializationPlan plan;
    std::map<NodeId, Factor> tables;

    std::uint64_t entry_count() const;
};

MaterializationStore materialize(const MaterializationPlan& plan, const BayesianNetwork& net, const EliminationTree& tree);

std::string format_store(const MaterializationStore& store);
MaterializationStore parse_store(std::string_view text);

struct QueryAnswer {
    Factor table;                     // over the free variables
    std::uint64_t cost_estimated = 0;  // twice the join sizes of the nodes actually computed
    std::vector<NodeId> nodes_skipped;  // replaced by stored tables
    double wall_seconds = 0.0;
};

// Selected nodes whose subtree variables are all summed out by q, keeping only the highest ones.
std::vector<NodeId> useful_set(const Query& q, const std::vector<NodeId>& selected, const EliminationTree& tree);

// Variable elimination along the tree; stored tables replace the subtrees they cover.
QueryAnswer answer_query(const Query& q, const BayesianNetwork& net, const EliminationTree& tree,
                         const MaterializationStore* store = nullptr);

// Cost answer_query would report, computed without touching any table.
std::uint64_t query_cost(const Query& q, const EliminationTree& tree, const std::vector<NodeId>& selected = {});

// Pr(free | bound): the joint answer divided by its mass.
Factor conditional_answer(const QueryAnswer& joint);
// Sum of joint answers over several bound assignments sharing the same free set.
Factor range_answer(const std::vector<VarId>& free, const std::vector<std::map<VarId, int>>& assignments,
                    const BayesianNetwork& net, const EliminationTree& tree, const MaterializationStore* store = nullptr);

// `answer scope=<vars> mass=<float>` followed by a factor line.
std::string format_answer(const QueryAnswer& answer);

}  // namespace bnmat
