#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "bnmat/elimination.hpp"
#include "bnmat/workload.hpp"

namespace bnmat {

enum class BudgetKind : std::uint8_t { count, space };

struct Budget {
    BudgetKind kind = BudgetKind::count;
    std::uint64_t amount = 0;  // node count k, or total entries K

    static Budget nodes(std::uint64_t k) { return {BudgetKind::count, k}; }
    static Budget space(std::uint64_t K) { return {BudgetKind::space, K}; }
};

struct PlannedNode {
    NodeId id = kNoNode;
    std::uint64_t total_cost = 0;
    std::uint64_t weight = 0;
    double usefulness = 0.0;  // base usefulness of the node
};

struct MaterializationPlan {
    std::vector<NodeId> selected;  // ascending
    Budget budget;
    double benefit = 0.0;
    std::vector<PlannedNode> per_node;
    std::uint64_t tree_fingerprint = 0;
};

// Expected saving of materializing R: sum over u in R of
// usefulness_pair(u, lowest selected proper ancestor) * U(u).
double benefit(const std::vector<NodeId>& selected, const EliminationTree& tree, const UsefulnessProfile& profile);

// Lowest proper ancestor of u in R (kNoNode if none); R given as a membership mask.
NodeId lowest_selected_ancestor(NodeId u, const std::vector<char>& in_set, const EliminationTree& tree);
// Members of R below u with no other member of R between them and u.
std::vector<NodeId> highest_selected_descendants(NodeId u, const std::vector<char>& in_set, const EliminationTree& tree);
// Closed-form marginal benefit of adding u to R.
double marginal_benefit(NodeId u, const std::vector<char>& in_set, const EliminationTree& tree,
                        const UsefulnessProfile& profile);

// Exact tree DP; non-binary trees are binarized internally. Ties keep the smaller left share.
MaterializationPlan plan_dp(const EliminationTree& tree, std::int64_t k, const UsefulnessProfile& profile);
MaterializationPlan plan_dp_space(const EliminationTree& tree, std::int64_t space, const UsefulnessProfile& profile);
// Optimal benefit for every budget 0..k (count budget).
std::vector<double> benefit_curve(const EliminationTree& tree, std::int64_t k, const UsefulnessProfile& profile);

MaterializationPlan plan_greedy(const EliminationTree& tree, std::int64_t k, const UsefulnessProfile& profile);
MaterializationPlan plan_greedy_space(const EliminationTree& tree, std::int64_t space, const UsefulnessProfile& profile);

inline constexpr std::size_t kExhaustiveLimit = 20;
MaterializationPlan plan_exhaustive(const EliminationTree& tree, Budget budget, const UsefulnessProfile& profile);

// Cells allowed in the space DP tables before it refuses to run.
inline constexpr std::uint64_t kSpaceDpCellLimit = std::uint64_t{1} << 28;

// Fills benefit, per-node data and fingerprint for a selection.
MaterializationPlan make_plan(std::vector<NodeId> selected, Budget budget, const EliminationTree& tree,
                              const UsefulnessProfile& profile);

std::string format_plan(const MaterializationPlan& plan);
MaterializationPlan parse_plan(std::string_view text);

}  // namespace bnmat
