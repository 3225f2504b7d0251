#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bnmat/network.hpp"

namespace bnmat {

// Undirected graph on variable ids: parent-child edges plus married co-parents.
struct MoralGraph {
    std::vector<std::vector<VarId>> adjacency;  // sorted neighbor lists

    std::size_t size() const noexcept { return adjacency.size(); }
    std::size_t edge_count() const noexcept;
    bool adjacent(VarId a, VarId b) const;
};

MoralGraph moral_graph(const BayesianNetwork& net);

// Declaration order doubles as the tie-break order in select_order.
enum class Heuristic : std::uint8_t {
    min_neighbors,      // mn: neighbor count
    min_weight,         // mw: product of neighbor cardinalities
    min_fill,           // mf: number of fill edges
    weighted_min_fill,  // wmf: sum of fill-edge weights (product of endpoint cardinalities)
};
inline constexpr Heuristic kAllHeuristics[] = {Heuristic::min_neighbors, Heuristic::min_weight, Heuristic::min_fill,
                                               Heuristic::weighted_min_fill};

std::string to_string(Heuristic h);
Heuristic parse_heuristic(const std::string& name);

struct EliminationOrder {
    std::vector<VarId> order;
    Heuristic heuristic = Heuristic::min_fill;
    // Entry counts of the summed-out factors created while eliminating (one per variable).
    double avg_factor_size = 0.0;
    double max_factor_size = 0.0;
};

EliminationOrder elimination_order(const BayesianNetwork& net, Heuristic heuristic);
// Statistics for a caller-supplied permutation.
EliminationOrder order_from(const BayesianNetwork& net, std::vector<VarId> order,
                            Heuristic label = Heuristic::min_fill);
// Smallest average factor size, then smallest maximum, then heuristic declaration order.
// Heuristics whose maximum exceeds `cap` are discarded.
EliminationOrder select_order(const BayesianNetwork& net, std::uint64_t cap = entry_cap());

enum class NodeKind : std::uint8_t { leaf, internal, dummy, virtual_root };
std::string to_string(NodeKind k);

using NodeId = std::int32_t;
inline constexpr NodeId kNoNode = -1;

struct TreeNode {
    NodeKind kind = NodeKind::leaf;
    VarId var = -1;  // CPT owner for leaves, eliminated variable for internal nodes
    NodeId parent = kNoNode;
    std::vector<NodeId> children;
    std::vector<VarId> scope_after;  // output scope when every subtree variable is summed out
    std::uint64_t partial_cost = 0;  // c(u): twice the entry count of the join at u
    std::uint64_t total_cost = 0;    // U(u)
    std::uint64_t weight = 0;        // w(u): entries of the summed-out table
    std::vector<VarId> vars;         // variables eliminated inside the subtree, ascending

    bool selectable() const noexcept { return kind == NodeKind::internal; }
};

// Query-independent record of a variable-elimination run. Leaves are CPTs with ids
// 0..n-1 (leaf v owns the CPT of variable v); internal nodes follow in elimination order.
class EliminationTree {
public:
    EliminationTree() = default;
    EliminationTree(std::vector<TreeNode> nodes, NodeId root, std::vector<VarId> order, std::vector<int> cards);

    const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
    const TreeNode& node(NodeId id) const { return nodes_.at(static_cast<std::size_t>(id)); }
    std::size_t size() const noexcept { return nodes_.size(); }
    NodeId root() const noexcept { return root_; }
    std::size_t variable_count() const noexcept { return cards_.size(); }
    const std::vector<int>& cardinalities() const noexcept { return cards_; }
    const std::vector<VarId>& order() const noexcept { return order_; }

    NodeId elimination_node(VarId v) const { return elim_node_.at(static_cast<std::size_t>(v)); }
    int depth(NodeId id) const { return depth_.at(static_cast<std::size_t>(id)); }
    // Longest root-to-leaf path in edges, ignoring a virtual root.
    int height() const noexcept;
    std::size_t max_children() const noexcept;
    // Leaves plus internal nodes (dummies and a virtual root excluded).
    std::size_t real_node_count() const noexcept;
    bool is_binary() const noexcept;
    // Internal nodes in post-order (children before parents).
    std::vector<NodeId> postorder() const;
    bool is_ancestor(NodeId ancestor, NodeId u) const;
    // Deterministic fingerprint of structure and annotations.
    std::uint64_t fingerprint() const;

private:
    std::vector<TreeNode> nodes_;
    NodeId root_ = kNoNode;
    std::vector<VarId> order_;
    std::vector<int> cards_;
    std::vector<NodeId> elim_node_;
    std::vector<int> depth_;
};

EliminationTree build_elimination_tree(const BayesianNetwork& net, const std::vector<VarId>& order);

// Every node gets at most two children by inserting balanced dummy nodes; ids of the
// original nodes are preserved and dummies are appended after them.
EliminationTree binarize(const EliminationTree& tree);

// One line per node: `node <id> <kind> <var|-> parent=<id|-> c=<int> U=<int> w=<int>`.
std::string dump_tree(const EliminationTree& tree);

}  // namespace bnmat
