#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bnmat/factor.hpp"

namespace bnmat {

struct Variable {
    VarId id = 0;
    std::string name;
    int cardinality = 1;
    std::vector<std::string> states;
};

// Immutable DAG of categorical variables with one CPT per variable.
// Structural soundness (acyclicity, CPT scope, normalization) is checked by validate_network.
class BayesianNetwork {
public:
    BayesianNetwork(std::vector<Variable> variables, std::vector<std::vector<VarId>> parents,
                    std::vector<Factor> cpts, std::vector<std::string> comments = {});

    std::size_t size() const noexcept { return variables_.size(); }
    const std::vector<Variable>& variables() const noexcept { return variables_; }
    const Variable& variable(VarId id) const { return variables_.at(static_cast<std::size_t>(id)); }
    int cardinality(VarId id) const { return variable(id).cardinality; }
    const std::vector<int>& cardinalities() const noexcept { return cards_; }
    const std::vector<VarId>& parents(VarId id) const { return parents_.at(static_cast<std::size_t>(id)); }
    const std::vector<VarId>& children(VarId id) const { return children_.at(static_cast<std::size_t>(id)); }
    const Factor& cpt(VarId id) const { return cpts_.at(static_cast<std::size_t>(id)); }
    const std::vector<Factor>& cpts() const noexcept { return cpts_; }
    // Opaque annotations (for example BIF property lines) carried through serialization.
    const std::vector<std::string>& comments() const noexcept { return comments_; }

    std::optional<VarId> find(const std::string& name) const;
    std::size_t edge_count() const noexcept;

private:
    std::vector<Variable> variables_;
    std::vector<int> cards_;
    std::vector<std::vector<VarId>> parents_;
    std::vector<std::vector<VarId>> children_;
    std::vector<Factor> cpts_;
    std::vector<std::string> comments_;
    std::map<std::string, VarId> by_name_;
};

// Builds the ascending-scope CPT factor for `child` given its declared parent order.
std::pair<std::vector<VarId>, std::vector<int>> cpt_scope(VarId child, const std::vector<VarId>& parents,
                                                          const std::vector<int>& cardinalities);

struct Violation {
    enum class Kind { cycle, cpt_scope, normalization };
    Kind kind;
    VarId variable;
    std::string message;
};

std::vector<Violation> validate_network(const BayesianNetwork& net, double tolerance = 1e-9);
// Throws ValidationError carrying the first violation, if any.
void require_valid(const BayesianNetwork& net, double tolerance = 1e-9);

// Variables in topological order (parents first); empty when the graph has a cycle.
std::vector<VarId> topological_order(const BayesianNetwork& net);

enum class Role : std::uint8_t { summed, free, bound };

// free = X, bound = Y; everything else is summed out.
struct Query {
    std::vector<VarId> free;
    std::map<VarId, int> bound;

    Role role(VarId v) const;
    friend bool operator==(const Query&, const Query&) = default;
};

// Sorts/deduplicates `free` and checks ids, states and disjointness.
Query normalized(const BayesianNetwork& net, Query q);
void validate_query(const BayesianNetwork& net, const Query& q);
std::vector<Role> roles(const BayesianNetwork& net, const Query& q);

struct Subnetwork {
    BayesianNetwork net;
    std::vector<VarId> original_ids;  // new id -> id in the source network
};

// Induced subnetwork on `keep` with ids renumbered densely in ascending original order.
// Every kept variable must keep all of its parents.
Subnetwork induced_subnetwork(const BayesianNetwork& net, std::vector<VarId> keep);
// Drops variables that have neither parents nor children.
Subnetwork without_isolated(const BayesianNetwork& net);

inline constexpr std::uint64_t kBruteForceCap = std::uint64_t{1} << 24;

// Reference answer: join every CPT, reduce bound variables, sum out the rest.
Factor joint_brute_force(const BayesianNetwork& net, const Query& q,
                         std::uint64_t cap = kBruteForceCap);

}  // namespace bnmat
