#include "bnmat/network.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>
#include <sstream>

#include "bnmat/error.hpp"

namespace bnmat {

BayesianNetwork::BayesianNetwork(std::vector<Variable> variables,
                                 std::vector<std::vector<VarId>> parents, std::vector<Factor> cpts,
                                 std::vector<std::string> comments)
    : variables_(std::move(variables)),
      parents_(std::move(parents)),
      cpts_(std::move(cpts)),
      comments_(std::move(comments)) {
    const auto n = variables_.size();
    if (n == 0) throw ValidationError("network must contain at least one variable");
    if (parents_.size() != n || cpts_.size() != n)
        throw ValidationError("network needs one parent list and one CPT per variable");
    cards_.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Variable& v = variables_[i];
        if (v.id != static_cast<VarId>(i))
            throw ValidationError("variable ids must be dense 0..n-1 (got " + std::to_string(v.id) +
                                  " at position " + std::to_string(i) + ")");
        if (v.cardinality < 1)
            throw ValidationError("variable " + v.name + " has non-positive cardinality");
        if (v.states.size() != static_cast<std::size_t>(v.cardinality))
            throw ValidationError("variable " + v.name + " state count differs from cardinality");
        std::set<std::string> seen(v.states.begin(), v.states.end());
        if (seen.size() != v.states.size())
            throw ValidationError("variable " + v.name + " has duplicate state names");
        if (!by_name_.emplace(v.name, v.id).second)
            throw ValidationError("duplicate variable name " + v.name);
        cards_.push_back(v.cardinality);
    }
    children_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (VarId p : parents_[i]) {
            if (p < 0 || static_cast<std::size_t>(p) >= n)
                throw ValidationError("variable " + variables_[i].name + " has unknown parent id " +
                                      std::to_string(p));
            children_[static_cast<std::size_t>(p)].push_back(static_cast<VarId>(i));
        }
        const Factor& f = cpts_[i];
        for (std::size_t j = 0; j < f.scope().size(); ++j) {
            const VarId s = f.scope()[j];
            if (s < 0 || static_cast<std::size_t>(s) >= n)
                throw ValidationError("CPT of " + variables_[i].name + " references unknown id " +
                                      std::to_string(s));
            if (f.cardinalities()[j] != cards_[static_cast<std::size_t>(s)])
                throw ValidationError("CPT of " + variables_[i].name +
                                      " disagrees with the cardinality of variable " +
                                      variables_[static_cast<std::size_t>(s)].name);
        }
    }
}

std::optional<VarId> BayesianNetwork::find(const std::string& name) const {
    auto it = by_name_.find(name);
    if (it == by_name_.end()) return std::nullopt;
    return it->second;
}

std::size_t BayesianNetwork::edge_count() const noexcept {
    std::size_t e = 0;
    for (const auto& p : parents_) e += p.size();
    return e;
}

std::pair<std::vector<VarId>, std::vector<int>> cpt_scope(VarId child, const std::vector<VarId>& parents,
                                                          const std::vector<int>& cardinalities) {
    std::vector<VarId> scope(parents);
    scope.push_back(child);
    std::sort(scope.begin(), scope.end());
    if (std::adjacent_find(scope.begin(), scope.end()) != scope.end())
        throw ValidationError("CPT scope of variable " + std::to_string(child) +
                              " repeats a variable");
    std::vector<int> cards;
    cards.reserve(scope.size());
    for (VarId v : scope) cards.push_back(cardinalities.at(static_cast<std::size_t>(v)));
    return {std::move(scope), std::move(cards)};
}

std::vector<VarId> topological_order(const BayesianNetwork& net) {
    const auto n = net.size();
    std::vector<int> indegree(n, 0);
    for (std::size_t i = 0; i < n; ++i) indegree[i] = static_cast<int>(net.parents(static_cast<VarId>(i)).size());
    std::priority_queue<VarId, std::vector<VarId>, std::greater<>> ready;
    for (std::size_t i = 0; i < n; ++i)
        if (indegree[i] == 0) ready.push(static_cast<VarId>(i));
    std::vector<VarId> order;
    while (!ready.empty()) {
        const VarId v = ready.top();
        ready.pop();
        order.push_back(v);
        for (VarId c : net.children(v))
            if (--indegree[static_cast<std::size_t>(c)] == 0) ready.push(c);
    }
    if (order.size() != n) return {};
    return order;
}

std::vector<Violation> validate_network(const BayesianNetwork& net, double tolerance) {
    std::vector<Violation> out;
    const auto n = net.size();
    for (std::size_t i = 0; i < n; ++i) {
        const auto v = static_cast<VarId>(i);
        const auto& ps = net.parents(v);
        if (std::find(ps.begin(), ps.end(), v) != ps.end())
            out.push_back({Violation::Kind::cycle, v, "variable " + net.variable(v).name + " is its own parent"});
    }
    if (topological_order(net).empty() &&
        std::none_of(out.begin(), out.end(), [](const Violation& x) { return x.kind == Violation::Kind::cycle; }))
        out.push_back({Violation::Kind::cycle, -1, "parent relation contains a directed cycle"});

    for (std::size_t i = 0; i < n; ++i) {
        const auto v = static_cast<VarId>(i);
        const Factor& f = net.cpt(v);
        std::vector<VarId> expected(net.parents(v));
        expected.push_back(v);
        std::sort(expected.begin(), expected.end());
        expected.erase(std::unique(expected.begin(), expected.end()), expected.end());
        if (expected != f.scope() || expected.size() != net.parents(v).size() + 1) {
            out.push_back({Violation::Kind::cpt_scope, v,
                           "CPT of " + net.variable(v).name + " has scope " + format_scope(f.scope()) +
                               ", expected " + format_scope(expected)});
            continue;
        }
        // Rows: sum over the child's states for each parent assignment.
        const int pos = f.position(v);
        std::size_t outer = 1, inner = 1;
        for (int j = 0; j < pos; ++j) outer *= static_cast<std::size_t>(f.cardinalities()[static_cast<std::size_t>(j)]);
        for (std::size_t j = static_cast<std::size_t>(pos) + 1; j < f.scope().size(); ++j)
            inner *= static_cast<std::size_t>(f.cardinalities()[j]);
        const auto card = static_cast<std::size_t>(net.cardinality(v));
        for (std::size_t o = 0; o < outer; ++o)
            for (std::size_t in = 0; in < inner; ++in) {
                double sum = 0.0;
                for (std::size_t c = 0; c < card; ++c) sum += f.values()[(o * card + c) * inner + in];
                if (std::abs(sum - 1.0) > tolerance) {
                    // Decode the parent assignment for the diagnostic.
                    std::size_t rest = o * inner + in;
                    std::vector<std::string> parts;
                    std::size_t radix_index = f.scope().size();
                    std::vector<int> digits(f.scope().size(), 0);
                    while (radix_index-- > 0) {
                        if (static_cast<int>(radix_index) == pos) continue;
                        const auto c = static_cast<std::size_t>(f.cardinalities()[radix_index]);
                        digits[radix_index] = static_cast<int>(rest % c);
                        rest /= c;
                    }
                    for (std::size_t j = 0; j < f.scope().size(); ++j) {
                        if (static_cast<int>(j) == pos) continue;
                        const auto& pv = net.variable(f.scope()[j]);
                        parts.push_back(pv.name + "=" + pv.states[static_cast<std::size_t>(digits[j])]);
                    }
                    std::ostringstream msg;
                    msg << "CPT of " << net.variable(v).name << " sums to " << sum << " for parent assignment (";
                    for (std::size_t j = 0; j < parts.size(); ++j) msg << (j ? ", " : "") << parts[j];
                    msg << ")";
                    out.push_back({Violation::Kind::normalization, v, msg.str()});
                }
            }
    }
    return out;
}

void require_valid(const BayesianNetwork& net, double tolerance) {
    const auto violations = validate_network(net, tolerance);
    if (!violations.empty()) throw ValidationError(violations.front().message);
}

Role Query::role(VarId v) const {
    if (bound.count(v)) return Role::bound;
    if (std::binary_search(free.begin(), free.end(), v)) return Role::free;
    return Role::summed;
}

Query normalized(const BayesianNetwork& net, Query q) {
    std::sort(q.free.begin(), q.free.end());
    q.free.erase(std::unique(q.free.begin(), q.free.end()), q.free.end());
    validate_query(net, q);
    return q;
}

void validate_query(const BayesianNetwork& net, const Query& q) {
    const auto n = static_cast<VarId>(net.size());
    if (!std::is_sorted(q.free.begin(), q.free.end()) ||
        std::adjacent_find(q.free.begin(), q.free.end()) != q.free.end())
        throw ContractError("query free set must be sorted and duplicate-free");
    for (VarId v : q.free)
        if (v < 0 || v >= n) throw ContractError("query references unknown variable " + std::to_string(v));
    for (const auto& [v, s] : q.bound) {
        if (v < 0 || v >= n) throw ContractError("query references unknown variable " + std::to_string(v));
        if (s < 0 || s >= net.cardinality(v))
            throw ContractError("bound state out of range for variable " + net.variable(v).name);
        if (std::binary_search(q.free.begin(), q.free.end(), v))
            throw ContractError("variable " + net.variable(v).name + " is both free and bound");
    }
}

std::vector<Role> roles(const BayesianNetwork& net, const Query& q) {
    std::vector<Role> r(net.size(), Role::summed);
    for (VarId v : q.free) r[static_cast<std::size_t>(v)] = Role::free;
    for (const auto& [v, s] : q.bound) r[static_cast<std::size_t>(v)] = Role::bound;
    return r;
}

Subnetwork induced_subnetwork(const BayesianNetwork& net, std::vector<VarId> keep) {
    std::sort(keep.begin(), keep.end());
    keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
    std::vector<VarId> remap(net.size(), -1);
    for (std::size_t i = 0; i < keep.size(); ++i) {
        if (keep[i] < 0 || static_cast<std::size_t>(keep[i]) >= net.size())
            throw ContractError("subnetwork references unknown variable " + std::to_string(keep[i]));
        remap[static_cast<std::size_t>(keep[i])] = static_cast<VarId>(i);
    }
    std::vector<Variable> vars;
    std::vector<std::vector<VarId>> parents;
    std::vector<Factor> cpts;
    for (VarId old : keep) {
        Variable v = net.variable(old);
        v.id = remap[static_cast<std::size_t>(old)];
        vars.push_back(std::move(v));
        std::vector<VarId> ps;
        for (VarId p : net.parents(old)) {
            if (remap[static_cast<std::size_t>(p)] < 0)
                throw ContractError("subnetwork keeps " + net.variable(old).name + " but drops its parent " +
                                    net.variable(p).name);
            ps.push_back(remap[static_cast<std::size_t>(p)]);
        }
        parents.push_back(std::move(ps));
        const Factor& f = net.cpt(old);
        std::vector<VarId> scope;
        for (VarId s : f.scope()) scope.push_back(remap[static_cast<std::size_t>(s)]);
        // Renumbering is monotone, so the row-major layout is unchanged.
        cpts.emplace_back(std::move(scope), f.cardinalities(), std::vector<double>(f.values().begin(), f.values().end()));
    }
    return {BayesianNetwork(std::move(vars), std::move(parents), std::move(cpts), net.comments()), std::move(keep)};
}

Subnetwork without_isolated(const BayesianNetwork& net) {
    std::vector<VarId> keep;
    for (VarId v = 0; v < static_cast<VarId>(net.size()); ++v)
        if (!net.parents(v).empty() || !net.children(v).empty()) keep.push_back(v);
    if (keep.empty()) keep.push_back(0);
    return induced_subnetwork(net, std::move(keep));
}

Factor joint_brute_force(const BayesianNetwork& net, const Query& q, std::uint64_t cap) {
    validate_query(net, q);
    std::vector<VarId> all(net.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<VarId>(i);
    checked_table_size(all, net.cardinalities(), cap);

    std::vector<const Factor*> cpts;
    for (const Factor& f : net.cpts()) cpts.push_back(&f);
    Factor joint = factor_join(cpts);
    for (const auto& [v, s] : q.bound) joint = factor_reduce(joint, v, s);
    for (VarId v = 0; v < static_cast<VarId>(net.size()); ++v)
        if (q.role(v) == Role::summed) joint = factor_sum_out(joint, v);
    return joint;
}

}  // namespace bnmat
