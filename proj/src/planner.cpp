#include "bnmat/planner.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <limits>
#include <sstream>

#include "bnmat/error.hpp"
#include "bnmat/parsers.hpp"

namespace bnmat {

NodeId lowest_selected_ancestor(NodeId u, const std::vector<char>& in_set, const EliminationTree& tree) {
    for (NodeId p = tree.node(u).parent; p != kNoNode; p = tree.node(p).parent)
        if (in_set[static_cast<std::size_t>(p)]) return p;
    return kNoNode;
}

std::vector<NodeId> highest_selected_descendants(NodeId u, const std::vector<char>& in_set, const EliminationTree& tree) {
    std::vector<NodeId> out;
    std::vector<NodeId> stack(tree.node(u).children.begin(), tree.node(u).children.end());
    while (!stack.empty()) {
        const NodeId x = stack.back();
        stack.pop_back();
        if (in_set[static_cast<std::size_t>(x)]) {
            out.push_back(x);
            continue;
        }
        for (NodeId c : tree.node(x).children) stack.push_back(c);
    }
    std::sort(out.begin(), out.end());
    return out;
}

namespace {

std::vector<char> membership(const std::vector<NodeId>& selected, const EliminationTree& tree) {
    std::vector<char> in_set(tree.size(), 0);
    for (NodeId u : selected) {
        if (u < 0 || static_cast<std::size_t>(u) >= tree.size() || !tree.node(u).selectable())
            throw ContractError("node " + std::to_string(u) + " cannot be materialized");
        in_set[static_cast<std::size_t>(u)] = 1;
    }
    return in_set;
}

double as_real(std::uint64_t x) { return static_cast<double>(x); }

}  // namespace

double benefit(const std::vector<NodeId>& selected, const EliminationTree& tree, const UsefulnessProfile& profile) {
    const auto in_set = membership(selected, tree);
    double total = 0.0;
    for (NodeId u : selected)
        total += usefulness_pair(u, lowest_selected_ancestor(u, in_set, tree), profile) * as_real(tree.node(u).total_cost);
    return total;
}

double marginal_benefit(NodeId u, const std::vector<char>& in_set, const EliminationTree& tree,
                        const UsefulnessProfile& profile) {
    double saved = as_real(tree.node(u).total_cost);
    for (NodeId d : highest_selected_descendants(u, in_set, tree)) saved -= as_real(tree.node(d).total_cost);
    return usefulness_pair(u, lowest_selected_ancestor(u, in_set, tree), profile) * saved;
}

MaterializationPlan make_plan(std::vector<NodeId> selected, Budget budget, const EliminationTree& tree,
                              const UsefulnessProfile& profile) {
    std::sort(selected.begin(), selected.end());
    MaterializationPlan plan;
    plan.budget = budget;
    plan.benefit = benefit(selected, tree, profile);
    for (NodeId u : selected) {
        const TreeNode& n = tree.node(u);
        plan.per_node.push_back({u, n.total_cost, n.weight, profile.at(u)});
    }
    plan.selected = std::move(selected);
    plan.tree_fingerprint = tree.fingerprint();
    return plan;
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Bottom-up table M(u, slot, kappa) over a binary tree. Slot 0 stands for "no selected
// ancestor"; slot j >= 1 for the j-th selectable proper ancestor counted from the root.
class TreeDp {
public:
    TreeDp(const EliminationTree& tree, const UsefulnessProfile& profile, Budget budget)
        : tree_(tree), profile_(profile), budget_(budget) {
        const auto n = tree.size();
        ancestors_.resize(n);
        cap_.assign(n, 0);
        table_.resize(n);
        // Selectable ancestor lists, top-down.
        std::vector<NodeId> stack{tree.root()};
        while (!stack.empty()) {
            const NodeId u = stack.back();
            stack.pop_back();
            for (NodeId c : tree.node(u).children) {
                auto& a = ancestors_[static_cast<std::size_t>(c)];
                a = ancestors_[static_cast<std::size_t>(u)];
                if (tree.node(u).selectable()) a.push_back(u);
                stack.push_back(c);
            }
        }
        std::uint64_t cells = 0;
        for (NodeId u : tree.postorder()) {
            const TreeNode& node = tree.node(u);
            std::uint64_t cap = node.selectable() ? cost(u) : 0;
            for (NodeId c : node.children) cap += cap_[static_cast<std::size_t>(c)];
            cap = std::min<std::uint64_t>(cap, budget.amount);
            cap_[static_cast<std::size_t>(u)] = cap;
            cells += (cap + 1) * (ancestors_[static_cast<std::size_t>(u)].size() + 1);
        }
        if (budget.kind == BudgetKind::space && cells > kSpaceDpCellLimit)
            throw SizeLimitError("space-budget DP would need " + std::to_string(cells) + " table cells");
        for (NodeId u : tree.postorder()) fill(u);
    }

    double value(std::uint64_t kappa) const {
        const auto r = static_cast<std::size_t>(tree_.root());
        return at(tree_.root(), 0, std::min(kappa, cap_[r]));
    }

    std::vector<NodeId> solution(std::uint64_t kappa) const {
        std::vector<NodeId> out;
        construct(tree_.root(), 0, std::min(kappa, cap_[static_cast<std::size_t>(tree_.root())]), out);
        std::sort(out.begin(), out.end());
        return out;
    }

private:
    std::uint64_t cost(NodeId u) const {
        return budget_.kind == BudgetKind::count ? 1 : tree_.node(u).weight;
    }

    double at(NodeId u, std::size_t slot, std::uint64_t kappa) const {
        const auto i = static_cast<std::size_t>(u);
        kappa = std::min(kappa, cap_[i]);
        return table_[i][slot * (cap_[i] + 1) + kappa];
    }

    NodeId slot_node(NodeId u, std::size_t slot) const {
        return slot == 0 ? kNoNode : ancestors_[static_cast<std::size_t>(u)][slot - 1];
    }

    // Best split of `kappa` between the children, each seen from `child_slot`.
    std::pair<double, std::uint64_t> best_split(NodeId u, std::size_t child_slot, std::uint64_t kappa) const {
        const auto& ch = tree_.node(u).children;
        if (ch.empty()) return {0.0, 0};
        if (ch.size() == 1) return {at(ch[0], child_slot, kappa), kappa};
        const NodeId l = ch[0], r = ch[1];
        const std::uint64_t lcap = std::min(kappa, cap_[static_cast<std::size_t>(l)]);
        double best = kNegInf;
        std::uint64_t arg = 0;
        for (std::uint64_t kl = 0; kl <= lcap; ++kl) {
            const double v = at(l, child_slot, kl) + at(r, child_slot, kappa - kl);
            if (v > best) {
                best = v;
                arg = kl;
            }
        }
        return {best, arg};
    }

    std::size_t own_slot(NodeId u) const { return ancestors_[static_cast<std::size_t>(u)].size() + 1; }

    double in_value(NodeId u, std::size_t slot, std::uint64_t kappa, std::uint64_t* split = nullptr) const {
        if (!tree_.node(u).selectable() || kappa < cost(u)) return kNegInf;
        const double gain =
            usefulness_pair(u, slot_node(u, slot), profile_) * static_cast<double>(tree_.node(u).total_cost);
        const auto [rest, arg] = best_split(u, own_slot(u), kappa - cost(u));
        if (split) *split = arg;
        return gain + rest;
    }

    void fill(NodeId u) {
        const auto i = static_cast<std::size_t>(u);
        const std::size_t slots = ancestors_[i].size() + 1;
        const std::uint64_t width = cap_[i] + 1;
        auto& t = table_[i];
        t.assign(slots * width, 0.0);
        for (std::size_t s = 0; s < slots; ++s)
            for (std::uint64_t kappa = 1; kappa < width; ++kappa) {
                const double out = best_split(u, s, kappa).first;
                const double in = in_value(u, s, kappa);
                t[s * width + kappa] = in > out ? in : out;
            }
    }

    void construct(NodeId u, std::size_t slot, std::uint64_t kappa, std::vector<NodeId>& out) const {
        kappa = std::min(kappa, cap_[static_cast<std::size_t>(u)]);
        if (kappa == 0) return;
        const auto& ch = tree_.node(u).children;
        std::uint64_t split = 0;
        const double in = in_value(u, slot, kappa, &split);
        const auto [outv, out_split] = best_split(u, slot, kappa);
        std::size_t child_slot = slot;
        std::uint64_t budget = kappa;
        if (in > outv) {
            out.push_back(u);
            child_slot = own_slot(u);
            budget = kappa - cost(u);
        } else {
            split = out_split;
        }
        if (ch.size() == 1) construct(ch[0], child_slot, budget, out);
        if (ch.size() == 2) {
            construct(ch[0], child_slot, split, out);
            construct(ch[1], child_slot, budget - split, out);
        }
    }

    const EliminationTree& tree_;
    const UsefulnessProfile& profile_;
    Budget budget_;
    std::vector<std::vector<NodeId>> ancestors_;
    std::vector<std::uint64_t> cap_;
    std::vector<std::vector<double>> table_;
};

struct BinaryView {
    EliminationTree tree;
    UsefulnessProfile profile;
};

BinaryView binary_view(const EliminationTree& tree, const UsefulnessProfile& profile) {
    if (profile.base.size() != tree.size()) throw ContractError("usefulness profile does not match the tree");
    if (tree.is_binary()) return {tree, profile};
    BinaryView v{binarize(tree), profile};
    v.profile.base.resize(v.tree.size(), 0.0);
    return v;
}

MaterializationPlan run_dp(const EliminationTree& tree, std::int64_t amount, const UsefulnessProfile& profile, BudgetKind kind) {
    if (amount < 0) throw ContractError("budget must be non-negative");
    const Budget budget{kind, static_cast<std::uint64_t>(amount)};
    const auto view = binary_view(tree, profile);
    TreeDp dp(view.tree, view.profile, budget);
    auto plan = make_plan(dp.solution(budget.amount), budget, tree, profile);
    plan.benefit = dp.value(budget.amount);
    return plan;
}

MaterializationPlan run_greedy(const EliminationTree& tree, std::int64_t amount, const UsefulnessProfile& profile,
                               BudgetKind kind) {
    if (amount < 0) throw ContractError("budget must be non-negative");
    const Budget budget{kind, static_cast<std::uint64_t>(amount)};
    std::vector<char> in_set(tree.size(), 0);
    std::vector<NodeId> chosen;
    std::uint64_t left = budget.amount;
    for (;;) {
        NodeId best = kNoNode;
        double best_score = 0.0;
        for (std::size_t i = 0; i < tree.size(); ++i) {
            const auto u = static_cast<NodeId>(i);
            const TreeNode& node = tree.node(u);
            if (!node.selectable() || in_set[i]) continue;
            const std::uint64_t need = kind == BudgetKind::count ? 1 : node.weight;
            if (need > left) continue;
            double score = marginal_benefit(u, in_set, tree, profile);
            if (kind == BudgetKind::space) score /= static_cast<double>(need);
            if (score > best_score) {
                best_score = score;
                best = u;
            }
        }
        if (best == kNoNode) break;
        in_set[static_cast<std::size_t>(best)] = 1;
        chosen.push_back(best);
        left -= kind == BudgetKind::count ? 1 : tree.node(best).weight;
    }
    return make_plan(std::move(chosen), budget, tree, profile);
}

}  // namespace

MaterializationPlan plan_dp(const EliminationTree& tree, std::int64_t k, const UsefulnessProfile& profile) {
    return run_dp(tree, k, profile, BudgetKind::count);
}

MaterializationPlan plan_dp_space(const EliminationTree& tree, std::int64_t space, const UsefulnessProfile& profile) {
    return run_dp(tree, space, profile, BudgetKind::space);
}

std::vector<double> benefit_curve(const EliminationTree& tree, std::int64_t k, const UsefulnessProfile& profile) {
    if (k < 0) throw ContractError("budget must be non-negative");
    const auto view = binary_view(tree, profile);
    TreeDp dp(view.tree, view.profile, Budget::nodes(static_cast<std::uint64_t>(k)));
    std::vector<double> out;
    for (std::int64_t kappa = 0; kappa <= k; ++kappa) out.push_back(dp.value(static_cast<std::uint64_t>(kappa)));
    return out;
}

MaterializationPlan plan_greedy(const EliminationTree& tree, std::int64_t k, const UsefulnessProfile& profile) {
    return run_greedy(tree, k, profile, BudgetKind::count);
}

MaterializationPlan plan_greedy_space(const EliminationTree& tree, std::int64_t space, const UsefulnessProfile& profile) {
    return run_greedy(tree, space, profile, BudgetKind::space);
}

MaterializationPlan plan_exhaustive(const EliminationTree& tree, Budget budget, const UsefulnessProfile& profile) {
    std::vector<NodeId> candidates;
    for (std::size_t i = 0; i < tree.size(); ++i)
        if (tree.nodes()[i].selectable()) candidates.push_back(static_cast<NodeId>(i));
    if (candidates.size() > kExhaustiveLimit)
        throw SizeLimitError("exhaustive planning is limited to " + std::to_string(kExhaustiveLimit) + " internal nodes");
    const std::uint64_t subsets = std::uint64_t{1} << candidates.size();
    double best = 0.0;
    std::vector<NodeId> best_set;
    std::vector<NodeId> set;
    for (std::uint64_t mask = 1; mask < subsets; ++mask) {
        set.clear();
        std::uint64_t used = 0;
        for (std::size_t j = 0; j < candidates.size(); ++j)
            if (mask >> j & 1U) {
                set.push_back(candidates[j]);
                used += budget.kind == BudgetKind::count ? 1 : tree.node(candidates[j]).weight;
            }
        if (used > budget.amount) continue;
        const double b = benefit(set, tree, profile);
        if (b > best) {
            best = b;
            best_set = set;
        }
    }
    return make_plan(std::move(best_set), budget, tree, profile);
}

std::string format_plan(const MaterializationPlan& plan) {
    char hash[32];
    std::snprintf(hash, sizeof hash, "%016" PRIx64, plan.tree_fingerprint);
    std::ostringstream out;
    out << "plan " << hash << ' ' << (plan.budget.kind == BudgetKind::count ? "k" : "space") << ' ' << plan.budget.amount
        << ' ' << format_double(plan.benefit) << '\n';
    for (const auto& n : plan.per_node)
        out << "mat " << n.id << " U=" << n.total_cost << " w=" << n.weight << " p=" << format_double(n.usefulness) << '\n';
    return out.str();
}

MaterializationPlan parse_plan(std::string_view text) {
    MaterializationPlan plan;
    bool header = false;
    int line_no = 0;
    std::istringstream in{std::string(text)};
    std::string line;
    auto field = [&](const std::string& word, const char* key) -> std::string {
        const std::string prefix = std::string(key) + "=";
        if (word.rfind(prefix, 0) != 0)
            throw ParseError(ParseIssue::syntax, "expected " + prefix + "<value>", line_no, 1);
        return word.substr(prefix.size());
    };
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream words(line);
        std::string kind;
        if (!(words >> kind) || kind[0] == '#') continue;
        if (kind == "plan") {
            std::string hash, budget_kind, amount, value;
            if (!(words >> hash >> budget_kind >> amount >> value))
                throw ParseError(ParseIssue::syntax, "plan header needs hash, budget kind, budget and benefit", line_no, 1);
            plan.tree_fingerprint = std::stoull(hash, nullptr, 16);
            if (budget_kind == "k") plan.budget.kind = BudgetKind::count;
            else if (budget_kind == "space") plan.budget.kind = BudgetKind::space;
            else throw ParseError(ParseIssue::invalid_value, "unknown budget kind '" + budget_kind + "'", line_no, 1);
            plan.budget.amount = static_cast<std::uint64_t>(parse_integer(amount, line_no, 1));
            plan.benefit = parse_double(value, line_no, 1);
            header = true;
        } else if (kind == "mat") {
            if (!header) throw ParseError(ParseIssue::syntax, "mat line before plan header", line_no, 1);
            std::string id, u, w, p;
            if (!(words >> id >> u >> w >> p)) throw ParseError(ParseIssue::syntax, "mat line needs id, U, w and p", line_no, 1);
            PlannedNode n;
            n.id = static_cast<NodeId>(parse_integer(id, line_no, 1));
            n.total_cost = static_cast<std::uint64_t>(parse_integer(field(u, "U"), line_no, 1));
            n.weight = static_cast<std::uint64_t>(parse_integer(field(w, "w"), line_no, 1));
            n.usefulness = parse_double(field(p, "p"), line_no, 1);
            plan.selected.push_back(n.id);
            plan.per_node.push_back(n);
        } else if (kind == "table" || kind == "factor") {
            break;  // store payload follows
        } else {
            throw ParseError(ParseIssue::syntax, "unknown plan directive '" + kind + "'", line_no, 1);
        }
    }
    if (!header) throw ParseError(ParseIssue::syntax, "missing plan header");
    std::sort(plan.selected.begin(), plan.selected.end());
    return plan;
}

}  // namespace bnmat
