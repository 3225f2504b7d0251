#include "bnmat/lattice.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <map>
#include <sstream>

#include "bnmat/error.hpp"
#include "bnmat/parsers.hpp"

namespace bnmat {

bool m_separated(const BayesianNetwork& net, VarId a, VarId b, const std::vector<VarId>& separator) {
    if (a == b) throw ContractError("m-separation needs two distinct variables");
    std::vector<char> blocked(net.size(), 0);
    for (VarId u : separator) blocked.at(static_cast<std::size_t>(u)) = 1;
    if (blocked.at(static_cast<std::size_t>(a)) || blocked.at(static_cast<std::size_t>(b)))
        throw ContractError("m-separation endpoints must lie outside the separator");
    const MoralGraph g = moral_graph(net);
    std::vector<char> seen(net.size(), 0);
    std::deque<VarId> frontier{a};
    seen[static_cast<std::size_t>(a)] = 1;
    while (!frontier.empty()) {
        const VarId u = frontier.front();
        frontier.pop_front();
        for (VarId w : g.adjacency[static_cast<std::size_t>(u)]) {
            if (w == b) return false;
            if (seen[static_cast<std::size_t>(w)] || blocked[static_cast<std::size_t>(w)]) continue;
            seen[static_cast<std::size_t>(w)] = 1;
            frontier.push_back(w);
        }
    }
    return true;
}

Subnetwork shrink(const BayesianNetwork& net, const Query& q, const std::vector<VarId>& given) {
    validate_query(net, q);
    const auto n = net.size();
    std::vector<char> target(n, 0), observed(n, 0);
    for (VarId v : q.free) target[static_cast<std::size_t>(v)] = 1;
    for (const auto& [v, s] : q.bound) target[static_cast<std::size_t>(v)] = 1;
    for (VarId v : given) {
        if (target.at(static_cast<std::size_t>(v))) throw ContractError("conditioning variable also appears in the query");
        observed[static_cast<std::size_t>(v)] = 1;
    }

    // Ancestral closure of every query variable.
    std::vector<char> ancestral(n, 0);
    std::vector<VarId> stack;
    for (std::size_t v = 0; v < n; ++v)
        if (target[v] || observed[v]) stack.push_back(static_cast<VarId>(v)), ancestral[v] = 1;
    while (!stack.empty()) {
        const VarId v = stack.back();
        stack.pop_back();
        for (VarId p : net.parents(v))
            if (!ancestral[static_cast<std::size_t>(p)]) ancestral[static_cast<std::size_t>(p)] = 1, stack.push_back(p);
    }
    if (std::none_of(ancestral.begin(), ancestral.end(), [](char c) { return c; })) {
        // Nothing is asked: any single root answers the (scalar) query.
        const auto topo = topological_order(net);
        return induced_subnetwork(net, {topo.empty() ? VarId{0} : topo.front()});
    }

    // Reachability from the query variables in the moral graph of the ancestral set,
    // never passing through conditioning variables.
    std::vector<std::vector<VarId>> adj(n);
    for (VarId v = 0; v < static_cast<VarId>(n); ++v) {
        if (!ancestral[static_cast<std::size_t>(v)]) continue;
        const auto& ps = net.parents(v);
        for (std::size_t i = 0; i < ps.size(); ++i) {
            adj[static_cast<std::size_t>(v)].push_back(ps[i]);
            adj[static_cast<std::size_t>(ps[i])].push_back(v);
            for (std::size_t j = i + 1; j < ps.size(); ++j) {
                adj[static_cast<std::size_t>(ps[i])].push_back(ps[j]);
                adj[static_cast<std::size_t>(ps[j])].push_back(ps[i]);
            }
        }
    }
    std::vector<char> keep(n, 0);
    std::deque<VarId> frontier;
    for (std::size_t v = 0; v < n; ++v)
        if (target[v]) keep[v] = 1, frontier.push_back(static_cast<VarId>(v));
    while (!frontier.empty()) {
        const VarId u = frontier.front();
        frontier.pop_front();
        if (observed[static_cast<std::size_t>(u)]) continue;
        for (VarId w : adj[static_cast<std::size_t>(u)]) {
            if (keep[static_cast<std::size_t>(w)]) continue;
            keep[static_cast<std::size_t>(w)] = 1;
            frontier.push_back(w);
        }
    }
    for (std::size_t v = 0; v < n; ++v)
        if (observed[v]) keep[v] = 1;

    std::vector<VarId> kept;
    std::vector<VarId> remap(n, -1);
    for (std::size_t v = 0; v < n; ++v)
        if (keep[v]) remap[v] = static_cast<VarId>(kept.size()), kept.push_back(static_cast<VarId>(v));

    std::vector<Variable> vars;
    std::vector<std::vector<VarId>> parents;
    std::vector<Factor> cpts;
    for (VarId old : kept) {
        Variable v = net.variable(old);
        v.id = remap[static_cast<std::size_t>(old)];
        const bool intact = std::all_of(net.parents(old).begin(), net.parents(old).end(),
                                        [&](VarId p) { return keep[static_cast<std::size_t>(p)] != 0; });
        if (intact) {
            std::vector<VarId> ps;
            for (VarId p : net.parents(old)) ps.push_back(remap[static_cast<std::size_t>(p)]);
            parents.push_back(std::move(ps));
            const Factor& f = net.cpt(old);
            std::vector<VarId> scope;
            for (VarId s : f.scope()) scope.push_back(remap[static_cast<std::size_t>(s)]);
            cpts.emplace_back(std::move(scope), f.cardinalities(), std::vector<double>(f.values().begin(), f.values().end()));
        } else {
            if (!observed[static_cast<std::size_t>(old)])
                throw InvariantError("shrink dropped a parent of unobserved variable " + net.variable(old).name);
            parents.emplace_back();
            cpts.push_back(Factor::constant({v.id}, {v.cardinality}, 1.0 / v.cardinality));
        }
        vars.push_back(std::move(v));
    }
    return {BayesianNetwork(std::move(vars), std::move(parents), std::move(cpts)), std::move(kept)};
}

bool contains(const Subnetwork& outer, const Subnetwork& inner, const BayesianNetwork& full) {
    const auto& o = outer.original_ids;
    const auto& in = inner.original_ids;
    if (!std::includes(o.begin(), o.end(), in.begin(), in.end())) return false;
    std::vector<VarId> outer_local(full.size(), -1);
    for (std::size_t i = 0; i < o.size(); ++i) outer_local[static_cast<std::size_t>(o[i])] = static_cast<VarId>(i);
    for (std::size_t i = 0; i < in.size(); ++i) {
        const VarId orig = in[i];
        const auto& outer_parents = outer.net.parents(outer_local[static_cast<std::size_t>(orig)]);
        for (VarId p : inner.net.parents(static_cast<VarId>(i))) {
            const VarId p_local = outer_local[static_cast<std::size_t>(in[static_cast<std::size_t>(p)])];
            if (std::find(outer_parents.begin(), outer_parents.end(), p_local) == outer_parents.end()) return false;
        }
    }
    return true;
}

int map_query(const Lattice& lattice, const BayesianNetwork& full, const Query& q) {
    const Subnetwork s = shrink(full, q);
    int best = 0;
    std::vector<char> seen(lattice.members.size(), 0);
    std::deque<int> frontier{0};
    seen[0] = 1;
    while (!frontier.empty()) {
        const int m = frontier.front();
        frontier.pop_front();
        const auto size = lattice.members[static_cast<std::size_t>(m)].sub.net.size();
        const auto best_size = lattice.members[static_cast<std::size_t>(best)].sub.net.size();
        if (size < best_size || (size == best_size && m < best)) best = m;
        for (int c : lattice.members[static_cast<std::size_t>(m)].children) {
            if (seen[static_cast<std::size_t>(c)]) continue;
            seen[static_cast<std::size_t>(c)] = 1;
            if (contains(lattice.members[static_cast<std::size_t>(c)].sub, s, full)) frontier.push_back(c);
        }
    }
    return best;
}

Query translate_query(const LatticeMember& member, const Query& q) {
    const auto& ids = member.sub.original_ids;
    auto local = [&](VarId v) {
        auto it = std::lower_bound(ids.begin(), ids.end(), v);
        if (it == ids.end() || *it != v) throw ContractError("query variable " + std::to_string(v) + " is not in the member");
        return static_cast<VarId>(it - ids.begin());
    };
    Query out;
    for (VarId v : q.free) out.free.push_back(local(v));
    for (const auto& [v, s] : q.bound) out.bound[local(v)] = s;
    return out;
}

namespace {

std::size_t parameter_count(const Subnetwork& s) { return network_stats(s.net).parameter_count; }

LatticeMember make_member(Subnetwork sub) {
    LatticeMember m{std::move(sub), {}, 0.0, {}, {}, {}, {}};
    m.tree = build_elimination_tree(m.sub.net, select_order(m.sub.net).order);
    m.profile.base.assign(m.tree.size(), 0.0);
    return m;
}

void link_members(Lattice& lattice, const BayesianNetwork& full) {
    const auto count = lattice.members.size();
    std::vector<std::vector<char>> below(count, std::vector<char>(count, 0));
    for (std::size_t a = 0; a < count; ++a)
        for (std::size_t b = 0; b < count; ++b)
            if (a != b && lattice.members[a].sub.original_ids != lattice.members[b].sub.original_ids &&
                contains(lattice.members[a].sub, lattice.members[b].sub, full))
                below[a][b] = 1;
    for (auto& m : lattice.members) m.parents.clear(), m.children.clear();
    for (std::size_t a = 0; a < count; ++a)
        for (std::size_t b = 0; b < count; ++b) {
            if (!below[a][b]) continue;
            bool direct = true;
            for (std::size_t c = 0; c < count && direct; ++c)
                if (below[a][c] && below[c][b]) direct = false;
            if (direct) {
                lattice.members[a].children.push_back(static_cast<int>(b));
                lattice.members[b].parents.push_back(static_cast<int>(a));
            }
        }
}

}  // namespace

double expected_mapped_parameters(const Lattice& lattice, const BayesianNetwork& full, const std::vector<Query>& sample) {
    if (sample.empty()) return 0.0;
    double total = 0.0;
    for (const Query& q : sample)
        total += static_cast<double>(parameter_count(lattice.members[static_cast<std::size_t>(map_query(lattice, full, q))].sub));
    return total / static_cast<double>(sample.size());
}

Lattice build_lattice(const BayesianNetwork& net, const std::vector<Query>& sample, int extra_members,
                      const std::vector<Query>& fresh) {
    if (sample.empty()) throw ContractError("lattice construction needs a non-empty query sample");
    if (extra_members < 0) throw ContractError("number of lattice members must be non-negative");

    // Phase 1: distinct shrink results and their frequencies.
    std::map<std::vector<VarId>, std::size_t> index;
    std::vector<Subnetwork> candidates;
    std::vector<double> freq;
    for (const Query& q : sample) {
        Subnetwork s = shrink(net, q);
        auto [it, fresh_key] = index.emplace(s.original_ids, candidates.size());
        if (fresh_key) {
            candidates.push_back(std::move(s));
            freq.push_back(0.0);
        }
        freq[it->second] += 1.0 / static_cast<double>(sample.size());
    }

    // Phase 2: greedy additions. mapped_size/params track each candidate's current member.
    std::vector<VarId> all(net.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<VarId>(i);
    std::vector<Subnetwork> chosen{induced_subnetwork(net, all)};
    std::vector<std::size_t> mapped_vars(candidates.size(), net.size());
    std::vector<double> mapped_params(candidates.size(), static_cast<double>(parameter_count(chosen[0])));
    std::vector<std::size_t> cand_params(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) cand_params[i] = parameter_count(candidates[i]);
    std::vector<std::vector<char>> covers(candidates.size(), std::vector<char>(candidates.size(), 0));
    for (std::size_t c = 0; c < candidates.size(); ++c)
        for (std::size_t i = 0; i < candidates.size(); ++i) covers[c][i] = contains(candidates[c], candidates[i], net);
    std::vector<char> used(candidates.size(), 0);
    for (std::size_t i = 0; i < candidates.size(); ++i)
        if (candidates[i].original_ids.size() == net.size()) used[i] = 1;

    double current = 0.0;
    for (std::size_t i = 0; i < candidates.size(); ++i) current += freq[i] * mapped_params[i];
    for (int step = 0; step < extra_members; ++step) {
        std::size_t best = candidates.size();
        double best_value = current;
        for (std::size_t c = 0; c < candidates.size(); ++c) {
            if (used[c]) continue;
            double value = 0.0;
            for (std::size_t i = 0; i < candidates.size(); ++i) {
                const bool moves = covers[c][i] && candidates[c].original_ids.size() < mapped_vars[i];
                value += freq[i] * (moves ? static_cast<double>(cand_params[c]) : mapped_params[i]);
            }
            if (value < best_value) best_value = value, best = c;
        }
        if (best == candidates.size()) break;
        used[best] = 1;
        for (std::size_t i = 0; i < candidates.size(); ++i)
            if (covers[best][i] && candidates[best].original_ids.size() < mapped_vars[i]) {
                mapped_vars[i] = candidates[best].original_ids.size();
                mapped_params[i] = static_cast<double>(cand_params[best]);
            }
        current = best_value;
        chosen.push_back(candidates[best]);
    }

    Lattice lattice;
    for (auto& s : chosen) lattice.members.push_back(make_member(std::move(s)));
    link_members(lattice, net);

    // Phase 3: shares and per-member workloads from a fresh sample.
    const auto& eval = fresh.empty() ? sample : fresh;
    for (const Query& q : eval) {
        const int m = map_query(lattice, net, q);
        auto& member = lattice.members[static_cast<std::size_t>(m)];
        member.queries.push_back(translate_query(member, q));
    }
    for (auto& member : lattice.members) {
        member.pi = static_cast<double>(member.queries.size()) / static_cast<double>(eval.size());
        if (!member.queries.empty()) member.profile = base_usefulness_sampled(member.tree, member.queries);
    }
    return lattice;
}

std::vector<int> allocate_budget(const std::vector<double>& pi, const std::vector<std::vector<double>>& curves, int k) {
    if (k < 0) throw ContractError("budget must be non-negative");
    if (pi.size() != curves.size()) throw ContractError("one benefit curve per lattice member is required");
    const auto m = pi.size();
    const auto width = static_cast<std::size_t>(k) + 1;
    auto curve_at = [&](std::size_t i, std::size_t kappa) {
        const auto& c = curves[i];
        if (c.empty()) return 0.0;
        return c[std::min(kappa, c.size() - 1)];
    };
    // best[i][kappa]: optimum over the first i members with budget kappa. Ties hand the
    // budget to the later member, so a lone member receives all of it.
    std::vector<std::vector<double>> best(m + 1, std::vector<double>(width, 0.0));
    std::vector<std::vector<int>> choice(m + 1, std::vector<int>(width, 0));
    for (std::size_t i = 1; i <= m; ++i)
        for (std::size_t kappa = 0; kappa < width; ++kappa) {
            double top = -std::numeric_limits<double>::infinity();
            int arg = 0;
            for (std::size_t give = 0; give <= kappa; ++give) {
                const double v = pi[i - 1] * curve_at(i - 1, give) + best[i - 1][kappa - give];
                if (v >= top) top = v, arg = static_cast<int>(give);
            }
            best[i][kappa] = top;
            choice[i][kappa] = arg;
        }
    std::vector<int> alloc(m, 0);
    std::size_t left = width - 1;
    for (std::size_t i = m; i >= 1; --i) {
        alloc[i - 1] = choice[i][left];
        left -= static_cast<std::size_t>(alloc[i - 1]);
    }
    return alloc;
}

std::vector<int> allocate_budget(const Lattice& lattice, int k) {
    std::vector<double> pi;
    std::vector<std::vector<double>> curves;
    for (const auto& m : lattice.members) {
        pi.push_back(m.pi);
        curves.push_back(benefit_curve(m.tree, k, m.profile));
    }
    return allocate_budget(pi, curves, k);
}

QueryAnswer lattice_answer(const Lattice& lattice, const BayesianNetwork& full, const Query& q,
                           const std::vector<MaterializationStore>* stores) {
    const int m = map_query(lattice, full, q);
    const auto& member = lattice.members[static_cast<std::size_t>(m)];
    const MaterializationStore* store = stores ? &stores->at(static_cast<std::size_t>(m)) : nullptr;
    QueryAnswer a = answer_query(translate_query(member, q), member.sub.net, member.tree, store);
    std::vector<VarId> scope;
    for (VarId v : a.table.scope()) scope.push_back(member.sub.original_ids[static_cast<std::size_t>(v)]);
    a.table = Factor(std::move(scope), a.table.cardinalities(),
                     std::vector<double>(a.table.values().begin(), a.table.values().end()));
    return a;
}

std::string format_manifest(const Lattice& lattice) {
    std::ostringstream out;
    for (std::size_t i = 0; i < lattice.members.size(); ++i) {
        const auto& m = lattice.members[i];
        out << "member " << i << " vars=";
        for (std::size_t j = 0; j < m.sub.original_ids.size(); ++j) out << (j ? "," : "") << m.sub.original_ids[j];
        out << " pi=" << format_double(m.pi) << " parent=";
        for (std::size_t j = 0; j < m.parents.size(); ++j) out << (j ? "," : "") << m.parents[j];
        out << '\n';
    }
    return out.str();
}

}  // namespace bnmat
