#include "bnmat/workload.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "bnmat/error.hpp"
#include "bnmat/parsers.hpp"

namespace bnmat {

std::string to_string(Scheme s) {
    switch (s) {
        case Scheme::uniform: return "uniform";
        case Scheme::skewed: return "skewed";
        case Scheme::empirical: return "empirical";
        case Scheme::mixture: return "mixture";
    }
    return "?";
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    if (trim(s).empty()) return out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

template <class F>
void for_each_line(std::string_view text, F&& f) {
    int line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        std::string_view line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (!line.empty()) f(line, line_no);
    }
}

}  // namespace

WorkloadSpec parse_workload_spec(std::string_view text) {
    WorkloadSpec spec;
    for_each_line(text, [&](std::string_view line, int line_no) {
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ParseError(ParseIssue::syntax, "expected key=value", line_no, 1);
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        const int col = static_cast<int>(eq) + 2;
        if (key == "scheme") {
            if (value == "uniform") spec.scheme = Scheme::uniform;
            else if (value == "skewed") spec.scheme = Scheme::skewed;
            else if (value == "empirical") spec.scheme = Scheme::empirical;
            else if (value == "mixture") spec.scheme = Scheme::mixture;
            else throw ParseError(ParseIssue::invalid_value, "unknown scheme '" + std::string(value) + "'", line_no, col);
        } else if (key == "sizes") {
            spec.sizes.clear();
            for (auto part : split(value, ',')) spec.sizes.push_back(static_cast<int>(parse_integer(part, line_no, col)));
        } else if (key == "samples") {
            spec.samples_per_size = static_cast<int>(parse_integer(value, line_no, col));
        } else if (key == "seed") {
            spec.seed = static_cast<std::uint64_t>(parse_integer(value, line_no, col));
        } else if (key == "lambda") {
            spec.lambda = parse_double(value, line_no, col);
        } else if (key == "log") {
            spec.log = std::string(value);
        } else {
            throw ParseError(ParseIssue::syntax, "unknown workload key '" + std::string(key) + "'", line_no, 1);
        }
    });
    if (spec.lambda < 0.0 || spec.lambda > 1.0) throw ParseError(ParseIssue::invalid_value, "lambda must lie in [0,1]");
    if (spec.samples_per_size < 1) throw ParseError(ParseIssue::invalid_value, "samples must be positive");
    if (spec.sizes.empty()) throw ParseError(ParseIssue::invalid_value, "sizes must not be empty");
    return spec;
}

std::string format_workload_spec(const WorkloadSpec& spec) {
    std::ostringstream out;
    out << "scheme=" << to_string(spec.scheme) << "\nsizes=";
    for (std::size_t i = 0; i < spec.sizes.size(); ++i) out << (i ? "," : "") << spec.sizes[i];
    out << "\nsamples=" << spec.samples_per_size << "\nseed=" << spec.seed << "\nlambda=" << format_double(spec.lambda)
        << '\n';
    if (!spec.log.empty()) out << "log=" << spec.log << '\n';
    return out.str();
}

void validate_workload_spec(const WorkloadSpec& spec, std::size_t variable_count) {
    if (spec.sizes.empty()) throw ValidationError("workload needs at least one query size");
    for (int r : spec.sizes)
        if (r < 1 || static_cast<std::size_t>(r) > variable_count)
            throw ValidationError("query size " + std::to_string(r) + " outside 1.." + std::to_string(variable_count));
    if (spec.lambda < 0.0 || spec.lambda > 1.0) throw ValidationError("lambda must lie in [0,1]");
    if (spec.samples_per_size < 1) throw ValidationError("samples per size must be positive");
}

void check_profile(const EliminationTree& tree, const UsefulnessProfile& profile) {
    if (profile.base.size() != tree.size()) throw InvariantError("profile size differs from tree size");
    for (std::size_t i = 0; i < tree.size(); ++i) {
        const double b = profile.base[i];
        if (!(b >= 0.0 && b <= 1.0)) throw InvariantError("usefulness of node " + std::to_string(i) + " outside [0,1]");
        if (!tree.nodes()[i].selectable()) continue;
        for (NodeId p = tree.nodes()[i].parent; p != kNoNode; p = tree.node(p).parent) {
            if (!tree.node(p).selectable()) continue;
            if (profile.base[static_cast<std::size_t>(p)] > b)
                throw InvariantError("node " + std::to_string(i) + " is less useful than its ancestor " + std::to_string(p));
            break;
        }
    }
}

UsefulnessProfile base_usefulness_uniform(const EliminationTree& tree, const WorkloadSpec& spec) {
    const auto n = tree.variable_count();
    validate_workload_spec(spec, n);
    UsefulnessProfile prof;
    prof.base.resize(tree.size(), 0.0);
    for (std::size_t i = 0; i < tree.size(); ++i) {
        const TreeNode& node = tree.nodes()[i];
        if (node.kind == NodeKind::dummy) continue;
        const auto m = node.vars.size();
        double total = 0.0;
        for (int r : spec.sizes) {
            // C(n-m, r) / C(n, r) as a running product.
            double p = 1.0;
            for (int j = 0; j < r; ++j) {
                const double num = static_cast<double>(n) - static_cast<double>(m) - j;
                if (num <= 0.0) {
                    p = 0.0;
                    break;
                }
                p *= num / (static_cast<double>(n) - j);
            }
            total += p;
        }
        prof.base[i] = total / static_cast<double>(spec.sizes.size());
    }
    return prof;
}

UsefulnessProfile base_usefulness_sampled(const EliminationTree& tree, const std::vector<Query>& sample) {
    if (sample.empty()) throw ContractError("usefulness estimation needs a non-empty query sample");
    const auto post = tree.postorder();
    std::vector<std::uint64_t> hits(tree.size(), 0);
    std::vector<char> blocked(tree.size());
    std::vector<char> kept(tree.variable_count());
    for (const Query& q : sample) {
        std::fill(kept.begin(), kept.end(), 0);
        for (VarId v : q.free) kept[static_cast<std::size_t>(v)] = 1;
        for (const auto& [v, s] : q.bound) kept[static_cast<std::size_t>(v)] = 1;
        for (NodeId u : post) {
            const TreeNode& node = tree.node(u);
            char b = node.kind == NodeKind::internal && kept[static_cast<std::size_t>(node.var)];
            for (NodeId c : node.children) b |= blocked[static_cast<std::size_t>(c)];
            blocked[static_cast<std::size_t>(u)] = b;
            if (!b) ++hits[static_cast<std::size_t>(u)];
        }
    }
    UsefulnessProfile prof;
    prof.base.resize(tree.size());
    for (std::size_t i = 0; i < tree.size(); ++i)
        prof.base[i] = tree.nodes()[i].kind == NodeKind::dummy
                           ? 0.0
                           : static_cast<double>(hits[i]) / static_cast<double>(sample.size());
    return prof;
}

double usefulness_pair(NodeId u, NodeId v, const UsefulnessProfile& profile) {
    const double p = profile.at(u) - profile.at(v);
    if (p < 0.0)
        throw InvariantError("negative usefulness for node " + std::to_string(u) + " below " + std::to_string(v) +
                             " (corrupted profile)");
    return p;
}

std::vector<int> variable_levels(const EliminationTree& tree) {
    std::vector<int> depth(tree.size(), 0);
    int deepest = 0;
    // Depth counted in internal ancestors only, so dummies and a virtual root do not shift levels.
    std::vector<NodeId> stack{tree.root()};
    while (!stack.empty()) {
        const NodeId u = stack.back();
        stack.pop_back();
        const TreeNode& node = tree.node(u);
        const int below = depth[static_cast<std::size_t>(u)] + (node.kind == NodeKind::internal ? 1 : 0);
        if (node.kind == NodeKind::internal) deepest = std::max(deepest, depth[static_cast<std::size_t>(u)]);
        for (NodeId c : node.children) {
            depth[static_cast<std::size_t>(c)] = below;
            stack.push_back(c);
        }
    }
    std::vector<int> levels(tree.variable_count(), 1);
    for (VarId v = 0; v < static_cast<VarId>(tree.variable_count()); ++v)
        levels[static_cast<std::size_t>(v)] = deepest - depth[static_cast<std::size_t>(tree.elimination_node(v))] + 1;
    return levels;
}

QuerySampler::QuerySampler(const EliminationTree& tree, Scheme scheme, std::uint64_t seed, double lambda)
    : n_(tree.variable_count()), scheme_(scheme), lambda_(lambda), rng_(seed) {
    if (scheme == Scheme::empirical) throw ContractError("empirical workloads are read from a query log");
    for (int level : variable_levels(tree)) skew_weights_.push_back(static_cast<double>(level));
}

Query QuerySampler::draw(int r, bool skewed) {
    if (r < 0 || static_cast<std::size_t>(r) > n_) throw ContractError("query size out of range");
    Query q;
    std::vector<VarId> pool(n_);
    for (std::size_t i = 0; i < n_; ++i) pool[i] = static_cast<VarId>(i);
    if (!skewed) {
        for (int i = 0; i < r; ++i) {
            std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(i), n_ - 1);
            std::swap(pool[static_cast<std::size_t>(i)], pool[pick(rng_)]);
        }
        q.free.assign(pool.begin(), pool.begin() + r);
    } else {
        std::vector<double> w = skew_weights_;
        double total = 0.0;
        for (double x : w) total += x;
        for (int i = 0; i < r; ++i) {
            std::uniform_real_distribution<double> u(0.0, total);
            double x = u(rng_);
            std::size_t chosen = n_;
            for (std::size_t j = 0; j < n_; ++j) {
                if (w[j] <= 0.0) continue;
                chosen = j;
                if (x < w[j]) break;
                x -= w[j];
            }
            q.free.push_back(static_cast<VarId>(chosen));
            total -= w[chosen];
            w[chosen] = 0.0;
        }
    }
    std::sort(q.free.begin(), q.free.end());
    return q;
}

Query QuerySampler::next(int r) {
    switch (scheme_) {
        case Scheme::uniform: return draw(r, false);
        case Scheme::skewed: return draw(r, true);
        case Scheme::mixture: {
            std::bernoulli_distribution uniform(lambda_);
            return draw(r, !uniform(rng_));
        }
        case Scheme::empirical: break;
    }
    throw ContractError("sampler cannot draw empirical queries");
}

std::vector<Query> sample_workload(const EliminationTree& tree, const WorkloadSpec& spec, const BayesianNetwork* net) {
    if (spec.scheme == Scheme::empirical) {
        if (!net) throw ContractError("empirical workloads need the network to resolve names");
        if (spec.log.empty()) throw ValidationError("empirical workload needs log=<path>");
        auto queries = parse_query_log(read_text_file(spec.log), *net);
        if (queries.empty()) throw ValidationError("query log " + spec.log + " is empty");
        return queries;
    }
    validate_workload_spec(spec, tree.variable_count());
    QuerySampler sampler(tree, spec.scheme, spec.seed, spec.lambda);
    std::vector<Query> out;
    for (int r : spec.sizes)
        for (int i = 0; i < spec.samples_per_size; ++i) out.push_back(sampler.next(r));
    return out;
}

UsefulnessProfile profile_for(const EliminationTree& tree, const WorkloadSpec& spec, const BayesianNetwork* net) {
    if (spec.scheme == Scheme::uniform) return base_usefulness_uniform(tree, spec);
    return base_usefulness_sampled(tree, sample_workload(tree, spec, net));
}

Query parse_query(std::string_view line, const BayesianNetwork& net, int line_number) {
    auto resolve = [&](std::string_view name) -> VarId {
        if (auto id = net.find(std::string(name))) return *id;
        if (!name.empty() && std::all_of(name.begin(), name.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
            const auto id = parse_integer(name, line_number, 1);
            if (id >= 0 && static_cast<std::size_t>(id) < net.size()) return static_cast<VarId>(id);
        }
        throw ParseError(ParseIssue::unknown_reference, "unknown variable '" + std::string(name) + "'", line_number, 1);
    };
    Query q;
    line = trim(line);
    std::string_view free_part, bound_part;
    const auto b = line.find("bound:");
    const auto f = line.find("free:");
    if (f == std::string_view::npos && b == std::string_view::npos)
        throw ParseError(ParseIssue::syntax, "query needs 'free:' and/or 'bound:'", line_number, 1);
    if (f != std::string_view::npos) {
        const auto end = (b != std::string_view::npos && b > f) ? b : line.size();
        free_part = line.substr(f + 5, end - f - 5);
    }
    if (b != std::string_view::npos) {
        const auto end = (f != std::string_view::npos && f > b) ? f : line.size();
        bound_part = line.substr(b + 6, end - b - 6);
    }
    for (auto name : split(free_part, ',')) q.free.push_back(resolve(name));
    for (auto item : split(bound_part, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string_view::npos) throw ParseError(ParseIssue::syntax, "bound item needs var=state", line_number, 1);
        const VarId v = resolve(trim(item.substr(0, eq)));
        const auto state = trim(item.substr(eq + 1));
        const auto& states = net.variable(v).states;
        auto it = std::find(states.begin(), states.end(), state);
        int s;
        if (it != states.end()) {
            s = static_cast<int>(it - states.begin());
        } else {
            s = static_cast<int>(parse_integer(state, line_number, 1));
        }
        if (s < 0 || s >= net.cardinality(v))
            throw ParseError(ParseIssue::unknown_reference, "state '" + std::string(state) + "' out of range", line_number, 1);
        q.bound[v] = s;
    }
    try {
        return normalized(net, std::move(q));
    } catch (const ContractError& e) {
        throw ParseError(ParseIssue::invalid_value, e.what(), line_number, 1);
    }
}

std::vector<Query> parse_query_log(std::string_view text, const BayesianNetwork& net) {
    std::vector<Query> out;
    for_each_line(text, [&](std::string_view line, int line_no) { out.push_back(parse_query(line, net, line_no)); });
    return out;
}

std::string format_query(const Query& q, const BayesianNetwork& net) {
    std::string out = "free: ";
    for (std::size_t i = 0; i < q.free.size(); ++i) out += (i ? "," : "") + net.variable(q.free[i]).name;
    out += " bound: ";
    bool first = true;
    for (const auto& [v, s] : q.bound) {
        out += (first ? "" : ",") + net.variable(v).name + "=" + net.variable(v).states[static_cast<std::size_t>(s)];
        first = false;
    }
    return out;
}

}  // namespace bnmat
