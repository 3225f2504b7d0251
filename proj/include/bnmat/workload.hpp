#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "bnmat/elimination.hpp"

namespace bnmat {

enum class Scheme : std::uint8_t { uniform, skewed, empirical, mixture };
std::string to_string(Scheme s);

struct WorkloadSpec {
    Scheme scheme = Scheme::uniform;
    std::vector<int> sizes{1, 2, 3, 4, 5};
    int samples_per_size = 50;
    std::uint64_t seed = 1;
    double lambda = 0.5;  // share of uniform queries in a mixture
    std::string log;      // query-log path for the empirical scheme
};

// key=value lines: scheme, sizes, samples, seed, lambda, log. `#` starts a comment.
WorkloadSpec parse_workload_spec(std::string_view text);
std::string format_workload_spec(const WorkloadSpec& spec);
void validate_workload_spec(const WorkloadSpec& spec, std::size_t variable_count);

// Per-node probability that the node alone would serve a random query.
struct UsefulnessProfile {
    std::vector<double> base;

    double at(NodeId u) const { return u == kNoNode ? 0.0 : base.at(static_cast<std::size_t>(u)); }
};

// Throws InvariantError when a selectable node is less useful than a selectable ancestor.
void check_profile(const EliminationTree& tree, const UsefulnessProfile& profile);

UsefulnessProfile base_usefulness_uniform(const EliminationTree& tree, const WorkloadSpec& spec);
UsefulnessProfile base_usefulness_sampled(const EliminationTree& tree, const std::vector<Query>& sample);

// Probability that u is useful given that v (an ancestor, or kNoNode for none) is selected.
double usefulness_pair(NodeId u, NodeId v, const UsefulnessProfile& profile);

// Level of each variable's elimination node: 1 for the deepest internal node, growing towards the root.
std::vector<int> variable_levels(const EliminationTree& tree);

class QuerySampler {
public:
    QuerySampler(const EliminationTree& tree, Scheme scheme, std::uint64_t seed, double lambda = 0.5);

    // Query with r free variables and everything else summed out.
    Query next(int r);
    const std::vector<double>& weights() const noexcept { return skew_weights_; }

private:
    Query draw(int r, bool skewed);

    std::size_t n_;
    Scheme scheme_;
    double lambda_;
    std::vector<double> skew_weights_;
    std::mt19937_64 rng_;
};

// samples_per_size queries for every size, in size order. Empirical specs read their log.
std::vector<Query> sample_workload(const EliminationTree& tree, const WorkloadSpec& spec,
                                   const BayesianNetwork* net = nullptr);

// Query log lines: `free: a,b bound: c=2` with variable and state names (ids accepted too).
std::vector<Query> parse_query_log(std::string_view text, const BayesianNetwork& net);
Query parse_query(std::string_view line, const BayesianNetwork& net, int line_number = 0);
std::string format_query(const Query& q, const BayesianNetwork& net);

// Profile from a query sample, or the analytic value for the uniform scheme.
UsefulnessProfile profile_for(const EliminationTree& tree, const WorkloadSpec& spec,
                              const BayesianNetwork* net = nullptr);

}  // namespace bnmat
