#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "bnmat/network.hpp"

namespace bnmat {

struct NetworkStats {
    std::size_t node_count = 0;
    std::size_t edge_count = 0;
    std::size_t parameter_count = 0;  // total CPT entries
    double avg_degree = 0.0;          // 2 * edges / nodes
};

NetworkStats network_stats(const BayesianNetwork& net);

// Rows whose sum is within this distance of 1 are rescaled on import; public
// BIF files print probabilities with a handful of digits.
inline constexpr double kBifRenormalizeTolerance = 1e-6;

BayesianNetwork parse_bif(std::string_view text);

std::string serialize_native(const BayesianNetwork& net);
BayesianNetwork parse_native(std::string_view text);

// Reads plain or gzip-compressed files.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view text);

// Picks the parser from the first keyword of the document.
BayesianNetwork parse_network(std::string_view text);
BayesianNetwork load_network(const std::string& path);

// Shortest text that reads back to the same double.
std::string format_double(double v);
double parse_double(std::string_view token, int line = 0, int column = 0);
long long parse_integer(std::string_view token, int line = 0, int column = 0);

// One-line factor block: `factor scope=<ids> card=<cards> : <values...>`.
std::string format_factor(const Factor& f);
Factor parse_factor_line(std::string_view line, int line_number = 0);

}  // namespace bnmat
