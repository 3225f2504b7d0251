#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace bnmat {

using VarId = std::int32_t;

// Process-wide guard on the number of entries any factor may hold.
inline constexpr std::uint64_t kDefaultEntryCap = std::uint64_t{1} << 31;
std::uint64_t entry_cap() noexcept;
void set_entry_cap(std::uint64_t cap) noexcept;

std::string format_scope(std::span<const VarId> scope);

// Dense table over an ascending scope; the last scope variable varies fastest.
class Factor {
public:
    Factor();  // scalar 1
    Factor(std::vector<VarId> scope, std::vector<int> cardinalities, std::vector<double> values);

    static Factor scalar(double value);
    static Factor constant(std::vector<VarId> scope, std::vector<int> cardinalities, double value);

    const std::vector<VarId>& scope() const noexcept { return scope_; }
    const std::vector<int>& cardinalities() const noexcept { return cards_; }
    std::span<const double> values() const noexcept { return values_; }
    std::span<double> mutable_values() noexcept { return values_; }

    std::size_t size() const noexcept { return values_.size(); }
    bool is_scalar() const noexcept { return scope_.empty(); }
    bool contains(VarId v) const noexcept;
    int position(VarId v) const noexcept;  // -1 when absent
    int cardinality_of(VarId v) const;
    double total_mass() const noexcept;

    // Entry for an assignment given in scope order.
    double at(std::span<const int> assignment) const;
    std::size_t index_of(std::span<const int> assignment) const;

    friend bool operator==(const Factor&, const Factor&) = default;

private:
    std::vector<VarId> scope_;
    std::vector<int> cards_;
    std::vector<double> values_;
};

// Entry count of a table over the given cardinalities; throws SizeLimitError above cap.
std::uint64_t checked_table_size(std::span<const VarId> scope, std::span<const int> cards,
                                 std::uint64_t cap);

Factor factor_join(const Factor& a, const Factor& b);
// Joins all factors in one pass over the result table.
Factor factor_join(std::span<const Factor* const> factors);
Factor factor_sum_out(const Factor& f, VarId var);
Factor factor_reduce(const Factor& f, VarId var, int state);

// Largest absolute entry difference; infinity when scopes differ.
double max_abs_diff(const Factor& a, const Factor& b);

}  // namespace bnmat
