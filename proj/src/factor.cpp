#include "bnmat/factor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>

#include "bnmat/error.hpp"

namespace bnmat {

namespace {
std::atomic<std::uint64_t> g_entry_cap{kDefaultEntryCap};
}

std::uint64_t entry_cap() noexcept { return g_entry_cap.load(std::memory_order_relaxed); }
void set_entry_cap(std::uint64_t cap) noexcept { g_entry_cap.store(cap, std::memory_order_relaxed); }

std::string format_scope(std::span<const VarId> scope) {
    std::string out = "{";
    for (std::size_t i = 0; i < scope.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(scope[i]);
    }
    return out + "}";
}

std::uint64_t checked_table_size(std::span<const VarId> scope, std::span<const int> cards,
                                 std::uint64_t cap) {
    std::uint64_t size = 1;
    for (int c : cards) {
        if (c < 1) throw ContractError("cardinality must be positive");
        if (size > cap / static_cast<std::uint64_t>(c))
            throw SizeLimitError("factor over " + format_scope(scope) + " exceeds entry cap " +
                                 std::to_string(cap));
        size *= static_cast<std::uint64_t>(c);
    }
    if (size > cap)
        throw SizeLimitError("factor over " + format_scope(scope) + " exceeds entry cap " +
                             std::to_string(cap));
    return size;
}

Factor::Factor() : values_{1.0} {}

Factor::Factor(std::vector<VarId> scope, std::vector<int> cardinalities, std::vector<double> values)
    : scope_(std::move(scope)), cards_(std::move(cardinalities)), values_(std::move(values)) {
    if (scope_.size() != cards_.size()) throw ContractError("scope and cardinality lengths differ");
    for (std::size_t i = 1; i < scope_.size(); ++i)
        if (scope_[i - 1] >= scope_[i])
            throw ContractError("factor scope must be strictly ascending: " + format_scope(scope_));
    // Explicit tables already exist in memory, so only overflow is guarded here.
    const auto expected = checked_table_size(scope_, cards_, ~std::uint64_t{0});
    if (values_.size() != expected)
        throw ContractError("factor over " + format_scope(scope_) + " expects " +
                            std::to_string(expected) + " values, got " +
                            std::to_string(values_.size()));
    for (double v : values_)
        if (!(v >= 0.0)) throw ContractError("factor entries must be non-negative");
}

Factor Factor::scalar(double value) {
    return Factor({}, {}, {value});
}

Factor Factor::constant(std::vector<VarId> scope, std::vector<int> cardinalities, double value) {
    const auto n = checked_table_size(scope, cardinalities, entry_cap());
    return Factor(std::move(scope), std::move(cardinalities), std::vector<double>(n, value));
}

bool Factor::contains(VarId v) const noexcept { return position(v) >= 0; }

int Factor::position(VarId v) const noexcept {
    auto it = std::lower_bound(scope_.begin(), scope_.end(), v);
    if (it == scope_.end() || *it != v) return -1;
    return static_cast<int>(it - scope_.begin());
}

int Factor::cardinality_of(VarId v) const {
    const int p = position(v);
    if (p < 0) throw ContractError("variable " + std::to_string(v) + " not in factor scope");
    return cards_[static_cast<std::size_t>(p)];
}

double Factor::total_mass() const noexcept {
    return std::accumulate(values_.begin(), values_.end(), 0.0);
}

std::size_t Factor::index_of(std::span<const int> assignment) const {
    if (assignment.size() != scope_.size()) throw ContractError("assignment length mismatch");
    std::size_t idx = 0;
    for (std::size_t i = 0; i < scope_.size(); ++i) {
        if (assignment[i] < 0 || assignment[i] >= cards_[i])
            throw ContractError("assignment state out of range");
        idx = idx * static_cast<std::size_t>(cards_[i]) + static_cast<std::size_t>(assignment[i]);
    }
    return idx;
}

double Factor::at(std::span<const int> assignment) const { return values_[index_of(assignment)]; }

Factor factor_join(const Factor& a, const Factor& b) {
    const Factor* both[] = {&a, &b};
    return factor_join(std::span<const Factor* const>(both));
}

Factor factor_join(std::span<const Factor* const> factors) {
    if (factors.empty()) return Factor();
    if (factors.size() == 1) return *factors[0];

    std::vector<VarId> scope;
    std::vector<int> cards;
    for (const Factor* f : factors) {
        for (std::size_t i = 0; i < f->scope().size(); ++i) {
            const VarId v = f->scope()[i];
            auto it = std::lower_bound(scope.begin(), scope.end(), v);
            const auto pos = it - scope.begin();
            if (it != scope.end() && *it == v) {
                if (cards[static_cast<std::size_t>(pos)] != f->cardinalities()[i])
                    throw ContractError("cardinality mismatch for variable " + std::to_string(v));
                continue;
            }
            scope.insert(it, v);
            cards.insert(cards.begin() + pos, f->cardinalities()[i]);
        }
    }
    const auto total = checked_table_size(scope, cards, entry_cap());
    if (scope.empty()) {
        double p = 1.0;
        for (const Factor* f : factors) p *= f->values()[0];
        return Factor::scalar(p);
    }
    const std::size_t dims = scope.size();
    const std::size_t k = factors.size();

    // strides[j * dims + d]: step in input j when output digit d increments.
    std::vector<std::size_t> strides(k * dims, 0);
    for (std::size_t j = 0; j < k; ++j) {
        const Factor& f = *factors[j];
        std::size_t stride = 1;
        for (std::size_t i = f.scope().size(); i-- > 0;) {
            const auto d = static_cast<std::size_t>(
                std::lower_bound(scope.begin(), scope.end(), f.scope()[i]) - scope.begin());
            strides[j * dims + d] = stride;
            stride *= static_cast<std::size_t>(f.cardinalities()[i]);
        }
    }

    std::vector<double> out(static_cast<std::size_t>(total));
    std::vector<int> digit(dims, 0);
    std::vector<std::size_t> offset(k, 0);
    std::vector<const double*> data(k);
    for (std::size_t j = 0; j < k; ++j) data[j] = factors[j]->values().data();

    // The last output digit runs in a tight loop. Inputs that do not vary along it
    // contribute one product per run.
    const std::size_t last = dims - 1;
    const auto run_length = static_cast<std::size_t>(cards[last]);
    std::vector<std::size_t> varying;
    std::vector<std::size_t> fixed;
    for (std::size_t j = 0; j < k; ++j) (strides[j * dims + last] ? varying : fixed).push_back(j);

    for (std::size_t base = 0; base < out.size(); base += run_length) {
        double constant = 1.0;
        for (std::size_t j : fixed) constant *= data[j][offset[j]];
        double* dst = out.data() + base;
        std::fill_n(dst, run_length, constant);
        for (std::size_t j : varying) {
            const double* src = data[j] + offset[j];
            const std::size_t step = strides[j * dims + last];
            for (std::size_t i = 0; i < run_length; ++i) dst[i] *= src[i * step];
        }
        for (std::size_t d = last; d-- > 0;) {
            if (++digit[d] < cards[d]) {
                for (std::size_t j = 0; j < k; ++j) offset[j] += strides[j * dims + d];
                break;
            }
            digit[d] = 0;
            const auto back = static_cast<std::size_t>(cards[d] - 1);
            for (std::size_t j = 0; j < k; ++j) offset[j] -= back * strides[j * dims + d];
        }
    }
    return Factor(std::move(scope), std::move(cards), std::move(out));
}

namespace {

struct Split {
    std::size_t outer;
    std::size_t card;
    std::size_t inner;
};

Split split_at(const Factor& f, int pos) {
    Split s{1, static_cast<std::size_t>(f.cardinalities()[static_cast<std::size_t>(pos)]), 1};
    for (int i = 0; i < pos; ++i) s.outer *= static_cast<std::size_t>(f.cardinalities()[static_cast<std::size_t>(i)]);
    for (std::size_t i = static_cast<std::size_t>(pos) + 1; i < f.scope().size(); ++i)
        s.inner *= static_cast<std::size_t>(f.cardinalities()[i]);
    return s;
}

std::pair<std::vector<VarId>, std::vector<int>> drop(const Factor& f, int pos) {
    auto scope = f.scope();
    auto cards = f.cardinalities();
    scope.erase(scope.begin() + pos);
    cards.erase(cards.begin() + pos);
    return {std::move(scope), std::move(cards)};
}

}  // namespace

Factor factor_sum_out(const Factor& f, VarId var) {
    const int pos = f.position(var);
    if (pos < 0)
        throw ContractError("sum_out: variable " + std::to_string(var) + " not in scope " +
                            format_scope(f.scope()));
    const Split s = split_at(f, pos);
    std::vector<double> out(s.outer * s.inner, 0.0);
    const auto in = f.values();
    for (std::size_t o = 0; o < s.outer; ++o)
        for (std::size_t c = 0; c < s.card; ++c) {
            const double* src = in.data() + (o * s.card + c) * s.inner;
            double* dst = out.data() + o * s.inner;
            for (std::size_t i = 0; i < s.inner; ++i) dst[i] += src[i];
        }
    auto [scope, cards] = drop(f, pos);
    return Factor(std::move(scope), std::move(cards), std::move(out));
}

Factor factor_reduce(const Factor& f, VarId var, int state) {
    const int pos = f.position(var);
    if (pos < 0)
        throw ContractError("reduce: variable " + std::to_string(var) + " not in scope " +
                            format_scope(f.scope()));
    const Split s = split_at(f, pos);
    if (state < 0 || static_cast<std::size_t>(state) >= s.card)
        throw ContractError("reduce: state " + std::to_string(state) + " out of range for variable " +
                            std::to_string(var));
    std::vector<double> out(s.outer * s.inner);
    const auto in = f.values();
    for (std::size_t o = 0; o < s.outer; ++o)
        std::copy_n(in.data() + (o * s.card + static_cast<std::size_t>(state)) * s.inner, s.inner,
                    out.data() + o * s.inner);
    auto [scope, cards] = drop(f, pos);
    return Factor(std::move(scope), std::move(cards), std::move(out));
}

double max_abs_diff(const Factor& a, const Factor& b) {
    if (a.scope() != b.scope() || a.cardinalities() != b.cardinalities())
        return std::numeric_limits<double>::infinity();
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        worst = std::max(worst, std::abs(a.values()[i] - b.values()[i]));
    return worst;
}

}  // namespace bnmat
