#pragma once

#include <cstddef>
#include <deque>
#include <map>
#include <memory>
#include <span>
#include <utility>
#include <vector>

namespace rvl {

/// Default truncation length of the (1-B)^d expansion.
inline constexpr std::size_t kDefaultTruncation = 1000;

/**
 * @brief Coefficients g_1..g_K of the fractional-differencing expansion
 *        (1-B)^d = 1 - sum_i g_i B^i, truncated at K lags.
 *
 * For 0 < d < 1 the coefficients are positive, strictly decreasing and sum
 * to one over the infinite expansion, so the partial sum stays below one.
 */
class FracDiffCoeffs {
public:
    FracDiffCoeffs(double d, std::size_t K);

    [[nodiscard]] double d() const noexcept { return d_; }
    [[nodiscard]] std::size_t size() const noexcept { return coeffs_.size(); }

    /// g_i with 1-based lag index; zero beyond the truncation.
    [[nodiscard]] double operator[](std::size_t i) const noexcept {
        return (i >= 1 && i <= coeffs_.size()) ? coeffs_[i - 1] : 0.0;
    }

    /// g_1..g_K stored at offsets 0..K-1.
    [[nodiscard]] std::span<const double> values() const noexcept { return coeffs_; }

    /// sum_{i=1..K} g_i
    [[nodiscard]] double partial_sum() const noexcept { return partial_sum_; }

private:
    double d_;
    std::vector<double> coeffs_;
    double partial_sum_;
};

/// g_1 = d, g_i = g_{i-1} (i-1-d) / i. Throws std::domain_error for d outside (0,1) or K < 1.
FracDiffCoeffs compute_coeffs(double d, std::size_t K);

/// Mass discarded by truncation: 1 - sum_{i<=K} g_i.
double tail_weight(const FracDiffCoeffs& coeffs) noexcept;

/**
 * @brief Bounded memo of coefficient vectors keyed by (d, K).
 *
 * Entries are immutable and shared. Not synchronized: each sampler chain owns
 * its own cache.
 */
class FracDiffCache {
public:
    explicit FracDiffCache(std::size_t capacity = 256) : capacity_(capacity) {}

    std::shared_ptr<const FracDiffCoeffs> get(double d, std::size_t K);

    [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }

private:
    using Key = std::pair<double, std::size_t>;
    std::size_t capacity_;
    std::map<Key, std::shared_ptr<const FracDiffCoeffs>> entries_;
    std::deque<Key> order_;
};

}  // namespace rvl
