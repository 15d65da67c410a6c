#include "rvl/fracdiff.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace rvl {

FracDiffCoeffs::FracDiffCoeffs(double d, std::size_t K) : d_(d), partial_sum_(0.0) {
    if (!(d > 0.0 && d < 1.0)) {
        throw std::domain_error("fractional-differencing exponent must lie in (0,1), got " +
                                std::to_string(d));
    }
    if (K < 1) {
        throw std::domain_error("truncation length must be at least 1");
    }
    coeffs_.resize(K);
    coeffs_[0] = d;
    for (std::size_t i = 2; i <= K; ++i) {
        const double di = static_cast<double>(i);
        coeffs_[i - 1] = coeffs_[i - 2] * (di - 1.0 - d) / di;
    }
    for (double g : coeffs_) {
        partial_sum_ += g;
    }
}

FracDiffCoeffs compute_coeffs(double d, std::size_t K) { return FracDiffCoeffs(d, K); }

double tail_weight(const FracDiffCoeffs& coeffs) noexcept {
    return 1.0 - coeffs.partial_sum();
}

std::shared_ptr<const FracDiffCoeffs> FracDiffCache::get(double d, std::size_t K) {
    const Key key{d, K};
    if (auto it = entries_.find(key); it != entries_.end()) {
        return it->second;
    }
    auto coeffs = std::make_shared<const FracDiffCoeffs>(d, K);
    if (capacity_ > 0 && entries_.size() >= capacity_) {
        entries_.erase(order_.front());
        order_.pop_front();
    }
    entries_.emplace(key, coeffs);
    order_.push_back(key);
    return coeffs;
}

}  // namespace rvl
