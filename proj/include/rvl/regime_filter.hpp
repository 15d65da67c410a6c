#pragma once

#include "rvl/model.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace rvl {

/// Regime probabilities psi_j = p(Z_t = j | info up to t-1) and the per-regime
/// component values at time t.
struct FilterState {
    std::size_t t = 0;
    std::vector<double> psi;
    std::vector<double> h1;
    std::vector<double> h2;
    std::vector<double> w;
    std::vector<double> h;
};

/// One-step-ahead forecast V(y_t | info t-1) and the predictive density at the realized y_t.
struct ForecastRecord {
    std::size_t t = 0;
    double variance = 0.0;
    double density = 0.0;
    double log_density = 0.0;
};

struct ForecastMetrics {
    double rmse = 0.0;
    double llv = 0.0;
};

/// log N(y; 0, h)
double log_normal_density(double y, double h) noexcept;

/**
 * @brief Regime-probability recursion evaluated in log space:
 *
 *     psi'_j = sum_k f_k psi_k p_kj / sum_k f_k psi_k
 *
 * where f_k = exp(log_densities[k]). Throws std::domain_error when every
 * weighted likelihood is zero or non-finite.
 */
std::vector<double> propagate_regime_probabilities(std::span<const double> psi,
                                                   std::span<const double> log_densities,
                                                   const TransitionMatrix& P);

/// psi from the stationary distribution; both components start at the sample
/// variance of the presample (or the from-scratch start when it has < 2 points).
FilterState init_filter(const ModelSpec& spec, std::span<const double> presample);

/// Same as above with an explicit per-regime starting variance.
FilterState init_filter_at(const ModelSpec& spec, std::span<const double> h_init);

/**
 * @brief Advances the filter from t-1 to t after observing y_{t-1}.
 *
 * @param y_sq_history squared returns y^2_0..y^2_{t-1}, oldest first; the last
 *        entry must be y_prev^2.
 */
FilterState filter_step(const FilterState& prev, double y_prev, const ModelSpec& spec,
                        std::span<const double> y_sq_history);

/// sum_k psi_k h_k
double forecast_variance(const FilterState& state) noexcept;

/// sum_j psi_j N(y; 0, h_j)
double predictive_density(const FilterState& state, double y) noexcept;
double log_predictive_density(const FilterState& state, double y) noexcept;

/**
 * @brief Streaming filter over a return series. Coefficient kernels are built
 *        once; every step reuses the squared-return history seen so far.
 */
class RegimeFilter {
public:
    RegimeFilter(ModelSpec spec, FilterState initial);

    [[nodiscard]] const FilterState& state() const noexcept { return state_; }
    [[nodiscard]] const ModelSpec& spec() const noexcept { return spec_; }

    /// Forecast for the current t, scored at the realized y_t.
    [[nodiscard]] ForecastRecord forecast(double y) const;

    /// Observes y_t and moves to t + 1.
    void advance(double y);

private:
    ModelSpec spec_;
    std::vector<FigarchLagKernel> kernels_;
    std::vector<double> y_sq_;
    FilterState state_;
};

struct FilterRun {
    std::vector<ForecastRecord> forecasts;
    std::vector<std::vector<double>> psi;  // psi[t][j]
};

/// Filters the whole series; forecast t uses y_0..y_{t-1} only.
FilterRun run_filter(const ModelSpec& spec, std::span<const double> y, const FilterState& initial);

/// RMSE of variance forecasts against squared returns and the summed log predictive density.
ForecastMetrics run_metrics(std::span<const ForecastRecord> forecasts, std::span<const double> realized);

}  // namespace rvl
