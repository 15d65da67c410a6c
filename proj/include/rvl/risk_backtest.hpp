#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace rvl {

inline constexpr double kChi2Crit1 = 3.84;  // 5% level, one degree of freedom
inline constexpr double kChi2Crit2 = 5.99;  // 5% level, two degrees of freedom

/// Minimum in-sample size for the empirical quantile.
inline constexpr std::size_t kMinQuantileSample = 100;

struct VarSeries {
    double rho = 0.05;
    double quantile = 0.0;
    std::vector<double> var;
};

struct ExceptionSeries {
    std::vector<int> q;
    std::size_t T = 0;
    std::size_t n = 0;
    std::size_t n00 = 0;
    std::size_t n01 = 0;
    std::size_t n10 = 0;
    std::size_t n11 = 0;
};

struct BacktestReport {
    double rho = 0.0;
    std::size_t T = 0;
    double expected = 0.0;  // rho * T
    std::size_t n = 0;
    double lr_uc = 0.0;         // over all T observations
    double lr_uc_shared = 0.0;  // over the T-1 transition window
    double lr_ind = 0.0;
    double lr_cc = 0.0;  // = lr_uc_shared + lr_ind
    bool pass_uc = false;
    bool pass_ind = false;
    bool pass_cc = false;
    ExceptionSeries exceptions;
};

/**
 * @brief Empirical rho-quantile of y_t / sqrt(h_t).
 *
 * Uses linear interpolation between order statistics at position
 * (n - 1) * rho (the "type 7" convention). Throws std::invalid_argument for
 * rho outside (0, 0.5), misaligned input, non-positive variances or fewer than
 * kMinQuantileSample points (use normal_quantile() instead for small samples).
 */
double standardized_quantile(std::span<const double> returns, std::span<const double> variances, double rho);

/// Standard normal inverse CDF.
double normal_quantile(double rho);

/// quantile * sigma
double var_forecast(double sigma, double quantile);

/// VaR series from variance forecasts.
VarSeries make_var_series(std::span<const double> variances, double rho, double quantile);

ExceptionSeries exception_series(std::span<const double> realized, std::span<const double> var);

/// Unconditional coverage LR with 0 log 0 = 0.
double kupiec_uc(std::size_t n, std::size_t T, double rho);

/// Independence LR over transition counts; n and T are recomputed from the counts.
double christoffersen_ind(std::size_t n00, std::size_t n01, std::size_t n10, std::size_t n11);

/// Conditional coverage LR; n and T must come from the same window as the counts.
double christoffersen_cc(std::size_t n, std::size_t T, double rho, std::size_t n00, std::size_t n01,
                         std::size_t n10, std::size_t n11);

BacktestReport backtest(std::span<const double> realized, const VarSeries& var);

}  // namespace rvl
