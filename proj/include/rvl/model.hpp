#pragma once

#include "rvl/fracdiff.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rvl {

/**
 * @brief Parameters of one regime: a GARCH(1,1) component (a0, a1, a2), a
 *        FIGARCH(1,d,1) component (b0, b1, b2, d) and the smoothing parameter
 *        gamma of the logistic weight between them.
 */
struct RegimeParams {
    double a0 = 0.0;     // GARCH intercept
    double a1 = 0.0;     // GARCH persistence (weight on h1_{t-1})
    double a2 = 0.0;     // ARCH coefficient (weight on y^2_{t-1})
    double b0 = 0.0;     // FIGARCH intercept
    double b1 = 0.0;     // FIGARCH weight on h2_{t-1}
    double b2 = 0.0;     // FIGARCH MA coefficient
    double d = 0.5;      // memory exponent
    double gamma = 1.0;  // logistic smoothing parameter

    /// Requires a0, a1, a2, b0, gamma > 0 and 0 <= b2 <= b1 <= d < 1.
    /// Throws std::invalid_argument naming the violated constraint.
    void validate() const;

    bool operator==(const RegimeParams&) const = default;
};

/// Row-stochastic m x m matrix with p(r, s) = P(Z_t = s | Z_{t-1} = r).
class TransitionMatrix {
public:
    explicit TransitionMatrix(Eigen::MatrixXd p);

    static TransitionMatrix single() { return TransitionMatrix(Eigen::MatrixXd::Ones(1, 1)); }
    static TransitionMatrix two_state(double p11, double p22);

    [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(p_.rows()); }
    [[nodiscard]] double operator()(std::size_t r, std::size_t s) const {
        return p_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(s));
    }
    [[nodiscard]] const Eigen::MatrixXd& matrix() const noexcept { return p_; }

    /// True when some power of P (up to the Wielandt bound) is strictly positive.
    [[nodiscard]] bool is_primitive() const;

private:
    Eigen::MatrixXd p_;
};

enum class WeightKind { logistic, fixed };

/// Logistic weights (smooth transition) or one fixed weight (classic HYGARCH).
struct WeightMode {
    WeightKind kind = WeightKind::logistic;
    double fixed_w = 0.0;

    static WeightMode logistic() { return {WeightKind::logistic, 0.0}; }
    static WeightMode fixed(double w) { return {WeightKind::fixed, w}; }
};

/// Model family selector: MSST-HYGARCH (m >= 1 logistic), ST-HYGARCH (m = 1
/// logistic) or HYGARCH (m = 1 fixed weight).
enum class ModelFamily { msst, st, hygarch };

ModelFamily parse_family(std::string_view name);
std::string_view family_name(ModelFamily family) noexcept;

struct ModelSpec {
    std::vector<RegimeParams> regimes;
    TransitionMatrix transition = TransitionMatrix::single();
    WeightMode weight = WeightMode::logistic();
    std::size_t trunc_K = kDefaultTruncation;

    [[nodiscard]] std::size_t m() const noexcept { return regimes.size(); }

    /// Checks every regime, the dimensions of the transition matrix, the
    /// fixed-weight restrictions and the identification ordering (ascending a0).
    void validate() const;
};

/// Permutation sorting regimes by ascending a0 (stable).
std::vector<std::size_t> intercept_order(const std::vector<RegimeParams>& regimes);

/// Relabels regimes (and the transition matrix) so that new label k is old label perm[k].
ModelSpec permute_regimes(const ModelSpec& spec, const std::vector<std::size_t>& perm);

/// Component paths of one regime over a sample.
struct RegimePath {
    std::vector<double> h1;  // GARCH component
    std::vector<double> h2;  // FIGARCH component
    std::vector<double> w;   // weight on the FIGARCH component
    std::vector<double> h;   // (1-w) h1 + w h2
};

/// Per-regime component paths; regimes[j].h[t] is h_{t,j}.
struct VariancePath {
    std::vector<RegimePath> regimes;

    [[nodiscard]] std::size_t length() const noexcept {
        return regimes.empty() ? 0 : regimes.front().h.size();
    }
};

/// exp(-gamma y)/(1 + exp(-gamma y)), evaluated without overflow.
inline double logistic_weight(double gamma, double y_prev) noexcept {
    const double x = -gamma * y_prev;
    if (x <= 0.0) {
        const double e = std::exp(x);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(-x));
}

inline double mode_weight(const WeightMode& mode, double gamma, double y_prev) noexcept {
    return mode.kind == WeightKind::fixed ? mode.fixed_w : logistic_weight(gamma, y_prev);
}

/// h1_t = a0 + a1 h1_{t-1} + a2 y^2_{t-1}
inline double garch_step(const RegimeParams& p, double h1_prev, double y_prev_sq) noexcept {
    return p.a0 + p.a1 * h1_prev + p.a2 * y_prev_sq;
}

/// h_t = (1-w) h1_t + w h2_t
inline double regime_variance(double h1, double h2, double w) noexcept {
    return (1.0 - w) * h1 + w * h2;
}

/**
 * @brief Lag weights of the expanded FIGARCH recursion for one (d, b2):
 *        c_i = g_{i+2} - b2 g_{i+1}, i = 0..K-2.
 *
 * Construction throws std::domain_error when any c_i is negative, i.e. when the
 * (d, b2) pair cannot keep the conditional variance positive.
 */
class FigarchLagKernel {
public:
    FigarchLagKernel(const FracDiffCoeffs& g, double b2);

    [[nodiscard]] double g1() const noexcept { return g1_; }
    [[nodiscard]] std::span<const double> weights() const noexcept { return weights_; }

    /// sum_i c_i y^2_{t-2-i} over the available history; y_sq holds y^2_0.. oldest first.
    [[nodiscard]] double lag_sum(std::span<const double> y_sq, std::size_t t) const noexcept {
        if (t < 2) {
            return 0.0;
        }
        const std::size_t n = std::min(t - 1, weights_.size());
        const double* newest = y_sq.data() + (t - 2);
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            acc += weights_[i] * *(newest - i);
        }
        return acc;
    }

    /// Lag sums for every t = 0..T-1.
    [[nodiscard]] std::vector<double> lag_sums(std::span<const double> y_sq) const;

private:
    double g1_;
    std::vector<double> weights_;
};

/// h2_t = b0 + b1 h2_{t-1} + (b2 - b1 + g1) y^2_{t-1} + lag_sum
inline double figarch_combine(const RegimeParams& p, double g1, double h2_prev, double y_prev_sq,
                              double lag_sum) noexcept {
    return p.b0 + p.b1 * h2_prev + (p.b2 - p.b1 + g1) * y_prev_sq + lag_sum;
}

/**
 * @brief One FIGARCH(1,d,1) update in expanded form,
 *        h2_t = b0 + b1 h2_{t-1} + (b2-b1+g1) y^2_{t-1} + sum_i (g_{i+2} - b2 g_{i+1}) y^2_{t-2-i}.
 *
 * @param y_sq_history squared returns newest first (y^2_{t-1}, y^2_{t-2}, ...);
 *        lags beyond the history are zero. Must be non-empty.
 */
double figarch_step(const RegimeParams& p, const FracDiffCoeffs& g, double h2_prev,
                    std::span<const double> y_sq_history);

/// a0/(1-a1-a2) when a1 + a2 < 1, else 1.
double unconditional_start(const RegimeParams& p) noexcept;

/// Sample variance of a presample window (falls back to 1 with fewer than two points
/// or zero dispersion).
double presample_variance(std::span<const double> y) noexcept;

/**
 * @brief Evaluates the component recursions of one regime along a return series.
 *
 * At t = 0 both components start at h_init and the weight uses y_{-1} = 0.
 */
RegimePath regime_path(const RegimeParams& p, const FracDiffCoeffs& g, const WeightMode& mode,
                       std::span<const double> y, double h_init);

/// Paths for every regime of a spec, all started at h_init.
VariancePath variance_path(const ModelSpec& spec, std::span<const double> y, double h_init);

struct SimulatedPath {
    std::vector<double> returns;
    std::vector<int> states;  // 0-based regime labels
    VariancePath variances;
};

/**
 * @brief Simulates y_t = sqrt(h_{t,Z_t}) eps_t with Z a Markov chain started from
 *        its stationary distribution and eps_t iid N(0,1).
 *
 * The first burn_in of T draws are discarded. Each regime starts from
 * unconditional_start() with no prior shocks. Deterministic in seed.
 */
SimulatedPath simulate_path(const ModelSpec& spec, std::size_t T, std::size_t burn_in,
                            std::uint64_t seed);

}  // namespace rvl
