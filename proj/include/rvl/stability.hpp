#pragma once

#include "rvl/fracdiff.hpp"
#include "rvl/model.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace rvl {

/// Default number of explicit lag terms in the f-block series.
inline constexpr std::size_t kDefaultLagCap = 500;

/// Pi with Pi' P = Pi', sum Pi = 1. Throws std::domain_error when the chain is
/// not irreducible and aperiodic.
std::vector<double> stationary_distribution(const TransitionMatrix& P);

/// p(z_{t-lag} = r | z_t = s) = (pi_r / pi_s) (P^lag)_{r,s}, states 0-based.
double lag_probability(const TransitionMatrix& P, std::span<const double> pi, std::size_t lag,
                       std::size_t r, std::size_t s);

/// The 4m x 4m second-moment recursion matrix and its 4m intercept vector.
struct MomentSystem {
    Eigen::MatrixXd Q;
    Eigen::VectorXd Lambda;
};

/**
 * @brief Assembles the block matrix Q and the vector Lambda of the
 *        second-moment recursion H~_t <= Lambda + Q H~_{t-1}.
 *
 * Block rows are [delta P', a1 P', b1 P', f P'], [a2 P', a1 P', 0, 0],
 * [c P', 0, b1 P', f P'] and [I, 0, 0, 0], with P' the transposed transition
 * matrix. The lag polynomial inside f is evaluated at B = 1:
 *
 *     f_{rj} = sum_{i>=0} (g_{i+2,j} - b_{2j} g_{i+1,j}) p(z_{t-2-i} = r | z_t = j).
 *
 * Terms i <= lag_cap use exact lag probabilities; the remainder uses their
 * limit pi_r together with the closed-form coefficient tail (sum_i g_i = 1),
 * so the series is summed to infinity rather than truncated.
 *
 * @param coeffs one coefficient vector per regime (d_j)
 */
MomentSystem build_Q(const ModelSpec& spec, const std::vector<FracDiffCoeffs>& coeffs,
                     std::size_t lag_cap = kDefaultLagCap);

/// Largest eigenvalue modulus from a dense eigen-decomposition.
double spectral_radius(const Eigen::MatrixXd& M);

/// Power-iteration estimate of the spectral radius (Gelfand's formula on
/// normalized iterates); empty when the estimate has not settled within max_iter.
std::optional<double> spectral_radius_power(const Eigen::MatrixXd& M, int max_iter = 20000,
                                            double tol = 1e-12);

struct StabilityReport {
    double rho = 0.0;
    bool stable = false;
    std::optional<double> bound;  // Pi' [(I-Q)^{-1} Lambda]_{1..m}, only when stable
    Eigen::MatrixXd Q;
    Eigen::VectorXd Lambda;
    std::vector<double> pi;
};

/// Second-moment stability check: stable iff rho(Q) < 1.
StabilityReport stability_report(const ModelSpec& spec, std::size_t lag_cap = kDefaultLagCap);

}  // namespace rvl
