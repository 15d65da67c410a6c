#include "rvl/stability.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rvl {

std::vector<double> stationary_distribution(const TransitionMatrix& P) {
    const auto m = static_cast<Eigen::Index>(P.size());
    if (m == 1) {
        return {1.0};
    }
    if (!P.is_primitive()) {
        throw std::domain_error("transition matrix is not irreducible and aperiodic; "
                                "no unique stationary distribution");
    }
    Eigen::MatrixXd A = P.matrix().transpose() - Eigen::MatrixXd::Identity(m, m);
    A.row(m - 1).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
    rhs(m - 1) = 1.0;
    Eigen::VectorXd pi = A.fullPivLu().solve(rhs);
    pi = pi.cwiseMax(0.0);
    pi /= pi.sum();
    return {pi.data(), pi.data() + m};
}

double lag_probability(const TransitionMatrix& P, std::span<const double> pi, std::size_t lag,
                       std::size_t r, std::size_t s) {
    if (lag < 1) {
        throw std::invalid_argument("lag must be at least 1");
    }
    if (!(pi[s] > 0.0)) {
        throw std::domain_error("conditioning state has zero stationary probability");
    }
    Eigen::MatrixXd power = P.matrix();
    for (std::size_t i = 1; i < lag; ++i) {
        power = power * P.matrix();
    }
    return pi[r] / pi[s] * power(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(s));
}

MomentSystem build_Q(const ModelSpec& spec, const std::vector<FracDiffCoeffs>& coeffs,
                     std::size_t lag_cap) {
    spec.validate();
    const std::size_t m = spec.m();
    if (coeffs.size() != m) {
        throw std::invalid_argument("need one coefficient vector per regime");
    }
    const auto M = static_cast<Eigen::Index>(m);
    const auto pi = stationary_distribution(spec.transition);
    const Eigen::MatrixXd& P = spec.transition.matrix();
    const Eigen::MatrixXd Pt = P.transpose();

    Eigen::VectorXd delta(M), a1(M), a2(M), b1(M), c(M);
    for (Eigen::Index j = 0; j < M; ++j) {
        const RegimeParams& p = spec.regimes[static_cast<std::size_t>(j)];
        const double g1 = coeffs[static_cast<std::size_t>(j)][1];
        c(j) = p.b2 - p.b1 + g1;
        delta(j) = std::abs(c(j) - p.a2);
        a1(j) = p.a1;
        a2(j) = p.a2;
        b1(j) = p.b1;
    }

    // f(r, j): explicit lag terms while i <= lag_cap and g_{i+2} is available,
    // then pi_r times the exact coefficient tail.
    Eigen::MatrixXd f = Eigen::MatrixXd::Zero(M, M);
    Eigen::MatrixXd power = P * P;  // P^{i+2} at i = 0
    std::size_t max_explicit = lag_cap + 1;
    for (const auto& g : coeffs) {
        max_explicit = std::min(max_explicit, g.size() >= 2 ? g.size() - 1 : std::size_t{0});
    }
    for (std::size_t i = 0; i < max_explicit; ++i) {
        for (Eigen::Index j = 0; j < M; ++j) {
            const auto& g = coeffs[static_cast<std::size_t>(j)];
            const double b2 = spec.regimes[static_cast<std::size_t>(j)].b2;
            const double weight = g[i + 2] - b2 * g[i + 1];
            for (Eigen::Index r = 0; r < M; ++r) {
                f(r, j) += weight * pi[static_cast<std::size_t>(r)] / pi[static_cast<std::size_t>(j)] * power(r, j);
            }
        }
        power = power * P;
    }
    for (Eigen::Index j = 0; j < M; ++j) {
        const auto& g = coeffs[static_cast<std::size_t>(j)];
        const double b2 = spec.regimes[static_cast<std::size_t>(j)].b2;
        // sum_{k >= max_explicit + 2} g_k and sum_{k >= max_explicit + 1} g_k
        double head = 0.0;
        for (std::size_t k = 1; k <= max_explicit; ++k) {
            head += g[k];
        }
        const double tail_from_next = 1.0 - head;                       // k >= max_explicit + 1
        const double tail_from_after = tail_from_next - g[max_explicit + 1];  // k >= max_explicit + 2
        const double tail = tail_from_after - b2 * tail_from_next;
        for (Eigen::Index r = 0; r < M; ++r) {
            f(r, j) += pi[static_cast<std::size_t>(r)] * tail;
        }
    }

    const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(M, M);
    const Eigen::MatrixXd ident = Eigen::MatrixXd::Identity(M, M);
    const Eigen::MatrixXd fP = f * Pt;

    MomentSystem out;
    out.Q.resize(4 * M, 4 * M);
    out.Q << delta.asDiagonal() * Pt, a1.asDiagonal() * Pt, b1.asDiagonal() * Pt, fP,
             a2.asDiagonal() * Pt,    a1.asDiagonal() * Pt, zero,                 zero,
             c.asDiagonal() * Pt,     zero,                 b1.asDiagonal() * Pt, fP,
             ident,                   zero,                 zero,                 zero;

    out.Lambda = Eigen::VectorXd::Zero(4 * M);
    for (Eigen::Index j = 0; j < M; ++j) {
        const RegimeParams& p = spec.regimes[static_cast<std::size_t>(j)];
        out.Lambda(j) = p.a0 + std::abs(p.b0 - p.a0);
        out.Lambda(M + j) = p.a0;
        out.Lambda(2 * M + j) = p.b0;
    }
    return out;
}

double spectral_radius(const Eigen::MatrixXd& M) {
    if (M.rows() != M.cols() || M.rows() == 0) {
        throw std::invalid_argument("spectral radius needs a non-empty square matrix");
    }
    if (!M.allFinite()) {
        throw std::domain_error("matrix has non-finite entries");
    }
    Eigen::EigenSolver<Eigen::MatrixXd> solver(M, false);
    if (solver.info() != Eigen::Success) {
        throw std::runtime_error("eigenvalue solve did not converge");
    }
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

std::optional<double> spectral_radius_power(const Eigen::MatrixXd& M, int max_iter, double tol) {
    const Eigen::Index n = M.rows();
    if (n != M.cols() || n == 0) {
        throw std::invalid_argument("spectral radius needs a non-empty square matrix");
    }
    const bool nonnegative = (M.array() >= 0.0).all();
    // For non-negative M the Perron root of M + I is rho(M) + 1 and the shift
    // removes periodic oscillation; Collatz-Wielandt bounds bracket the root.
    const double shift = nonnegative ? 1.0 : 0.0;
    const Eigen::MatrixXd A = M + shift * Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd x = Eigen::VectorXd::Ones(n) / std::sqrt(static_cast<double>(n));
    double previous = -1.0;
    for (int k = 0; k < max_iter; ++k) {
        Eigen::VectorXd y = A * x;
        const double norm = y.norm();
        if (norm == 0.0) {
            return 0.0;
        }
        if (nonnegative && (x.array() > 0.0).all()) {
            const Eigen::ArrayXd ratio = y.array() / x.array();
            const double lo = ratio.minCoeff();
            const double hi = ratio.maxCoeff();
            if (hi - lo <= tol * hi) {
                return 0.5 * (lo + hi) - shift;
            }
        } else if (std::abs(norm - previous) <= tol * norm) {
            return norm - shift;
        }
        previous = norm;
        x = y / norm;
    }
    return std::nullopt;
}

StabilityReport stability_report(const ModelSpec& spec, std::size_t lag_cap) {
    spec.validate();
    std::vector<FracDiffCoeffs> coeffs;
    coeffs.reserve(spec.m());
    for (const auto& p : spec.regimes) {
        coeffs.emplace_back(p.d, std::max<std::size_t>(spec.trunc_K, 2));
    }
    MomentSystem system = build_Q(spec, coeffs, lag_cap);

    StabilityReport report;
    report.pi = stationary_distribution(spec.transition);
    report.rho = spectral_radius(system.Q);
    report.stable = report.rho < 1.0;
    if (report.stable) {
        const Eigen::Index n = system.Q.rows();
        const Eigen::VectorXd limit =
            (Eigen::MatrixXd::Identity(n, n) - system.Q).fullPivLu().solve(system.Lambda);
        if (!limit.allFinite()) {
            throw std::runtime_error("I - Q is singular although rho(Q) < 1");
        }
        double bound = 0.0;
        for (std::size_t j = 0; j < spec.m(); ++j) {
            bound += report.pi[j] * limit(static_cast<Eigen::Index>(j));
        }
        report.bound = bound;
    }
    report.Q = std::move(system.Q);
    report.Lambda = std::move(system.Lambda);
    return report;
}

}  // namespace rvl
