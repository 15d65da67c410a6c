#include "rvl/model.hpp"

#include "rvl/stability.hpp"

#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace rvl {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) {
        throw std::invalid_argument(what);
    }
}

bool finite_all(const RegimeParams& p) {
    for (double v : {p.a0, p.a1, p.a2, p.b0, p.b1, p.b2, p.d, p.gamma}) {
        if (!std::isfinite(v)) {
            return false;
        }
    }
    return true;
}

std::size_t draw_categorical(const Eigen::Ref<const Eigen::VectorXd>& probs, double u) {
    double acc = 0.0;
    const auto m = static_cast<std::size_t>(probs.size());
    for (std::size_t k = 0; k + 1 < m; ++k) {
        acc += probs(static_cast<Eigen::Index>(k));
        if (u < acc) {
            return k;
        }
    }
    return m - 1;
}

}  // namespace

void RegimeParams::validate() const {
    require(finite_all(*this), "regime parameters must be finite");
    require(a0 > 0.0, "a0 must be positive");
    require(a1 > 0.0, "a1 must be positive");
    require(a2 > 0.0, "a2 must be positive");
    require(b0 > 0.0, "b0 must be positive");
    require(gamma > 0.0, "gamma must be positive");
    require(d > 0.0 && d < 1.0, "d must lie in (0,1)");
    require(b2 >= 0.0, "b2 must be non-negative");
    require(b2 <= b1, "b2 must not exceed b1");
    require(b1 <= d, "b1 must not exceed d");
}

TransitionMatrix::TransitionMatrix(Eigen::MatrixXd p) : p_(std::move(p)) {
    require(p_.rows() >= 1 && p_.rows() == p_.cols(), "transition matrix must be square and non-empty");
    for (Eigen::Index r = 0; r < p_.rows(); ++r) {
        double row = 0.0;
        for (Eigen::Index s = 0; s < p_.cols(); ++s) {
            const double v = p_(r, s);
            require(std::isfinite(v) && v >= 0.0 && v <= 1.0, "transition probabilities must lie in [0,1]");
            row += v;
        }
        require(std::abs(row - 1.0) <= 1e-12, "transition matrix rows must sum to one");
    }
}

TransitionMatrix TransitionMatrix::two_state(double p11, double p22) {
    Eigen::MatrixXd p(2, 2);
    p << p11, 1.0 - p11, 1.0 - p22, p22;
    return TransitionMatrix(std::move(p));
}

bool TransitionMatrix::is_primitive() const {
    const Eigen::Index m = p_.rows();
    const Eigen::Index bound = (m - 1) * (m - 1) + 1;
    Eigen::MatrixXd pattern = (p_.array() > 0.0).cast<double>().matrix();
    Eigen::MatrixXd power = pattern;
    for (Eigen::Index k = 1; k <= bound; ++k) {
        if ((power.array() > 0.0).all()) {
            return true;
        }
        power = ((power * pattern).array() > 0.0).cast<double>().matrix();
    }
    return false;
}

ModelFamily parse_family(std::string_view name) {
    if (name == "msst") return ModelFamily::msst;
    if (name == "st") return ModelFamily::st;
    if (name == "hygarch") return ModelFamily::hygarch;
    throw std::invalid_argument("unknown model family '" + std::string(name) +
                                "' (expected msst, st or hygarch)");
}

std::string_view family_name(ModelFamily family) noexcept {
    switch (family) {
        case ModelFamily::msst: return "msst";
        case ModelFamily::st: return "st";
        case ModelFamily::hygarch: return "hygarch";
    }
    return "msst";
}

void ModelSpec::validate() const {
    require(!regimes.empty(), "model needs at least one regime");
    for (std::size_t j = 0; j < regimes.size(); ++j) {
        try {
            regimes[j].validate();
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument("regime " + std::to_string(j + 1) + ": " + e.what());
        }
    }
    require(transition.size() == regimes.size(), "transition matrix size must equal the regime count");
    require(trunc_K >= 1, "truncation length must be at least 1");
    if (weight.kind == WeightKind::fixed) {
        require(regimes.size() == 1, "a fixed weight is only defined for a single regime");
        require(weight.fixed_w >= 0.0 && weight.fixed_w <= 1.0, "fixed weight must lie in [0,1]");
    }
    for (std::size_t j = 1; j < regimes.size(); ++j) {
        require(regimes[j - 1].a0 <= regimes[j].a0, "regimes must be ordered by ascending a0");
    }
}

std::vector<std::size_t> intercept_order(const std::vector<RegimeParams>& regimes) {
    std::vector<std::size_t> perm(regimes.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::stable_sort(perm.begin(), perm.end(),
                     [&](std::size_t a, std::size_t b) { return regimes[a].a0 < regimes[b].a0; });
    return perm;
}

ModelSpec permute_regimes(const ModelSpec& spec, const std::vector<std::size_t>& perm) {
    const std::size_t m = spec.m();
    require(perm.size() == m, "permutation size must equal the regime count");
    ModelSpec out = spec;
    Eigen::MatrixXd p(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    for (std::size_t r = 0; r < m; ++r) {
        out.regimes[r] = spec.regimes[perm[r]];
        for (std::size_t s = 0; s < m; ++s) {
            p(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(s)) = spec.transition(perm[r], perm[s]);
        }
    }
    out.transition = TransitionMatrix(std::move(p));
    return out;
}

FigarchLagKernel::FigarchLagKernel(const FracDiffCoeffs& g, double b2) : g1_(g[1]) {
    const std::size_t K = g.size();
    weights_.resize(K > 1 ? K - 1 : 0);
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        const double c = g[i + 2] - b2 * g[i + 1];
        if (c < 0.0) {
            std::ostringstream msg;
            msg << "FIGARCH lag weight g_" << i + 2 << " - b2 g_" << i + 1 << " is negative (d=" << g.d()
                << ", b2=" << b2 << ")";
            throw std::domain_error(msg.str());
        }
        weights_[i] = c;
    }
}

std::vector<double> FigarchLagKernel::lag_sums(std::span<const double> y_sq) const {
    std::vector<double> out(y_sq.size(), 0.0);
    for (std::size_t t = 2; t < y_sq.size(); ++t) {
        out[t] = lag_sum(y_sq, t);
    }
    return out;
}

double figarch_step(const RegimeParams& p, const FracDiffCoeffs& g, double h2_prev,
                    std::span<const double> y_sq_history) {
    if (y_sq_history.empty()) {
        throw std::invalid_argument("figarch_step needs at least one lagged squared return");
    }
    const double lead = p.b2 - p.b1 + g[1];
    if (lead < 0.0) {
        throw std::domain_error("FIGARCH lead coefficient b2 - b1 + g1 is negative");
    }
    const FigarchLagKernel kernel(g, p.b2);
    const auto w = kernel.weights();
    const std::size_t n = std::min(y_sq_history.size() - 1, w.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += w[i] * y_sq_history[1 + i];
    }
    return figarch_combine(p, kernel.g1(), h2_prev, y_sq_history[0], acc);
}

double unconditional_start(const RegimeParams& p) noexcept {
    const double persistence = p.a1 + p.a2;
    return persistence < 1.0 ? p.a0 / (1.0 - persistence) : 1.0;
}

double presample_variance(std::span<const double> y) noexcept {
    if (y.size() < 2) {
        return 1.0;
    }
    const double n = static_cast<double>(y.size());
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : y) {
        ss += (v - mean) * (v - mean);
    }
    const double var = ss / (n - 1.0);
    return (var > 0.0 && std::isfinite(var)) ? var : 1.0;
}

RegimePath regime_path(const RegimeParams& p, const FracDiffCoeffs& g, const WeightMode& mode,
                       std::span<const double> y, double h_init) {
    const std::size_t T = y.size();
    if (p.b2 - p.b1 + g[1] < 0.0) {
        throw std::domain_error("FIGARCH lead coefficient b2 - b1 + g1 is negative");
    }
    const FigarchLagKernel kernel(g, p.b2);
    std::vector<double> y_sq(T);
    for (std::size_t t = 0; t < T; ++t) {
        y_sq[t] = y[t] * y[t];
    }

    RegimePath path;
    path.h1.resize(T);
    path.h2.resize(T);
    path.w.resize(T);
    path.h.resize(T);
    for (std::size_t t = 0; t < T; ++t) {
        double h1 = h_init;
        double h2 = h_init;
        double w = mode_weight(mode, p.gamma, 0.0);
        if (t > 0) {
            h1 = garch_step(p, path.h1[t - 1], y_sq[t - 1]);
            h2 = figarch_combine(p, kernel.g1(), path.h2[t - 1], y_sq[t - 1], kernel.lag_sum(y_sq, t));
            w = mode_weight(mode, p.gamma, y[t - 1]);
        }
        path.h1[t] = h1;
        path.h2[t] = h2;
        path.w[t] = w;
        path.h[t] = regime_variance(h1, h2, w);
    }
    return path;
}

VariancePath variance_path(const ModelSpec& spec, std::span<const double> y, double h_init) {
    VariancePath out;
    out.regimes.reserve(spec.m());
    for (const auto& p : spec.regimes) {
        const FracDiffCoeffs g(p.d, spec.trunc_K);
        out.regimes.push_back(regime_path(p, g, spec.weight, y, h_init));
    }
    return out;
}

SimulatedPath simulate_path(const ModelSpec& spec, std::size_t T, std::size_t burn_in,
                            std::uint64_t seed) {
    spec.validate();
    require(T >= 1, "simulation length must be at least 1");
    require(burn_in < T, "burn-in must be shorter than the simulation length");

    const std::size_t m = spec.m();
    std::vector<FracDiffCoeffs> coeffs;
    std::vector<FigarchLagKernel> kernels;
    coeffs.reserve(m);
    kernels.reserve(m);
    for (const auto& p : spec.regimes) {
        coeffs.emplace_back(p.d, spec.trunc_K);
        if (p.b2 - p.b1 + coeffs.back()[1] < 0.0) {
            throw std::domain_error("FIGARCH lead coefficient b2 - b1 + g1 is negative");
        }
        kernels.emplace_back(coeffs.back(), p.b2);
    }

    const auto pi_vec = stationary_distribution(spec.transition);
    const Eigen::VectorXd pi = Eigen::Map<const Eigen::VectorXd>(pi_vec.data(), static_cast<Eigen::Index>(m));
    const Eigen::MatrixXd& P = spec.transition.matrix();

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    std::vector<double> y(T), y_sq(T);
    std::vector<int> z(T);
    VariancePath full;
    full.regimes.resize(m);
    for (auto& rp : full.regimes) {
        rp.h1.resize(T);
        rp.h2.resize(T);
        rp.w.resize(T);
        rp.h.resize(T);
    }

    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t j = 0; j < m; ++j) {
            const RegimeParams& p = spec.regimes[j];
            RegimePath& rp = full.regimes[j];
            double h1 = unconditional_start(p);
            double h2 = h1;
            double w = mode_weight(spec.weight, p.gamma, 0.0);
            if (t > 0) {
                h1 = garch_step(p, rp.h1[t - 1], y_sq[t - 1]);
                h2 = figarch_combine(p, kernels[j].g1(), rp.h2[t - 1], y_sq[t - 1], kernels[j].lag_sum(y_sq, t));
                w = mode_weight(spec.weight, p.gamma, y[t - 1]);
            }
            rp.h1[t] = h1;
            rp.h2[t] = h2;
            rp.w[t] = w;
            rp.h[t] = regime_variance(h1, h2, w);
        }
        const double u = unif(rng);
        const std::size_t state =
            t == 0 ? draw_categorical(pi, u)
                   : draw_categorical(P.row(z[t - 1]).transpose(), u);
        z[t] = static_cast<int>(state);
        const double eps = normal(rng);
        y[t] = std::sqrt(full.regimes[state].h[t]) * eps;
        y_sq[t] = y[t] * y[t];
    }

    SimulatedPath out;
    const auto first = static_cast<std::ptrdiff_t>(burn_in);
    out.returns.assign(y.begin() + first, y.end());
    out.states.assign(z.begin() + first, z.end());
    out.variances.regimes.resize(m);
    for (std::size_t j = 0; j < m; ++j) {
        const RegimePath& src = full.regimes[j];
        RegimePath& dst = out.variances.regimes[j];
        dst.h1.assign(src.h1.begin() + first, src.h1.end());
        dst.h2.assign(src.h2.begin() + first, src.h2.end());
        dst.w.assign(src.w.begin() + first, src.w.end());
        dst.h.assign(src.h.begin() + first, src.h.end());
    }
    return out;
}

}  // namespace rvl
