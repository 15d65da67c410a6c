#include "rvl/bayes_gibbs.hpp"

#include "rvl/regime_filter.hpp"
#include "rvl/stability.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <stdexcept>

namespace rvl {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double& field_ref(RegimeParams& p, ParamField f) {
    switch (f) {
        case ParamField::a0: return p.a0;
        case ParamField::a1: return p.a1;
        case ParamField::a2: return p.a2;
        case ParamField::b0: return p.b0;
        case ParamField::b1: return p.b1;
        case ParamField::b2: return p.b2;
        case ParamField::d: return p.d;
        case ParamField::gamma: return p.gamma;
        case ParamField::w: break;
    }
    throw std::invalid_argument("w is not a regime field");
}

std::size_t draw_index(std::span<const double> probs, double u) {
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < probs.size(); ++k) {
        acc += probs[k];
        if (u < acc) {
            return k;
        }
    }
    return probs.size() - 1;
}

/**
 * Log-likelihood of the observations assigned to one regime. Mirrors the
 * arithmetic of regime_path() so that sampler and filter agree exactly.
 */
double regime_loglik(const RegimeParams& p, double g1, const WeightMode& mode, std::span<const double> y,
                     std::span<const double> y_sq, std::span<const double> lag_sums, std::span<const int> z,
                     int regime, double h_init) {
    double h1 = h_init;
    double h2 = h_init;
    double ll = 0.0;
    const std::size_t T = y.size();
    for (std::size_t t = 0; t < T; ++t) {
        double w;
        if (t == 0) {
            w = mode_weight(mode, p.gamma, 0.0);
        } else {
            h1 = garch_step(p, h1, y_sq[t - 1]);
            h2 = figarch_combine(p, g1, h2, y_sq[t - 1], lag_sums[t]);
            w = mode_weight(mode, p.gamma, y[t - 1]);
        }
        if (z[t] == regime) {
            const double h = regime_variance(h1, h2, w);
            if (!(h > 0.0) || !std::isfinite(h)) {
                return kNegInf;
            }
            ll += log_normal_density(y[t], h);
        }
    }
    return ll;
}

/// Holds one chain's data views, current values and cached FIGARCH lag sums.
class CoordinateSampler {
public:
    CoordinateSampler(std::span<const double> y, double h_init, ModelSpec spec, std::size_t K)
        : y_(y), h_init_(h_init), spec_(std::move(spec)), K_(K) {
        y_sq_.resize(y_.size());
        for (std::size_t t = 0; t < y_.size(); ++t) {
            y_sq_[t] = y_[t] * y_[t];
        }
        lag_sums_.resize(spec_.m());
        for (std::size_t j = 0; j < spec_.m(); ++j) {
            refresh(j);
        }
    }

    [[nodiscard]] const ModelSpec& spec() const noexcept { return spec_; }
    ModelSpec& spec() noexcept { return spec_; }

    void reorder(const std::vector<std::size_t>& perm) {
        spec_ = permute_regimes(spec_, perm);
        std::vector<std::vector<double>> sums(perm.size());
        for (std::size_t k = 0; k < perm.size(); ++k) {
            sums[k] = std::move(lag_sums_[perm[k]]);
        }
        lag_sums_ = std::move(sums);
    }

    Eigen::MatrixXd log_likelihoods() {
        const auto T = static_cast<Eigen::Index>(y_.size());
        const auto m = static_cast<Eigen::Index>(spec_.m());
        Eigen::MatrixXd out(T, m);
        for (Eigen::Index j = 0; j < m; ++j) {
            const RegimeParams& p = spec_.regimes[static_cast<std::size_t>(j)];
            const double g1 = cache_.get(p.d, K_)->operator[](1);
            const auto& ls = lag_sums_[static_cast<std::size_t>(j)];
            double h1 = h_init_;
            double h2 = h_init_;
            for (Eigen::Index t = 0; t < T; ++t) {
                const auto ut = static_cast<std::size_t>(t);
                double w;
                if (t == 0) {
                    w = mode_weight(spec_.weight, p.gamma, 0.0);
                } else {
                    h1 = garch_step(p, h1, y_sq_[ut - 1]);
                    h2 = figarch_combine(p, g1, h2, y_sq_[ut - 1], ls[ut]);
                    w = mode_weight(spec_.weight, p.gamma, y_[ut - 1]);
                }
                out(t, j) = log_normal_density(y_[ut], regime_variance(h1, h2, w));
            }
        }
        return out;
    }

    /// Griddy update of one coordinate; returns the new value.
    double update(const ParameterSlot& slot, std::span<const int> z, const PriorSpec& prior, std::size_t H,
                  Rng& rng) {
        const Interval range = feasible_range(spec_, slot, prior);
        const double current = slot_value(spec_, slot);
        if (!(range.hi - range.lo > 1e-12)) {
            return current;
        }
        const std::vector<double> grid = make_grid(range, H);
        std::vector<double> log_kernel(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) {
            log_kernel[i] = evaluate(slot, grid[i], z);
        }
        const double value = griddy_draw(grid, log_kernel, rng);
        set_slot_value(spec_, slot, value);
        if (slot.field == ParamField::d || slot.field == ParamField::b2) {
            refresh(slot.regime);
        }
        return value;
    }

private:
    void refresh(std::size_t j) {
        const RegimeParams& p = spec_.regimes[j];
        const FigarchLagKernel kernel(*cache_.get(p.d, K_), p.b2);
        lag_sums_[j] = kernel.lag_sums(y_sq_);
    }

    double evaluate(const ParameterSlot& slot, double value, std::span<const int> z) {
        const std::size_t j = slot.field == ParamField::w ? 0 : slot.regime;
        RegimeParams p = spec_.regimes[j];
        WeightMode mode = spec_.weight;
        if (slot.field == ParamField::w) {
            mode.fixed_w = value;
        } else {
            field_ref(p, slot.field) = value;
        }
        const auto coeffs = cache_.get(p.d, K_);
        const double g1 = (*coeffs)[1];
        if (p.b2 - p.b1 + g1 < 0.0) {
            return kNegInf;
        }
        const int label = static_cast<int>(j);
        if (slot.field == ParamField::d || slot.field == ParamField::b2) {
            try {
                const FigarchLagKernel kernel(*coeffs, p.b2);
                scratch_ = kernel.lag_sums(y_sq_);
            } catch (const std::domain_error&) {
                return kNegInf;
            }
            return regime_loglik(p, g1, mode, y_, y_sq_, scratch_, z, label, h_init_);
        }
        return regime_loglik(p, g1, mode, y_, y_sq_, lag_sums_[j], z, label, h_init_);
    }

    std::span<const double> y_;
    std::vector<double> y_sq_;
    double h_init_;
    ModelSpec spec_;
    std::size_t K_;
    FracDiffCache cache_;
    std::vector<std::vector<double>> lag_sums_;
    std::vector<double> scratch_;
};

std::vector<ColumnSummary> summarize(const std::vector<std::vector<double>>& rows, std::size_t cols) {
    std::vector<ColumnSummary> out(cols);
    const std::size_t n = rows.size();
    if (n == 0) {
        return out;
    }
    const std::size_t batches = std::min<std::size_t>(20, n);
    const std::size_t batch_len = n / batches;
    for (std::size_t c = 0; c < cols; ++c) {
        double mean = 0.0;
        for (const auto& r : rows) {
            mean += r[c];
        }
        mean /= static_cast<double>(n);
        double ss = 0.0;
        for (const auto& r : rows) {
            ss += (r[c] - mean) * (r[c] - mean);
        }
        out[c].mean = mean;
        out[c].sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;

        if (batches >= 2 && batch_len >= 1) {
            std::vector<double> bm(batches, 0.0);
            for (std::size_t b = 0; b < batches; ++b) {
                for (std::size_t i = 0; i < batch_len; ++i) {
                    bm[b] += rows[b * batch_len + i][c];
                }
                bm[b] /= static_cast<double>(batch_len);
            }
            double bmean = 0.0;
            for (double v : bm) bmean += v;
            bmean /= static_cast<double>(batches);
            double bss = 0.0;
            for (double v : bm) bss += (v - bmean) * (v - bmean);
            out[c].mcse = std::sqrt(bss / static_cast<double>(batches - 1) / static_cast<double>(batches));
        }
    }
    return out;
}

struct ChainResult {
    std::vector<std::vector<double>> draws;
    std::vector<std::vector<double>> transitions;
    std::vector<std::vector<std::uint8_t>> states;
    std::vector<std::size_t> iterations;
};

ChainResult run_chain(std::span<const double> y, const FitModel& model, const PriorSpec& prior,
                      const GibbsConfig& cfg, const ModelSpec& initial, std::size_t chain,
                      const GibbsProgress& progress) {
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed & 0xffffffffu),
                      static_cast<std::uint32_t>(cfg.seed >> 32), static_cast<std::uint32_t>(chain)};
    Rng rng(seq);
    const double h_init = presample_variance(y);
    const std::size_t m = model.m;
    const auto slots = sampled_slots(model, cfg.sample_b2);
    CoordinateSampler sampler(y, h_init, initial, model.trunc_K);
    std::vector<int> z;

    ChainResult out;
    for (std::size_t r = 0; r < cfg.iterations; ++r) {
        try {
            z = ffbs_sample(sampler.log_likelihoods(), sampler.spec().transition, rng);
            sampler.spec().transition = sample_transition(prior, z, m, rng);
            for (const auto& slot : slots) {
                sampler.update(slot, z, prior, cfg.grid_points, rng);
            }
            const auto perm = intercept_order(sampler.spec().regimes);
            if (!std::is_sorted(perm.begin(), perm.end())) {
                sampler.reorder(perm);
                std::vector<int> inverse(m);
                for (std::size_t k = 0; k < m; ++k) {
                    inverse[perm[k]] = static_cast<int>(k);
                }
                for (int& s : z) {
                    s = inverse[static_cast<std::size_t>(s)];
                }
            }
        } catch (const std::exception& e) {
            throw std::runtime_error("chain " + std::to_string(chain) + ", iteration " + std::to_string(r) +
                                     ": " + e.what());
        }

        if (r >= cfg.warmup) {
            const ModelSpec& s = sampler.spec();
            std::vector<double> row;
            row.reserve(slots.size() + m);
            for (const auto& slot : slots) {
                row.push_back(slot_value(s, slot));
            }
            if (m > 1) {
                for (std::size_t j = 0; j < m; ++j) {
                    row.push_back(s.transition(j, j));
                }
            }
            out.draws.push_back(std::move(row));
            const Eigen::MatrixXd& P = s.transition.matrix();
            std::vector<double> flat(m * m);
            for (std::size_t a = 0; a < m; ++a) {
                for (std::size_t b = 0; b < m; ++b) {
                    flat[a * m + b] = P(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
                }
            }
            out.transitions.push_back(std::move(flat));
            out.states.emplace_back(z.begin(), z.end());
            out.iterations.push_back(r);
        }
        if (progress) {
            progress(chain, r);
        }
    }
    return out;
}

}  // namespace

std::string_view field_name(ParamField field) noexcept {
    switch (field) {
        case ParamField::a0: return "a0";
        case ParamField::a1: return "a1";
        case ParamField::a2: return "a2";
        case ParamField::b0: return "b0";
        case ParamField::b1: return "b1";
        case ParamField::b2: return "b2";
        case ParamField::d: return "d";
        case ParamField::gamma: return "gamma";
        case ParamField::w: return "w";
    }
    return "?";
}

ParamField parse_field(std::string_view name) {
    for (ParamField f : kAllFields) {
        if (field_name(f) == name) {
            return f;
        }
    }
    throw std::invalid_argument("unknown parameter '" + std::string(name) + "'");
}

PriorSpec PriorSpec::defaults(std::size_t m) {
    PriorSpec p;
    p.bound(ParamField::a0) = {0.0, 5.0};
    p.bound(ParamField::a1) = {0.0, 1.0};
    p.bound(ParamField::a2) = {0.0, 1.0};
    p.bound(ParamField::b0) = {0.0, 5.0};
    p.bound(ParamField::b1) = {0.0, 1.0};
    p.bound(ParamField::b2) = {0.0, 1.0};
    p.bound(ParamField::d) = {0.0, 1.0};
    p.bound(ParamField::gamma) = {0.0, 10.0};
    p.bound(ParamField::w) = {0.0, 1.0};
    p.concentration = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    return p;
}

void PriorSpec::validate(std::size_t m) const {
    for (ParamField f : kAllFields) {
        const Interval& b = bound(f);
        if (!std::isfinite(b.lo) || !std::isfinite(b.hi) || !(b.lo < b.hi)) {
            throw std::invalid_argument("prior bounds for " + std::string(field_name(f)) +
                                        " must be finite with lower < upper");
        }
    }
    auto nonneg = [&](ParamField f) { return bound(f).lo >= 0.0; };
    if (!nonneg(ParamField::a0) || !nonneg(ParamField::a1) || !nonneg(ParamField::a2) ||
        !nonneg(ParamField::b0) || !nonneg(ParamField::b1) || !nonneg(ParamField::b2) ||
        !nonneg(ParamField::d) || !nonneg(ParamField::gamma) || !nonneg(ParamField::w)) {
        throw std::invalid_argument("prior bounds must lie in the admissible (non-negative) region");
    }
    if (bound(ParamField::d).hi > 1.0 || bound(ParamField::w).hi > 1.0) {
        throw std::invalid_argument("prior bounds for d and w must not exceed 1");
    }
    if (concentration.rows() != static_cast<Eigen::Index>(m) || concentration.cols() != static_cast<Eigen::Index>(m)) {
        throw std::invalid_argument("transition prior must be m x m");
    }
    if (!(concentration.array() > 0.0).all()) {
        throw std::invalid_argument("transition prior hyperparameters must be positive");
    }
}

void GibbsConfig::validate() const {
    if (iterations == 0) {
        throw std::invalid_argument("gibbs iterations must be positive");
    }
    if (!(warmup < iterations)) {
        throw std::invalid_argument("gibbs warmup must be smaller than the iteration count");
    }
    if (grid_points < 3) {
        throw std::invalid_argument("gibbs grid needs at least 3 points");
    }
    if (chains < 1) {
        throw std::invalid_argument("gibbs needs at least one chain");
    }
}

std::string ParameterSlot::name() const {
    if (field == ParamField::w) {
        return "w";
    }
    return std::string(field_name(field)) + "." + std::to_string(regime + 1);
}

std::vector<ParameterSlot> sampled_slots(const FitModel& model, bool sample_b2) {
    std::vector<ParameterSlot> slots;
    const bool fixed = model.family == ModelFamily::hygarch;
    for (std::size_t j = 0; j < model.m; ++j) {
        for (ParamField f : {ParamField::a0, ParamField::a1, ParamField::a2, ParamField::b0, ParamField::b1}) {
            slots.push_back({j, f});
        }
        if (sample_b2) {
            slots.push_back({j, ParamField::b2});
        }
        slots.push_back({j, ParamField::d});
        if (!fixed) {
            slots.push_back({j, ParamField::gamma});
        }
    }
    if (fixed) {
        slots.push_back({0, ParamField::w});
    }
    return slots;
}

double slot_value(const ModelSpec& spec, const ParameterSlot& slot) {
    if (slot.field == ParamField::w) {
        return spec.weight.fixed_w;
    }
    RegimeParams p = spec.regimes.at(slot.regime);
    return field_ref(p, slot.field);
}

void set_slot_value(ModelSpec& spec, const ParameterSlot& slot, double value) {
    if (slot.field == ParamField::w) {
        spec.weight.fixed_w = value;
        return;
    }
    field_ref(spec.regimes.at(slot.regime), slot.field) = value;
}

ModelSpec PosteriorDraws::posterior_mean_spec() const {
    ModelSpec spec;
    spec.regimes = fixed_template;
    spec.weight = weight_template;
    spec.trunc_K = model.trunc_K;
    const auto slots = sampled_slots(model, std::find(names.begin(), names.end(), "b2.1") != names.end());
    for (std::size_t c = 0; c < slots.size(); ++c) {
        set_slot_value(spec, slots[c], summary.at(c).mean);
    }
    const std::size_t m = model.m;
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    for (const auto& flat : transitions) {
        for (std::size_t a = 0; a < m; ++a) {
            for (std::size_t b = 0; b < m; ++b) {
                P(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) += flat[a * m + b];
            }
        }
    }
    if (!transitions.empty()) {
        P /= static_cast<double>(transitions.size());
    } else {
        P.setIdentity();
    }
    for (Eigen::Index a = 0; a < P.rows(); ++a) {
        P.row(a) /= P.row(a).sum();
    }
    spec.transition = TransitionMatrix(P);
    return permute_regimes(spec, intercept_order(spec.regimes));
}

std::vector<std::vector<double>> PosteriorDraws::state_probabilities() const {
    std::vector<std::vector<double>> out;
    if (states.empty()) {
        return out;
    }
    const std::size_t T = states.front().size();
    out.assign(T, std::vector<double>(model.m, 0.0));
    for (const auto& path : states) {
        for (std::size_t t = 0; t < T; ++t) {
            out[t][path[t]] += 1.0;
        }
    }
    for (auto& row : out) {
        for (double& v : row) {
            v /= static_cast<double>(states.size());
        }
    }
    return out;
}

Eigen::MatrixXd regime_log_likelihoods(const ModelSpec& spec, std::span<const double> y, double h_init) {
    spec.validate();
    const VariancePath paths = variance_path(spec, y, h_init);
    Eigen::MatrixXd out(static_cast<Eigen::Index>(y.size()), static_cast<Eigen::Index>(spec.m()));
    for (std::size_t j = 0; j < spec.m(); ++j) {
        for (std::size_t t = 0; t < y.size(); ++t) {
            out(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) =
                log_normal_density(y[t], paths.regimes[j].h[t]);
        }
    }
    return out;
}

std::vector<int> ffbs_sample(const Eigen::MatrixXd& log_lik, const TransitionMatrix& P, Rng& rng) {
    const auto T = static_cast<std::size_t>(log_lik.rows());
    const std::size_t m = P.size();
    if (static_cast<std::size_t>(log_lik.cols()) != m) {
        throw std::invalid_argument("likelihood columns must match the state count");
    }
    std::vector<int> z(T, 0);
    if (T == 0 || m == 1) {
        return z;
    }

    std::vector<double> pred = stationary_distribution(P);
    std::vector<std::vector<double>> filt(T, std::vector<double>(m));
    std::vector<double> logpost(m);
    for (std::size_t t = 0; t < T; ++t) {
        double hi = kNegInf;
        for (std::size_t j = 0; j < m; ++j) {
            logpost[j] = pred[j] > 0.0 ? std::log(pred[j]) + log_lik(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j))
                                       : kNegInf;
            hi = std::max(hi, logpost[j]);
        }
        if (!std::isfinite(hi)) {
            throw std::domain_error("forward filter underflow at t=" + std::to_string(t));
        }
        double total = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            filt[t][j] = std::exp(logpost[j] - hi);
            total += filt[t][j];
        }
        for (double& v : filt[t]) {
            v /= total;
        }
        for (std::size_t j = 0; j < m; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < m; ++k) {
                acc += filt[t][k] * P(k, j);
            }
            pred[j] = acc;
        }
    }

    std::uniform_real_distribution<double> unif(0.0, 1.0);
    z[T - 1] = static_cast<int>(draw_index(filt[T - 1], unif(rng)));
    std::vector<double> back(m);
    for (std::size_t t = T - 1; t-- > 0;) {
        double total = 0.0;
        const auto next = static_cast<std::size_t>(z[t + 1]);
        for (std::size_t j = 0; j < m; ++j) {
            back[j] = filt[t][j] * P(j, next);
            total += back[j];
        }
        for (double& v : back) {
            v /= total;
        }
        z[t] = static_cast<int>(draw_index(back, unif(rng)));
    }
    return z;
}

std::vector<int> ffbs_sample_states(const ModelSpec& spec, std::span<const double> y, double h_init, Rng& rng) {
    return ffbs_sample(regime_log_likelihoods(spec, y, h_init), spec.transition, rng);
}

Eigen::MatrixXd transition_counts(std::span<const int> z, std::size_t m) {
    Eigen::MatrixXd n = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    for (std::size_t t = 1; t < z.size(); ++t) {
        n(z[t - 1], z[t]) += 1.0;
    }
    return n;
}

TransitionMatrix sample_transition(const PriorSpec& prior, std::span<const int> z, std::size_t m, Rng& rng) {
    if (m == 1) {
        return TransitionMatrix::single();
    }
    const Eigen::MatrixXd n = transition_counts(z, m);
    Eigen::MatrixXd P(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    for (Eigen::Index r = 0; r < P.rows(); ++r) {
        double total = 0.0;
        for (Eigen::Index s = 0; s < P.cols(); ++s) {
            std::gamma_distribution<double> gamma(prior.concentration(r, s) + n(r, s), 1.0);
            P(r, s) = gamma(rng);
            total += P(r, s);
        }
        P.row(r) /= total;
        // keep every entry strictly inside (0,1) so the chain stays primitive
        for (Eigen::Index s = 0; s < P.cols(); ++s) {
            P(r, s) = std::clamp(P(r, s), 1e-12, 1.0 - 1e-12);
        }
        P.row(r) /= P.row(r).sum();
    }
    return TransitionMatrix(std::move(P));
}

double griddy_inverse(std::span<const double> grid, std::span<const double> kernel, double u) {
    const std::size_t H = grid.size();
    if (H < 2 || kernel.size() != H) {
        throw std::invalid_argument("grid and kernel must have the same size >= 2");
    }
    std::vector<double> cdf(H, 0.0);
    for (std::size_t i = 1; i < H; ++i) {
        cdf[i] = cdf[i - 1] + 0.5 * (kernel[i - 1] + kernel[i]) * (grid[i] - grid[i - 1]);
    }
    const double total = cdf.back();
    if (!(total > 0.0) || !std::isfinite(total)) {
        throw std::domain_error("grid kernel integrates to zero");
    }
    const double target = std::clamp(u, 0.0, 1.0) * total;
    std::size_t i = 0;
    while (i + 2 < H && (cdf[i + 1] < target || cdf[i + 1] == cdf[i])) {
        ++i;
    }
    const double width = grid[i + 1] - grid[i];
    const double k0 = kernel[i];
    const double slope = (kernel[i + 1] - k0) / width;
    const double r = std::max(0.0, target - cdf[i]);
    // k0 x + slope x^2 / 2 = r, rationalised to avoid cancellation
    const double disc = std::max(0.0, k0 * k0 + 2.0 * slope * r);
    const double denom = k0 + std::sqrt(disc);
    const double x = denom > 0.0 ? 2.0 * r / denom : 0.0;
    return grid[i] + std::clamp(x, 0.0, width);
}

double griddy_draw(std::span<const double> grid, std::span<const double> log_kernel, Rng& rng) {
    double hi = kNegInf;
    for (double v : log_kernel) {
        if (!std::isnan(v)) {
            hi = std::max(hi, v);
        }
    }
    if (!std::isfinite(hi)) {
        throw std::domain_error("Griddy kernel is zero or non-finite at every grid point (grid [" +
                                std::to_string(grid.front()) + ", " + std::to_string(grid.back()) + "])");
    }
    std::vector<double> kernel(log_kernel.size());
    for (std::size_t i = 0; i < kernel.size(); ++i) {
        kernel[i] = std::isnan(log_kernel[i]) ? 0.0 : std::exp(log_kernel[i] - hi);
    }
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double v = griddy_inverse(grid, kernel, unif(rng));
    const double lo_in = std::nextafter(grid.front(), grid.back());
    const double hi_in = std::nextafter(grid.back(), grid.front());
    return std::clamp(v, lo_in, hi_in);
}

std::vector<double> make_grid(Interval range, std::size_t H) {
    if (H < 2) {
        throw std::invalid_argument("grid needs at least two points");
    }
    const double nudge = 1e-6 * (range.hi - range.lo);
    const double lo = range.lo + nudge;
    const double hi = range.hi - nudge;
    std::vector<double> grid(H);
    for (std::size_t i = 0; i < H; ++i) {
        grid[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(H - 1);
    }
    return grid;
}

Interval feasible_range(const ModelSpec& spec, const ParameterSlot& slot, const PriorSpec& prior) {
    Interval r = prior.bound(slot.field);
    if (slot.field == ParamField::w) {
        return r;
    }
    const RegimeParams& p = spec.regimes.at(slot.regime);
    switch (slot.field) {
        case ParamField::b1:
            r.lo = std::max(r.lo, p.b2);
            r.hi = std::min(r.hi, p.d);
            break;
        case ParamField::b2:
            r.lo = std::max(r.lo, 0.0);
            r.hi = std::min({r.hi, p.b1, 0.5 * (1.0 - p.d)});
            break;
        case ParamField::d:
            r.lo = std::max(r.lo, p.b1);
            r.hi = std::min({r.hi, 1.0, 1.0 - 2.0 * p.b2});
            break;
        default:
            break;
    }
    if (r.hi < r.lo) {
        r.hi = r.lo;
    }
    return r;
}

double griddy_sample_param(const ParameterSlot& slot, const ModelSpec& current, std::span<const int> z,
                           std::span<const double> y, double h_init, const PriorSpec& prior, std::size_t H,
                           Rng& rng) {
    if (z.size() != y.size()) {
        throw std::invalid_argument("state path and returns differ in length");
    }
    CoordinateSampler sampler(y, h_init, current, current.trunc_K);
    return sampler.update(slot, z, prior, H, rng);
}

ModelSpec default_initial_spec(const FitModel& model, std::span<const double> y, const PriorSpec& prior) {
    const double s2 = presample_variance(y);
    auto inside = [&](ParamField f, double v) {
        const Interval& b = prior.bound(f);
        const double pad = 0.05 * (b.hi - b.lo);
        return std::clamp(v, b.lo + pad, b.hi - pad);
    };
    ModelSpec spec;
    spec.trunc_K = model.trunc_K;
    spec.weight = model.family == ModelFamily::hygarch ? WeightMode::fixed(inside(ParamField::w, 0.5))
                                                       : WeightMode::logistic();
    const std::size_t m = model.m;
    for (std::size_t j = 0; j < m; ++j) {
        const double scale = 2.0 * (static_cast<double>(j) + 0.5) / static_cast<double>(m);
        RegimeParams p;
        p.a0 = inside(ParamField::a0, 0.3 * s2 * scale);
        p.b0 = inside(ParamField::b0, 0.3 * s2 * scale);
        p.a1 = inside(ParamField::a1, 0.3);
        p.a2 = inside(ParamField::a2, 0.2);
        p.d = inside(ParamField::d, 0.5);
        p.b1 = std::min(inside(ParamField::b1, 0.1), p.d);
        p.b2 = 0.0;
        p.gamma = inside(ParamField::gamma, 1.0);
        spec.regimes.push_back(p);
    }
    if (m == 1) {
        spec.transition = TransitionMatrix::single();
    } else {
        Eigen::MatrixXd P = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m),
                                                      0.1 / static_cast<double>(m - 1));
        P.diagonal().setConstant(0.9);
        spec.transition = TransitionMatrix(P);
    }
    return permute_regimes(spec, intercept_order(spec.regimes));
}

PosteriorDraws run_gibbs(std::span<const double> y, const FitModel& model, const PriorSpec& prior,
                         const GibbsConfig& cfg, std::optional<ModelSpec> initial, const GibbsProgress& progress) {
    if (y.size() < 50) {
        throw std::invalid_argument("Gibbs estimation needs at least 50 observations");
    }
    cfg.validate();
    prior.validate(model.m);
    if (model.m < 1) {
        throw std::invalid_argument("model needs at least one regime");
    }
    if (model.family != ModelFamily::msst && model.m != 1) {
        throw std::invalid_argument("st and hygarch families have exactly one regime");
    }

    ModelSpec start = initial ? *initial : default_initial_spec(model, y, prior);
    start.trunc_K = model.trunc_K;
    if (model.family == ModelFamily::hygarch && start.weight.kind != WeightKind::fixed) {
        start.weight = WeightMode::fixed(0.5);
    }
    if (model.family != ModelFamily::hygarch) {
        start.weight = WeightMode::logistic();
    }
    if (start.m() != model.m) {
        throw std::invalid_argument("initial values have the wrong number of regimes");
    }
    start = permute_regimes(start, intercept_order(start.regimes));
    start.validate();

    std::vector<ChainResult> results(cfg.chains);
    if (cfg.chains == 1) {
        results[0] = run_chain(y, model, prior, cfg, start, 0, progress);
    } else {
        std::vector<std::future<ChainResult>> futures;
        for (std::size_t c = 0; c < cfg.chains; ++c) {
            futures.push_back(std::async(std::launch::async, run_chain, y, std::cref(model), std::cref(prior),
                                         std::cref(cfg), std::cref(start), c, std::cref(progress)));
        }
        for (std::size_t c = 0; c < cfg.chains; ++c) {
            results[c] = futures[c].get();
        }
    }

    PosteriorDraws out;
    out.model = model;
    out.weight_template = start.weight;
    out.fixed_template = start.regimes;
    for (const auto& slot : sampled_slots(model, cfg.sample_b2)) {
        out.names.push_back(slot.name());
    }
    if (model.m > 1) {
        for (std::size_t j = 0; j < model.m; ++j) {
            out.names.push_back("p" + std::to_string(j + 1) + std::to_string(j + 1));
        }
    }
    for (std::size_t c = 0; c < cfg.chains; ++c) {
        out.per_chain.push_back(summarize(results[c].draws, out.names.size()));
        for (std::size_t i = 0; i < results[c].draws.size(); ++i) {
            out.draws.push_back(std::move(results[c].draws[i]));
            out.transitions.push_back(std::move(results[c].transitions[i]));
            out.states.push_back(std::move(results[c].states[i]));
            out.chain_of_row.push_back(c);
            out.iteration_of_row.push_back(results[c].iterations[i]);
        }
    }
    out.summary = summarize(out.draws, out.names.size());
    if (cfg.chains > 1) {
        // pooled Monte Carlo error of the grand mean from the per-chain errors
        for (std::size_t k = 0; k < out.names.size(); ++k) {
            double acc = 0.0;
            for (const auto& chain : out.per_chain) {
                acc += chain[k].mcse * chain[k].mcse;
            }
            out.summary[k].mcse = std::sqrt(acc) / static_cast<double>(cfg.chains);
        }
    }
    return out;
}

}  // namespace rvl
