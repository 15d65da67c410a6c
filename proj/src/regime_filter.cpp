#include "rvl/regime_filter.hpp"

#include "rvl/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace rvl {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

double log_sum_exp(std::span<const double> v) noexcept {
    double hi = -std::numeric_limits<double>::infinity();
    for (double x : v) {
        hi = std::max(hi, x);
    }
    if (!std::isfinite(hi)) {
        return hi;
    }
    double acc = 0.0;
    for (double x : v) {
        acc += std::exp(x - hi);
    }
    return hi + std::log(acc);
}

std::vector<FigarchLagKernel> build_kernels(const ModelSpec& spec) {
    std::vector<FigarchLagKernel> kernels;
    kernels.reserve(spec.m());
    for (const auto& p : spec.regimes) {
        const FracDiffCoeffs g(p.d, spec.trunc_K);
        if (p.b2 - p.b1 + g[1] < 0.0) {
            throw std::domain_error("FIGARCH lead coefficient b2 - b1 + g1 is negative");
        }
        kernels.emplace_back(g, p.b2);
    }
    return kernels;
}

FilterState advance_state(const FilterState& prev, double y_prev, const ModelSpec& spec,
                          const std::vector<FigarchLagKernel>& kernels,
                          std::span<const double> y_sq_history) {
    const std::size_t m = spec.m();
    const std::size_t t = prev.t + 1;
    std::vector<double> log_dens(m);
    for (std::size_t k = 0; k < m; ++k) {
        log_dens[k] = log_normal_density(y_prev, prev.h[k]);
    }

    FilterState next;
    next.t = t;
    next.psi = propagate_regime_probabilities(prev.psi, log_dens, spec.transition);
    next.h1.resize(m);
    next.h2.resize(m);
    next.w.resize(m);
    next.h.resize(m);
    const double y_prev_sq = y_sq_history[t - 1];
    for (std::size_t k = 0; k < m; ++k) {
        const RegimeParams& p = spec.regimes[k];
        next.h1[k] = garch_step(p, prev.h1[k], y_prev_sq);
        next.h2[k] = figarch_combine(p, kernels[k].g1(), prev.h2[k], y_prev_sq,
                                     kernels[k].lag_sum(y_sq_history, t));
        next.w[k] = mode_weight(spec.weight, p.gamma, y_prev);
        next.h[k] = regime_variance(next.h1[k], next.h2[k], next.w[k]);
    }
    return next;
}

}  // namespace

double log_normal_density(double y, double h) noexcept {
    return -0.5 * (kLogTwoPi + std::log(h) + y * y / h);
}

std::vector<double> propagate_regime_probabilities(std::span<const double> psi,
                                                   std::span<const double> log_densities,
                                                   const TransitionMatrix& P) {
    const std::size_t m = psi.size();
    std::vector<double> joint(m);
    for (std::size_t k = 0; k < m; ++k) {
        joint[k] = psi[k] > 0.0 ? log_densities[k] + std::log(psi[k])
                                : -std::numeric_limits<double>::infinity();
    }
    const double norm = log_sum_exp(joint);
    if (!std::isfinite(norm)) {
        throw std::domain_error("regime likelihoods underflowed or are not finite");
    }
    std::vector<double> out(m, 0.0);
    for (std::size_t k = 0; k < m; ++k) {
        const double posterior = std::exp(joint[k] - norm);
        for (std::size_t j = 0; j < m; ++j) {
            out[j] += posterior * P(k, j);
        }
    }
    double total = 0.0;
    for (double v : out) {
        total += v;
    }
    for (double& v : out) {
        v /= total;
    }
    return out;
}

FilterState init_filter_at(const ModelSpec& spec, std::span<const double> h_init) {
    spec.validate();
    const std::size_t m = spec.m();
    if (h_init.size() != m) {
        throw std::invalid_argument("need one starting variance per regime");
    }
    FilterState s;
    s.t = 0;
    s.psi = stationary_distribution(spec.transition);
    s.h1.assign(h_init.begin(), h_init.end());
    s.h2.assign(h_init.begin(), h_init.end());
    s.w.resize(m);
    s.h.resize(m);
    for (std::size_t k = 0; k < m; ++k) {
        s.w[k] = mode_weight(spec.weight, spec.regimes[k].gamma, 0.0);
        s.h[k] = regime_variance(s.h1[k], s.h2[k], s.w[k]);
    }
    return s;
}

FilterState init_filter(const ModelSpec& spec, std::span<const double> presample) {
    std::vector<double> start(spec.m());
    for (std::size_t k = 0; k < spec.m(); ++k) {
        start[k] = presample.size() >= 2 ? presample_variance(presample)
                                         : unconditional_start(spec.regimes[k]);
    }
    return init_filter_at(spec, start);
}

FilterState filter_step(const FilterState& prev, double y_prev, const ModelSpec& spec,
                        std::span<const double> y_sq_history) {
    if (y_sq_history.size() != prev.t + 1) {
        throw std::invalid_argument("squared-return history must cover y_0..y_{t-1}");
    }
    return advance_state(prev, y_prev, spec, build_kernels(spec), y_sq_history);
}

double forecast_variance(const FilterState& state) noexcept {
    double v = 0.0;
    for (std::size_t k = 0; k < state.psi.size(); ++k) {
        v += state.psi[k] * state.h[k];
    }
    return v;
}

double log_predictive_density(const FilterState& state, double y) noexcept {
    std::vector<double> terms(state.psi.size());
    for (std::size_t j = 0; j < state.psi.size(); ++j) {
        terms[j] = state.psi[j] > 0.0 ? std::log(state.psi[j]) + log_normal_density(y, state.h[j])
                                      : -std::numeric_limits<double>::infinity();
    }
    return log_sum_exp(terms);
}

double predictive_density(const FilterState& state, double y) noexcept {
    return std::exp(log_predictive_density(state, y));
}

RegimeFilter::RegimeFilter(ModelSpec spec, FilterState initial)
    : spec_(std::move(spec)), kernels_(build_kernels(spec_)), state_(std::move(initial)) {
    if (state_.t != 0) {
        throw std::invalid_argument("filter must start at t = 0");
    }
}

ForecastRecord RegimeFilter::forecast(double y) const {
    ForecastRecord r;
    r.t = state_.t;
    r.variance = forecast_variance(state_);
    r.log_density = log_predictive_density(state_, y);
    r.density = std::exp(r.log_density);
    return r;
}

void RegimeFilter::advance(double y) {
    y_sq_.push_back(y * y);
    state_ = advance_state(state_, y, spec_, kernels_, y_sq_);
}

FilterRun run_filter(const ModelSpec& spec, std::span<const double> y, const FilterState& initial) {
    RegimeFilter filter(spec, initial);
    FilterRun run;
    run.forecasts.reserve(y.size());
    run.psi.reserve(y.size());
    for (double obs : y) {
        run.psi.push_back(filter.state().psi);
        run.forecasts.push_back(filter.forecast(obs));
        filter.advance(obs);
    }
    return run;
}

ForecastMetrics run_metrics(std::span<const ForecastRecord> forecasts, std::span<const double> realized) {
    if (forecasts.size() != realized.size()) {
        throw std::invalid_argument("forecast and realized series differ in length");
    }
    if (forecasts.empty()) {
        throw std::invalid_argument("metrics need at least one forecast");
    }
    ForecastMetrics out;
    double sse = 0.0;
    for (std::size_t t = 0; t < forecasts.size(); ++t) {
        const double err = forecasts[t].variance - realized[t] * realized[t];
        sse += err * err;
        out.llv += forecasts[t].log_density;
    }
    out.rmse = std::sqrt(sse / static_cast<double>(forecasts.size()));
    return out;
}

}  // namespace rvl
