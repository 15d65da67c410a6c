#include "rvl/risk_backtest.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace rvl {

namespace {

// k log p with 0 log 0 = 0
double xlogy(double k, double p) {
    if (k == 0.0) {
        return 0.0;
    }
    return k * std::log(p);
}

double bernoulli_loglik(double k1, double k0, double p) {
    return xlogy(k1, p) + xlogy(k0, 1.0 - p);
}

void check_rho(double rho) {
    if (!(rho > 0.0 && rho < 0.5)) {
        throw std::invalid_argument("risk level must lie in (0, 0.5)");
    }
}

}  // namespace

double standardized_quantile(std::span<const double> returns, std::span<const double> variances, double rho) {
    check_rho(rho);
    if (returns.size() != variances.size()) {
        throw std::invalid_argument("returns and variance forecasts differ in length");
    }
    if (returns.size() < kMinQuantileSample) {
        throw std::invalid_argument("empirical quantile needs at least " + std::to_string(kMinQuantileSample) +
                                    " in-sample points; enable the normal-quantile fallback (risk.normal_fallback=true)");
    }
    std::vector<double> z(returns.size());
    for (std::size_t t = 0; t < returns.size(); ++t) {
        if (!(variances[t] > 0.0)) {
            throw std::invalid_argument("variance forecast must be positive at t=" + std::to_string(t));
        }
        z[t] = returns[t] / std::sqrt(variances[t]);
    }
    std::sort(z.begin(), z.end());
    const double pos = static_cast<double>(z.size() - 1) * rho;
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, z.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return z[lo] + frac * (z[hi] - z[lo]);
}

double normal_quantile(double rho) {
    if (!(rho > 0.0 && rho < 1.0)) {
        throw std::invalid_argument("probability must lie in (0, 1)");
    }
    return boost::math::quantile(boost::math::normal_distribution<double>(), rho);
}

double var_forecast(double sigma, double quantile) {
    return quantile * sigma;
}

VarSeries make_var_series(std::span<const double> variances, double rho, double quantile) {
    check_rho(rho);
    VarSeries out;
    out.rho = rho;
    out.quantile = quantile;
    out.var.reserve(variances.size());
    for (double h : variances) {
        if (!(h > 0.0)) {
            throw std::invalid_argument("variance forecast must be positive");
        }
        out.var.push_back(var_forecast(std::sqrt(h), quantile));
    }
    return out;
}

ExceptionSeries exception_series(std::span<const double> realized, std::span<const double> var) {
    if (realized.size() != var.size()) {
        throw std::invalid_argument("realized returns and VaR series differ in length");
    }
    ExceptionSeries e;
    e.T = realized.size();
    e.q.resize(e.T);
    for (std::size_t t = 0; t < e.T; ++t) {
        e.q[t] = realized[t] < var[t] ? 1 : 0;
        e.n += static_cast<std::size_t>(e.q[t]);
        if (t > 0) {
            const int a = e.q[t - 1];
            const int b = e.q[t];
            if (a == 0 && b == 0) ++e.n00;
            if (a == 0 && b == 1) ++e.n01;
            if (a == 1 && b == 0) ++e.n10;
            if (a == 1 && b == 1) ++e.n11;
        }
    }
    return e;
}

double kupiec_uc(std::size_t n, std::size_t T, double rho) {
    if (T < 1 || n > T) {
        throw std::invalid_argument("kupiec_uc needs 0 <= n <= T and T >= 1");
    }
    if (!(rho > 0.0 && rho < 1.0)) {
        throw std::invalid_argument("risk level must lie in (0, 1)");
    }
    const auto k1 = static_cast<double>(n);
    const auto k0 = static_cast<double>(T - n);
    const double phi = k1 / static_cast<double>(T);
    const double lr = -2.0 * (bernoulli_loglik(k1, k0, rho) - bernoulli_loglik(k1, k0, phi));
    return std::max(0.0, lr);
}

double christoffersen_ind(std::size_t n00, std::size_t n01, std::size_t n10, std::size_t n11) {
    const std::size_t total = n00 + n01 + n10 + n11;
    if (total < 1) {
        throw std::invalid_argument("christoffersen_ind needs at least one transition");
    }
    const auto a = static_cast<double>(n00);
    const auto b = static_cast<double>(n01);
    const auto c = static_cast<double>(n10);
    const auto d = static_cast<double>(n11);
    const double n = b + d;
    const double phi = n / static_cast<double>(total);
    const double phi01 = (a + b) > 0.0 ? b / (a + b) : 0.0;
    const double phi11 = (c + d) > 0.0 ? d / (c + d) : 0.0;
    const double restricted = bernoulli_loglik(n, static_cast<double>(total) - n, phi);
    const double unrestricted = bernoulli_loglik(b, a, phi01) + bernoulli_loglik(d, c, phi11);
    return std::max(0.0, -2.0 * (restricted - unrestricted));
}

double christoffersen_cc(std::size_t n, std::size_t T, double rho, std::size_t n00, std::size_t n01,
                         std::size_t n10, std::size_t n11) {
    if (n > T) {
        throw std::invalid_argument("christoffersen_cc needs n <= T");
    }
    const auto a = static_cast<double>(n00);
    const auto b = static_cast<double>(n01);
    const auto c = static_cast<double>(n10);
    const auto d = static_cast<double>(n11);
    const double phi01 = (a + b) > 0.0 ? b / (a + b) : 0.0;
    const double phi11 = (c + d) > 0.0 ? d / (c + d) : 0.0;
    const auto k1 = static_cast<double>(n);
    const auto k0 = static_cast<double>(T - n);
    const double restricted = bernoulli_loglik(k1, k0, rho);
    const double unrestricted = bernoulli_loglik(b, a, phi01) + bernoulli_loglik(d, c, phi11);
    return std::max(0.0, -2.0 * (restricted - unrestricted));
}

BacktestReport backtest(std::span<const double> realized, const VarSeries& var) {
    check_rho(var.rho);
    if (realized.size() < 2) {
        throw std::invalid_argument("backtest needs at least two observations");
    }
    BacktestReport r;
    r.exceptions = exception_series(realized, var.var);
    const ExceptionSeries& e = r.exceptions;
    r.rho = var.rho;
    r.T = e.T;
    r.n = e.n;
    r.expected = var.rho * static_cast<double>(e.T);
    r.lr_uc = kupiec_uc(e.n, e.T, var.rho);
    // exceptions among q_1..q_{T-1}, the second element of each pair
    const std::size_t n_shared = e.n01 + e.n11;
    r.lr_uc_shared = kupiec_uc(n_shared, e.T - 1, var.rho);
    r.lr_ind = christoffersen_ind(e.n00, e.n01, e.n10, e.n11);
    r.lr_cc = christoffersen_cc(n_shared, e.T - 1, var.rho, e.n00, e.n01, e.n10, e.n11);
    r.pass_uc = r.lr_uc <= kChi2Crit1;
    r.pass_ind = r.lr_ind <= kChi2Crit1;
    r.pass_cc = r.lr_cc <= kChi2Crit2;
    return r;
}

}  // namespace rvl
