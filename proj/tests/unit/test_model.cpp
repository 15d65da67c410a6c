#include "oracles.hpp"
#include "rvl/dataset.hpp"
#include "rvl/model.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace rvl;

namespace {

ModelSpec simulation_spec() {
    ModelSpec s;
    s.regimes = {{0.18, 0.20, 0.25, 0.15, 0.14, 0.0, 0.40, 0.60}, {1.50, 0.40, 0.35, 1.00, 0.18, 0.0, 0.85, 2.00}};
    s.transition = TransitionMatrix::two_state(0.85, 0.60);
    s.weight = WeightMode::logistic();
    s.trunc_K = 1000;
    return s;
}

}  // namespace

TEST_CASE("logistic weight") {
    CHECK(logistic_weight(2.0, 0.0) == 0.5);
    CHECK(logistic_weight(1.0, std::log(3.0)) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(logistic_weight(0.6, 1e6) == 0.0);
    CHECK(logistic_weight(0.6, -1e6) == 1.0);
    CHECK(std::isfinite(logistic_weight(10.0, -1e308)));
    double prev = 1.0;
    for (double y = -20.0; y <= 20.0; y += 0.5) {
        const double w = logistic_weight(0.6, y);
        CHECK(w < prev);
        prev = w;
    }
}

TEST_CASE("GARCH step") {
    RegimeParams p{0.1, 0.5, 0.2, 0.1, 0.1, 0.0, 0.4, 1.0};
    CHECK(garch_step(p, 1.0, 1.0) == doctest::Approx(0.8).epsilon(1e-15));
    RegimeParams q{0.18, 0.20, 0.25, 0.15, 0.14, 0.0, 0.4, 0.6};
    CHECK(garch_step(q, 0.3, 0.0) == doctest::Approx(0.24).epsilon(1e-15));
    const double hstar = q.a0 / (1.0 - q.a1 - q.a2);
    CHECK(garch_step(q, hstar, hstar) == doctest::Approx(hstar).epsilon(1e-14));
    CHECK(unconditional_start(q) == doctest::Approx(hstar));
    RegimeParams hot{0.1, 0.6, 0.5, 0.1, 0.1, 0.0, 0.4, 1.0};
    CHECK(unconditional_start(hot) == 1.0);
}

TEST_CASE("FIGARCH step") {
    RegimeParams p{0.18, 0.2, 0.25, 0.15, 0.14, 0.0, 0.4, 0.6};
    const FracDiffCoeffs g(0.4, 1000);
    const std::vector<double> hist{1.0, 0.0, 0.0, 0.0};
    CHECK(figarch_step(p, g, 1.0, hist) == doctest::Approx(0.55).epsilon(1e-14));
    const std::vector<double> quiet(30, 0.0);
    const double fixed_point = p.b0 / (1.0 - p.b1);
    CHECK(figarch_step(p, g, fixed_point, quiet) == doctest::Approx(fixed_point).epsilon(1e-14));

    RegimeParams bad = p;
    bad.b1 = 0.39;
    bad.b2 = 0.0;
    const FracDiffCoeffs small_d(0.2, 100);
    bad.d = 0.2;
    CHECK_THROWS_AS(figarch_step(bad, small_d, 1.0, hist), std::domain_error);
}

TEST_CASE("operator form and expanded form agree on random inputs") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int k = 0; k < 200; ++k) {
        RegimeParams p;
        p.d = 0.05 + 0.9 * u(rng);
        p.b2 = u(rng) * std::min(p.d, (1.0 - p.d) / 2.0);
        p.b1 = p.b2 + u(rng) * (p.d - p.b2);
        p.b0 = 0.01 + u(rng);
        p.a0 = p.a1 = p.a2 = p.gamma = 0.1;
        const FracDiffCoeffs g(p.d, 1000);
        std::vector<double> hist(50);
        for (auto& v : hist) v = 5.0 * u(rng) * u(rng);
        const double h_prev = 0.1 + 3.0 * u(rng);
        const double a = figarch_step(p, g, h_prev, hist);
        const double b = oracle::figarch_operator_step(p.b0, p.b1, p.b2, p.d, h_prev, hist);
        worst = std::max(worst, std::abs(a - b));
    }
    CHECK(worst < 1e-10);
}

TEST_CASE("regime variance combination") {
    CHECK(regime_variance(2.0, 4.0, 0.5) == 3.0);
    CHECK(regime_variance(2.0, 4.0, 0.0) == 2.0);
    CHECK(regime_variance(2.0, 4.0, 1.0) == 4.0);
}

TEST_CASE("HYGARCH identity through the component recursions") {
    const double gamma = 0.1, lambda = 0.2, delta = 0.25, w = 0.6, d = 0.4;
    const std::size_t K = 1000;
    RegimeParams p{gamma, lambda, delta - lambda, gamma, lambda, delta, d, 1.0};
    const FracDiffCoeffs g(d, K);
    const oracle::HygarchDirect direct(gamma, lambda, delta, w, d, K);

    std::mt19937_64 rng(11);
    std::normal_distribution<double> eps;
    const std::size_t T = 500;
    std::vector<double> y(T), y_sq(T), h(T);
    h[0] = 1.0;
    for (std::size_t t = 0; t < T; ++t) {
        if (t > 0) h[t] = direct.step(h[t - 1], y_sq, t);
        y[t] = std::sqrt(h[t]) * eps(rng);
        y_sq[t] = y[t] * y[t];
    }
    const RegimePath path = regime_path(p, g, WeightMode::fixed(w), y, 1.0);
    double worst = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
        worst = std::max(worst, std::abs(path.h[t] - h[t]) / h[t]);
    }
    CHECK(worst < 1e-8);
}

TEST_CASE("transition matrix and spec validation") {
    CHECK_THROWS_AS((void)TransitionMatrix(Eigen::MatrixXd::Constant(2, 2, 0.6)), std::invalid_argument);
    Eigen::MatrixXd neg(2, 2);
    neg << 1.1, -0.1, 0.5, 0.5;
    CHECK_THROWS_AS((void)TransitionMatrix(neg), std::invalid_argument);
    CHECK(TransitionMatrix::two_state(0.85, 0.6).is_primitive());
    Eigen::MatrixXd flip(2, 2);
    flip << 0.0, 1.0, 1.0, 0.0;
    CHECK_FALSE(TransitionMatrix(flip).is_primitive());

    ModelSpec s = simulation_spec();
    CHECK_NOTHROW(s.validate());
    std::swap(s.regimes[0], s.regimes[1]);
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);

    ModelSpec w2 = simulation_spec();
    w2.weight = WeightMode::fixed(0.5);
    CHECK_THROWS_AS(w2.validate(), std::invalid_argument);

    RegimeParams p = simulation_spec().regimes[0];
    p.b1 = 0.5;  // above d
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = simulation_spec().regimes[0];
    p.b2 = 0.2;  // above b1
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = simulation_spec().regimes[0];
    p.gamma = 0.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("regime permutation relabels parameters and transition matrix") {
    ModelSpec s = simulation_spec();
    const ModelSpec r = permute_regimes(s, {1, 0});
    CHECK(r.regimes[0] == s.regimes[1]);
    CHECK(r.transition(0, 0) == doctest::Approx(0.60));
    CHECK(r.transition(1, 1) == doctest::Approx(0.85));
    const auto order = intercept_order(r.regimes);
    CHECK(order == std::vector<std::size_t>{1, 0});
}

TEST_CASE("simulation: determinism, positivity and convexity") {
    const ModelSpec s = simulation_spec();
    const auto a = simulate_path(s, 1500, 500, 99);
    const auto b = simulate_path(s, 1500, 500, 99);
    REQUIRE(a.returns.size() == 1000);
    CHECK(a.returns == b.returns);
    CHECK(a.states == b.states);
    for (const auto& reg : a.variances.regimes) {
        for (std::size_t t = 0; t < reg.h.size(); ++t) {
            REQUIRE(reg.h1[t] > 0.0);
            REQUIRE(reg.h2[t] > 0.0);
            REQUIRE(reg.h[t] > 0.0);
            REQUIRE(reg.w[t] > 0.0);
            REQUIRE(reg.w[t] < 1.0);
            REQUIRE(reg.h[t] >= std::min(reg.h1[t], reg.h2[t]) * (1 - 1e-15));
            REQUIRE(reg.h[t] <= std::max(reg.h1[t], reg.h2[t]) * (1 + 1e-15));
            REQUIRE(reg.h[t] == (1.0 - reg.w[t]) * reg.h1[t] + reg.w[t] * reg.h2[t]);
        }
    }
    const auto c = simulate_path(s, 1500, 500, 100);
    CHECK(c.returns != a.returns);
    CHECK_THROWS_AS(simulate_path(s, 100, 100, 1), std::invalid_argument);
}

TEST_CASE("random valid parameter sets keep variances positive") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 30; ++k) {
        RegimeParams p;
        p.a0 = 0.01 + u(rng);
        p.a1 = 0.01 + 0.5 * u(rng);
        p.a2 = 0.01 + 0.4 * u(rng);
        p.b0 = 0.01 + u(rng);
        p.d = 0.05 + 0.9 * u(rng);
        p.b2 = u(rng) * std::min(p.d, (1.0 - p.d) / 2.0);
        p.b1 = p.b2 + u(rng) * (p.d - p.b2);
        p.gamma = 0.05 + 3.0 * u(rng);
        ModelSpec s;
        s.regimes = {p};
        s.transition = TransitionMatrix::single();
        s.trunc_K = 200;
        const auto path = simulate_path(s, 400, 100, static_cast<std::uint64_t>(k));
        for (double h : path.variances.regimes[0].h) REQUIRE(h > 0.0);
    }
}

TEST_CASE("limit behaviour of the smooth transition") {
    const ModelSpec s = simulation_spec();
    const RegimeParams& p = s.regimes[1];
    const double y_big = 50.0 / p.gamma;
    const FracDiffCoeffs g(p.d, 1000);
    for (double y_prev : {y_big, -y_big}) {
        const std::vector<double> y{0.3, y_prev, 0.1};
        const RegimePath path = regime_path(p, g, s.weight, y, 1.0);
        const double target = y_prev > 0 ? path.h1[2] : path.h2[2];
        CHECK(std::abs(path.h[2] - target) <= 1e-15 * target);
    }
}

TEST_CASE("constant-variance degeneration") {
    ModelSpec s;
    s.regimes = {{0.7, 1e-10, 1e-10, 0.5, 0.1, 0.0, 0.4, 1.0}};
    s.transition = TransitionMatrix::single();
    s.weight = WeightMode::fixed(0.0);
    s.trunc_K = 50;
    const auto path = simulate_path(s, 100100, 100, 3);
    const DescriptiveStats st = describe(path.returns);
    const double var = st.sd * st.sd;
    const double se = 0.7 * std::sqrt(2.0 / static_cast<double>(path.returns.size()));
    CHECK(std::abs(var - 0.7) < 3.0 * se);
    CHECK(std::abs(st.excess_kurtosis) < 0.1);
}

TEST_CASE("simulated descriptive statistics sit in the reference bands") {
    // reference: sd 1.491, positive excess kurtosis, extremes near -7 and 6
    const ModelSpec s = simulation_spec();
    std::vector<double> sd, kurt, lo, hi;
    for (std::uint64_t seed = 1; seed <= 41; ++seed) {
        const auto st = describe(simulate_path(s, 2000, 1000, seed).returns);
        sd.push_back(st.sd);
        kurt.push_back(st.excess_kurtosis);
        lo.push_back(st.min);
        hi.push_back(st.max);
    }
    auto median = [](std::vector<double> v) {
        std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2), v.end());
        return v[v.size() / 2];
    };
    CHECK(std::abs(median(sd) - 1.491) < 0.15);
    CHECK(median(kurt) > 0.0);
    CHECK(std::abs(median(lo) + 7.03) < 2.0);
    CHECK(std::abs(median(hi) - 6.17) < 2.0);
}
