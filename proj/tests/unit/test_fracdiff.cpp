#include "oracles.hpp"
#include "rvl/fracdiff.hpp"

#include <doctest.h>

#include <stdexcept>

using rvl::FracDiffCoeffs;

TEST_CASE("first coefficients") {
    const auto a = rvl::compute_coeffs(0.4, 1);
    REQUIRE(a.size() == 1);
    CHECK(a[1] == 0.4);

    const auto b = rvl::compute_coeffs(0.4, 2);
    CHECK(b[2] == doctest::Approx(oracle::gamma_coeff(0.4, 2)).epsilon(1e-13));
    CHECK(b[2] == doctest::Approx(0.12).epsilon(1e-14));

    const auto c = rvl::compute_coeffs(0.85, 3);
    CHECK(c[1] == 0.85);
    CHECK(c[2] == doctest::Approx(0.06375).epsilon(1e-14));
    CHECK(c[3] == doctest::Approx(0.0244375).epsilon(1e-14));
    CHECK(c[3] == doctest::Approx(oracle::gamma_coeff(0.85, 3)).epsilon(1e-12));
}

TEST_CASE("recurrence matches the gamma formula") {
    for (double d : {0.1, 0.25, 0.4, 0.5, 0.75, 0.85, 0.9}) {
        const FracDiffCoeffs g(d, 500);
        double worst = 0.0;
        for (std::size_t i = 1; i <= 500; ++i) {
            worst = std::max(worst, std::abs(g[i] - oracle::gamma_coeff(d, i)));
        }
        CHECK_MESSAGE(worst < 1e-10, "d=" << d);
    }
}

TEST_CASE("positivity, monotonicity and summability") {
    for (double d : {0.05, 0.3, 0.5, 0.7, 0.95}) {
        const FracDiffCoeffs g(d, 2000);
        double sum = 0.0;
        for (std::size_t i = 1; i <= g.size(); ++i) {
            REQUIRE(g[i] > 0.0);
            if (i > 1) REQUIRE(g[i] < g[i - 1]);
            const double next = sum + g[i];
            REQUIRE(next > sum);
            sum = next;
            REQUIRE(sum < 1.0);
        }
        CHECK(g.partial_sum() == doctest::Approx(sum).epsilon(1e-14));
    }
}

TEST_CASE("tail weight") {
    CHECK(rvl::tail_weight(rvl::compute_coeffs(0.4, 1)) == doctest::Approx(0.6).epsilon(1e-15));
    const double t = rvl::tail_weight(rvl::compute_coeffs(0.4, 1000));
    CHECK(t > 0.0);
    CHECK(t < 0.05);
    // regression pin for the default truncation
    CHECK(t == doctest::Approx(0.0423640156045).epsilon(1e-9));
    CHECK(rvl::tail_weight(rvl::compute_coeffs(0.999, 2)) ==
          doctest::Approx(1.0 - 0.999 - 0.999 * 0.001 / 2.0).epsilon(1e-12));
}

TEST_CASE("indexing beyond the truncation and domain errors") {
    const FracDiffCoeffs g(0.3, 10);
    CHECK(g[11] == 0.0);
    CHECK(g.d() == 0.3);
    CHECK_THROWS_AS(FracDiffCoeffs(0.0, 10), std::domain_error);
    CHECK_THROWS_AS(FracDiffCoeffs(1.0, 10), std::domain_error);
    CHECK_THROWS_AS(FracDiffCoeffs(0.5, 0), std::domain_error);
}

TEST_CASE("cache returns shared immutable vectors") {
    rvl::FracDiffCache cache(4);
    auto a = cache.get(0.4, 100);
    auto b = cache.get(0.4, 100);
    CHECK(a.get() == b.get());
    auto c = cache.get(0.4, 200);
    CHECK(c.get() != a.get());
    for (int i = 0; i < 10; ++i) cache.get(0.1 + 0.05 * i, 50);
    CHECK(cache.size() <= 4);
    CHECK((*a)[1] == 0.4);  // evicted entries stay valid for holders
}
