#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "netdiff/degree.hpp"
#include "netdiff/rng.hpp"

using netdiff::DegreeDistribution;
using netdiff::Rng;

namespace {

// Independent check value: numerical derivative of the PGF by central
// differences, used against the closed-form derivative path.
double pgf_fd(const DegreeDistribution& d, double x, int order, double eps = 1e-5) {
    if (order == 1) return (d.pgf(x + eps) - d.pgf(x - eps)) / (2.0 * eps);
    return (pgf_fd(d, x + eps, order - 1, eps) - pgf_fd(d, x - eps, order - 1, eps)) /
           (2.0 * eps);
}

double brute_force_mean(const DegreeDistribution& d) {
    double mean = 0.0;
    for (int k = 0; k <= d.max_degree(); ++k) mean += k * d.pmf(k);
    return mean;
}

} // namespace

TEST_CASE("poisson pmf: normalization, mean, closed-form pgf") {
    const auto d = DegreeDistribution::poisson(5.0);
    double total = 0.0;
    for (int k = 0; k <= d.max_degree(); ++k) total += d.pmf(k);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(d.mean() == doctest::Approx(5.0).epsilon(1e-9));
    CHECK(DegreeDistribution::poisson(6.0).mean() == doctest::Approx(6.0).epsilon(1e-9));

    for (double x : {0.0, 0.3, 0.8, 1.0})
        CHECK(d.pgf(x) == doctest::Approx(std::exp(5.0 * (x - 1.0))).epsilon(1e-10));

    CHECK_THROWS_AS(DegreeDistribution::poisson(0.0), netdiff::config_error);
    CHECK_THROWS_AS(DegreeDistribution::poisson(-1.0), netdiff::config_error);
}

TEST_CASE("poisson degenerate limit lambda -> 0") {
    const auto d = DegreeDistribution::poisson(1e-8);
    CHECK(d.pmf(0) == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(d.pgf(1.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("negative binomial: stated convention") {
    const auto d = DegreeDistribution::negative_binomial(2, 0.75);
    // closed-form mean r(1-p)/p cross-checked by direct pmf summation
    CHECK(brute_force_mean(d) == doctest::Approx(2.0 * 0.25 / 0.75).epsilon(1e-10));
    CHECK(d.mean() == doctest::Approx(2.0 / 3.0).epsilon(1e-10));
    double total = 0.0;
    for (int k = 0; k <= d.max_degree(); ++k) total += d.pmf(k);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

    // r=1, p=1/2 is geometric: p_k = (1/2)^{k+1}
    const auto geo = DegreeDistribution::negative_binomial(1, 0.5);
    for (int k = 0; k <= 10; ++k)
        CHECK(geo.pmf(k) == doctest::Approx(std::pow(0.5, k + 1)).epsilon(1e-12));

    CHECK_THROWS_AS(DegreeDistribution::negative_binomial(0, 0.5), netdiff::config_error);
    CHECK_THROWS_AS(DegreeDistribution::negative_binomial(2, 1.0), netdiff::config_error);
    CHECK_THROWS_AS(DegreeDistribution::negative_binomial(2, 0.0), netdiff::config_error);
}

TEST_CASE("construction fails when the truncated third moment cannot converge") {
    // success probability so small that the k^3 tail is still growing at the
    // truncation cap
    CHECK_THROWS_AS(DegreeDistribution::negative_binomial(1, 1e-7),
                    netdiff::config_error);
}

TEST_CASE("regular distribution") {
    const auto d = DegreeDistribution::regular(3);
    CHECK(d.pgf(0.5) == doctest::Approx(0.125).epsilon(1e-15));
    CHECK(d.mean() == doctest::Approx(3.0));
    CHECK(DegreeDistribution::regular(5).mean() == doctest::Approx(5.0));
    const auto trivial = DegreeDistribution::regular(0);
    CHECK(trivial.pgf(0.0) == doctest::Approx(1.0));
    CHECK(trivial.pgf(0.7) == doctest::Approx(1.0));
}

TEST_CASE("table distribution") {
    const auto d = DegreeDistribution::from_table({{1, 0.7}, {4, 0.2}, {45, 0.1}});
    CHECK(d.mean() == doctest::Approx(6.0).epsilon(1e-12));
    const auto two = DegreeDistribution::from_table({{1, 0.5}, {9, 0.5}});
    CHECK(two.mean() == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(two.moment(1) == doctest::Approx(5.0));

    const auto point = DegreeDistribution::from_table({{3, 1.0}});
    const auto reg = DegreeDistribution::regular(3);
    for (double x : {0.0, 0.25, 0.5, 1.0}) CHECK(point.pgf(x) == doctest::Approx(reg.pgf(x)));

    CHECK_THROWS_AS(DegreeDistribution::from_table({{1, -0.1}, {2, 1.1}}),
                    netdiff::config_error);
    CHECK_THROWS_AS(DegreeDistribution::from_table({{1, 0.4}, {2, 0.4}}),
                    netdiff::config_error);
}

TEST_CASE("pgf bounds and normalization") {
    const auto d = DegreeDistribution::poisson(3.0);
    CHECK(d.pgf(1.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(d.pgf(-0.1), netdiff::config_error);
    CHECK_THROWS_AS(d.pgf(1.1), netdiff::config_error);
}

TEST_CASE("pgf monotone and convex on a grid") {
    for (const auto& d : {DegreeDistribution::poisson(5.0),
                          DegreeDistribution::negative_binomial(2, 0.75),
                          DegreeDistribution::regular(3),
                          DegreeDistribution::from_table({{1, 0.7}, {4, 0.2}, {45, 0.1}})}) {
        double prev = d.pgf(0.0);
        double prev_slope = -1.0;
        for (int i = 1; i <= 100; ++i) {
            const double x = i / 100.0;
            const double cur = d.pgf(x);
            CHECK(cur >= prev - 1e-12);
            const double slope = cur - prev;
            CHECK(slope >= prev_slope - 1e-12); // convexity on the grid
            prev_slope = slope;
            prev = cur;
        }
    }
}

TEST_CASE("pgf derivatives: trivia and closed forms") {
    const auto reg = DegreeDistribution::regular(3);
    CHECK(reg.pgf_derivative(1.0, 2) == doctest::Approx(6.0).epsilon(1e-12));
    const auto poi = DegreeDistribution::poisson(5.0);
    CHECK(poi.pgf_derivative(1.0, 1) == doctest::Approx(poi.mean()).epsilon(1e-12));
    CHECK(poi.pgf_derivative(0.8, 3) ==
          doctest::Approx(125.0 * std::exp(-1.0)).epsilon(1e-10));
    CHECK_THROWS_AS(poi.pgf_derivative(0.5, 4), netdiff::config_error);
    CHECK_THROWS_AS(poi.pgf_derivative(0.5, 0), netdiff::config_error);
}

TEST_CASE("pgf derivatives match finite differences") {
    Rng rng(12345);
    for (const auto& d : {DegreeDistribution::poisson(5.0),
                          DegreeDistribution::negative_binomial(2, 0.75),
                          DegreeDistribution::regular(4)}) {
        for (int trial = 0; trial < 50; ++trial) {
            const double x = 0.05 + 0.9 * rng.uniform();
            const double exact = d.pgf_derivative(x, 1);
            const double approx = pgf_fd(d, x, 1);
            CHECK(std::abs(exact - approx) <= 1e-6 * std::max(1.0, std::abs(exact)));
            // higher orders against the centred difference of the order below
            for (int order = 2; order <= 3; ++order) {
                const double eps = 1e-5;
                const double chained = (d.pgf_derivative(x + eps, order - 1) -
                                        d.pgf_derivative(x - eps, order - 1)) /
                                       (2.0 * eps);
                const double closed = d.pgf_derivative(x, order);
                CHECK(std::abs(closed - chained) <=
                      1e-6 * std::max(1.0, std::abs(closed)));
            }
        }
    }
}

TEST_CASE("d_operator and kappa identities") {
    const auto poi = DegreeDistribution::poisson(3.7);
    for (double x : {0.1, 0.35, 0.6, 0.9, 1.0}) {
        CHECK(poi.d_operator(x, 2) == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(poi.d_operator(x, 3) == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(poi.kappa(x) == doctest::Approx(poi.d_operator(x, 2)).epsilon(1e-15));
    }
    const auto reg = DegreeDistribution::regular(3);
    for (double x : {0.2, 0.5, 0.8, 1.0})
        CHECK(reg.kappa(x) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

    const auto leaf = DegreeDistribution::from_table({{1, 1.0}});
    CHECK(leaf.kappa(0.5) == doctest::Approx(0.0));

    // vanishing first derivative
    const auto isolated = DegreeDistribution::regular(0);
    CHECK_THROWS_AS(isolated.kappa(0.5), netdiff::singular_error);
    CHECK_THROWS_AS(poi.d_operator(0.5, 4), netdiff::config_error);
}

TEST_CASE("poisson kappa stays 1 on a theta grid (truncation adequacy)") {
    const auto poi = DegreeDistribution::poisson(5.0);
    for (int i = 1; i <= 40; ++i) {
        const double theta = i / 40.0;
        CHECK(std::abs(poi.kappa(theta) - 1.0) < 1e-9);
    }
}

TEST_CASE("moments") {
    CHECK(DegreeDistribution::poisson(5.0).moment(1) == doctest::Approx(5.0).epsilon(1e-9));
    CHECK(DegreeDistribution::regular(3).moment(3) == doctest::Approx(27.0));
    CHECK(DegreeDistribution::from_table({{1, 0.5}, {9, 0.5}}).moment(1) ==
          doctest::Approx(5.0));
}

TEST_CASE("degree sequences: parity repair and reproducibility") {
    const auto reg = DegreeDistribution::regular(3);
    Rng rng(7);
    CHECK(reg.sample_degree_sequence(4, rng) == std::vector<int>{3, 3, 3, 3});
    CHECK_THROWS_AS(reg.sample_degree_sequence(5, rng), netdiff::config_error);

    const auto poi = DegreeDistribution::poisson(5.0);
    Rng a(42), b(42);
    const auto s1 = poi.sample_degree_sequence(10000, a);
    const auto s2 = poi.sample_degree_sequence(10000, b);
    CHECK(s1 == s2);
    long long total = 0;
    for (int d : s1) total += d;
    CHECK(total % 2 == 0);
    // empirical mean within 3 standard errors of 5 (sd of Poisson(5) ~ sqrt 5)
    const double mean = static_cast<double>(total) / 10000.0;
    CHECK(std::abs(mean - 5.0) < 3.0 * std::sqrt(5.0 / 10000.0));
}

TEST_CASE("descriptor round trip") {
    for (const char* text : {"poisson:5", "nb:2,0.75", "regular:3", "table:1=0.5,9=0.5"}) {
        const auto d = DegreeDistribution::parse(text);
        const auto d2 = DegreeDistribution::parse(d.descriptor());
        CHECK(d.kind() == d2.kind());
        CHECK(d.mean() == doctest::Approx(d2.mean()).epsilon(1e-12));
        CHECK(d.max_degree() == d2.max_degree());
    }
    CHECK_THROWS_AS(DegreeDistribution::parse("zeta:2"), netdiff::config_error);
    CHECK_THROWS_AS(DegreeDistribution::parse("poisson"), netdiff::config_error);
    CHECK_THROWS_AS(DegreeDistribution::parse("poisson:abc"), netdiff::config_error);
}
