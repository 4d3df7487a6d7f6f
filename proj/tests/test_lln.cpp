#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "netdiff/degree.hpp"
#include "netdiff/lln.hpp"

using netdiff::DegreeDistribution;
using netdiff::infected_fraction;
using netdiff::initial_alpha;
using netdiff::LlnSolution;
using netdiff::mean_drift;
using netdiff::MeanFieldState;
using netdiff::solve_lln;

TEST_CASE("initial fractions") {
    const auto poi = DegreeDistribution::poisson(5.0);
    const auto a = initial_alpha(poi, 0.9);
    CHECK(a.s == doctest::Approx(0.9));
    CHECK(a.si == doctest::Approx(0.45).epsilon(1e-9));
    CHECK(a.ss == doctest::Approx(4.05).epsilon(1e-9));

    const auto full = initial_alpha(poi, 1.0);
    CHECK(full.s == doctest::Approx(1.0));
    CHECK(full.si == doctest::Approx(0.0));
    CHECK(full.ss == doctest::Approx(5.0).epsilon(1e-9));

    const auto reg = initial_alpha(DegreeDistribution::regular(3), 0.5);
    CHECK(reg.si == doctest::Approx(0.75));
    CHECK(reg.ss == doctest::Approx(0.75));

    CHECK_THROWS_AS(initial_alpha(poi, 0.0), netdiff::config_error);
}

TEST_CASE("drift: absorbing state and arithmetic plug-in") {
    const auto poi = DegreeDistribution::poisson(5.0);
    const auto zero = mean_drift({0.9, 0.0, 4.05, 1.0}, poi, 0.5, 0.9);
    CHECK(zero.s == 0.0);
    CHECK(zero.si == 0.0);
    CHECK(zero.ss == 0.0);
    CHECK(zero.theta == 0.0);

    const auto f = mean_drift({0.9, 0.45, 4.05, 1.0}, poi, 0.5, 0.9);
    CHECK(f.s == doctest::Approx(-0.225).epsilon(1e-12));
    CHECK(f.si == doctest::Approx(0.5 * (0.45 / 0.9) * (4.05 - 0.45) - 0.5 * 0.45)
                      .epsilon(1e-9)); // 0.675
    CHECK(f.si == doctest::Approx(0.675).epsilon(1e-9));
    CHECK(f.ss == doctest::Approx(-2.0 * 0.5 * 0.45 * 4.05 / 0.9).epsilon(1e-9));
    CHECK(f.theta == doctest::Approx(-0.5 * 0.45 / (0.9 * 5.0)).epsilon(1e-9)); // -0.05

    CHECK_THROWS_AS(mean_drift({0.0, 0.1, 0.2, 1.0}, poi, 0.5, 0.9),
                    netdiff::singular_error);
}

TEST_CASE("beta = 0 gives the constant solution") {
    const auto poi = DegreeDistribution::poisson(5.0);
    const auto sol = solve_lln(poi, 0.0, 0.9, 2.0, 0.01);
    for (std::size_t j = 0; j < sol.size(); ++j) {
        CHECK(sol.x_s[j] == doctest::Approx(0.9).epsilon(1e-14));
        CHECK(sol.x_si[j] == doctest::Approx(0.45).epsilon(1e-13));
        CHECK(sol.theta[j] == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(infected_fraction(sol, poi, sol.t[j]) ==
              doctest::Approx(0.1).epsilon(1e-12));
    }
}

TEST_CASE("step-halving discrepancy is at fourth-order level") {
    const auto poi = DegreeDistribution::poisson(5.0);
    const auto sol = solve_lln(poi, 0.5, 0.9, 2.0); // default h = T/2000
    CHECK(sol.refinement_sup_error < 1e-8);
    CHECK(!sol.truncated);
    CHECK(sol.size() == 2001);
}

TEST_CASE("survival variable equals its own exponential-integral form") {
    // theta(t) = exp(-beta int x_si / (alpha_s theta psi'(theta)) ds),
    // checked by trapezoid quadrature along the solved path
    const auto poi = DegreeDistribution::poisson(5.0);
    const auto sol = solve_lln(poi, 0.5, 0.9, 2.0, 2.0 / 4000.0);
    double integral = 0.0;
    auto integrand = [&](std::size_t j) {
        return sol.x_si[j] /
               (0.9 * sol.theta[j] * poi.pgf_derivative(sol.theta[j], 1));
    };
    for (std::size_t j = 1; j < sol.size(); ++j) {
        integral += 0.5 * sol.step * (integrand(j - 1) + integrand(j));
        const double reconstructed = std::exp(-0.5 * integral);
        CHECK(std::abs(reconstructed - sol.theta[j]) < 1e-6);
    }
}

TEST_CASE("internal consistency: x_s = alpha_s psi(theta), edge mass identity") {
    for (const auto& dist : {DegreeDistribution::poisson(5.0), DegreeDistribution::regular(3)}) {
        const auto sol = solve_lln(dist, 0.5, 0.9, 2.0);
        for (std::size_t j = 0; j < sol.size(); ++j) {
            CHECK(std::abs(sol.x_s[j] - 0.9 * dist.pgf(sol.theta[j])) < 1e-6);
            const double mass = 0.9 * sol.theta[j] * dist.pgf_derivative(sol.theta[j], 1);
            CHECK(std::abs(sol.x_si[j] + sol.x_ss[j] - mass) < 1e-6);
        }
    }
}

TEST_CASE("monotonicity along the solution") {
    const auto poi = DegreeDistribution::poisson(5.0);
    const auto sol = solve_lln(poi, 0.7, 0.9, 2.0);
    for (std::size_t j = 1; j < sol.size(); ++j) {
        CHECK(sol.theta[j] <= sol.theta[j - 1] + 1e-12);
        CHECK(sol.x_s[j] <= sol.x_s[j - 1] + 1e-12);
        CHECK(sol.x_ss[j] <= sol.x_ss[j - 1] + 1e-12);
        CHECK(sol.x_s[j] > 0.0);
        CHECK(sol.theta[j] > 0.0);
        CHECK(sol.x_si[j] >= 0.0);
        CHECK(sol.x_ss[j] >= 0.0);
    }
}

TEST_CASE("infected fraction: endpoints on the grid, monotone growth") {
    const auto poi = DegreeDistribution::poisson(5.0);
    const auto sol = solve_lln(poi, 0.5, 0.9, 2.0);
    CHECK(infected_fraction(sol, poi, 0.0) == doctest::Approx(0.1).epsilon(1e-12));
    double prev = 0.0;
    for (double t = 0.0; t <= 2.0; t += 0.05) {
        const double f = infected_fraction(sol, poi, t);
        CHECK(f >= prev - 1e-12);
        prev = f;
    }
    CHECK_THROWS_AS(infected_fraction(sol, poi, 2.5), netdiff::config_error);
    CHECK_THROWS_AS(infected_fraction(sol, poi, -0.1), netdiff::config_error);
}

TEST_CASE("singular initial state is reported, not clamped") {
    const auto poi = DegreeDistribution::poisson(5.0);
    CHECK_THROWS_AS(solve_lln(poi, 0.5, 1e-13, 1.0), netdiff::singular_error);
}

TEST_CASE("argument validation") {
    const auto poi = DegreeDistribution::poisson(5.0);
    CHECK_THROWS_AS(solve_lln(poi, 0.5, 0.9, 0.0), netdiff::config_error);
    CHECK_THROWS_AS(solve_lln(poi, -0.5, 0.9, 1.0), netdiff::config_error);
}
