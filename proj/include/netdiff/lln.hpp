#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "netdiff/common.hpp"
#include "netdiff/degree.hpp"

namespace netdiff {

// Large-graph limit fractions at time zero for a uniformly random infected
// set of share 1 - alpha_s.
struct InitialAlpha {
    double s = 0.0;
    double si = 0.0;
    double ss = 0.0;
};

inline InitialAlpha initial_alpha(const DegreeDistribution& dist, double alpha_s) {
    if (!(alpha_s > 0.0 && alpha_s <= 1.0))
        throw config_error("initial_alpha: alpha_s must lie in (0, 1]");
    const double mean_degree = dist.pgf_derivative(1.0, 1);
    return InitialAlpha{alpha_s, alpha_s * (1.0 - alpha_s) * mean_degree,
                        alpha_s * alpha_s * mean_degree};
}

struct MeanFieldState {
    double x_s = 0.0;
    double x_si = 0.0;
    double x_ss = 0.0;
    double theta = 1.0;
};

struct MeanDrift {
    double s = 0.0;
    double si = 0.0;
    double ss = 0.0;
    double theta = 0.0;
};

// Drift of the limiting ODE. Requires x_s and the PGF derivative at theta
// to stay above the singular floor.
inline MeanDrift mean_drift(const MeanFieldState& y, const DegreeDistribution& dist,
                            double beta, double alpha_s) {
    if (!(y.x_s > k_singular_floor))
        throw singular_error("mean_drift: susceptible fraction at singular floor");
    const double dpsi = dist.pgf_derivative(y.theta, 1);
    if (!(dpsi > k_singular_floor))
        throw singular_error("mean_drift: PGF derivative at singular floor");
    const double kap = dist.kappa(y.theta);
    MeanDrift f;
    f.s = -beta * y.x_si;
    f.si = beta * kap * (y.x_si / y.x_s) * (y.x_ss - y.x_si) - beta * y.x_si;
    f.ss = -2.0 * beta * kap * y.x_si * y.x_ss / y.x_s;
    f.theta = -beta * y.x_si / (alpha_s * dpsi);
    return f;
}

// Dense RK4 solution of the limit ODE on a uniform grid.
class LlnSolution {
public:
    std::vector<double> t;
    std::vector<double> x_s;
    std::vector<double> x_si;
    std::vector<double> x_ss;
    std::vector<double> theta;

    double beta = 0.0;
    double alpha_s = 0.0;
    double horizon = 0.0;
    double step = 0.0;
    std::string dist_descriptor;

    // True when integration stopped before the horizon at the singular
    // guard; t.back() is then the last valid time.
    bool truncated = false;
    // Sup-norm discrepancy against a half-step integration (order-4 check).
    double refinement_sup_error = 0.0;

    std::size_t size() const { return t.size(); }

    MeanFieldState at_index(std::size_t j) const {
        return MeanFieldState{x_s[j], x_si[j], x_ss[j], theta[j]};
    }

    // Linear interpolation between grid nodes.
    MeanFieldState at_time(double when) const {
        const auto [j, w] = locate(when);
        if (w == 0.0) return at_index(j);
        MeanFieldState a = at_index(j), b = at_index(j + 1);
        return MeanFieldState{a.x_s + w * (b.x_s - a.x_s), a.x_si + w * (b.x_si - a.x_si),
                              a.x_ss + w * (b.x_ss - a.x_ss),
                              a.theta + w * (b.theta - a.theta)};
    }

    std::pair<std::size_t, double> locate(double when) const {
        if (when < t.front() || when > t.back() + 1e-12 * (1.0 + t.back()))
            throw config_error("time outside the solved grid");
        if (when >= t.back()) return {t.size() - 1, 0.0};
        const double pos = (when - t.front()) / step;
        auto j = static_cast<std::size_t>(pos);
        if (j >= t.size() - 1) j = t.size() - 2;
        const double w = (when - t[j]) / step;
        return {j, w};
    }
};

namespace detail {

inline std::array<double, 4> drift_array(const std::array<double, 4>& y,
                                         const DegreeDistribution& dist, double beta,
                                         double alpha_s) {
    const MeanDrift f =
        mean_drift(MeanFieldState{y[0], y[1], y[2], y[3]}, dist, beta, alpha_s);
    return {f.s, f.si, f.ss, f.theta};
}

// One classical RK4 step; throws singular_error if any stage is degenerate.
inline std::array<double, 4> rk4_step(const std::array<double, 4>& y, double h,
                                      const DegreeDistribution& dist, double beta,
                                      double alpha_s) {
    const auto k1 = drift_array(y, dist, beta, alpha_s);
    std::array<double, 4> tmp;
    for (int i = 0; i < 4; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
    const auto k2 = drift_array(tmp, dist, beta, alpha_s);
    for (int i = 0; i < 4; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
    const auto k3 = drift_array(tmp, dist, beta, alpha_s);
    for (int i = 0; i < 4; ++i) tmp[i] = y[i] + h * k3[i];
    const auto k4 = drift_array(tmp, dist, beta, alpha_s);
    std::array<double, 4> out;
    for (int i = 0; i < 4; ++i)
        out[i] = y[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    // Roundoff (or near-absorption undershoot) can leave tiny negatives in
    // the edge densities; floor them so downstream formulas stay valid.
    for (int i = 1; i <= 2; ++i)
        if (out[i] < 0.0 && out[i] > -1e-9) out[i] = 0.0;
    return out;
}

inline std::vector<std::array<double, 4>> integrate(const DegreeDistribution& dist,
                                                    double beta, double alpha_s,
                                                    std::size_t steps, double h,
                                                    bool& truncated) {
    const InitialAlpha a0 = initial_alpha(dist, alpha_s);
    std::vector<std::array<double, 4>> out;
    out.reserve(steps + 1);
    out.push_back({a0.s, a0.si, a0.ss, 1.0});
    truncated = false;
    for (std::size_t j = 0; j < steps; ++j) {
        try {
            out.push_back(rk4_step(out.back(), h, dist, beta, alpha_s));
        } catch (const singular_error&) {
            truncated = true;
            break;
        }
    }
    return out;
}

} // namespace detail

// Solves the limit ODE with classical RK4 on a uniform grid. `h <= 0`
// selects the default step T/2000. Every call also integrates at h/2 and
// records the sup-norm discrepancy on the shared nodes as a convergence
// check.
inline LlnSolution solve_lln(const DegreeDistribution& dist, double beta, double alpha_s,
                             double horizon, double h = 0.0) {
    if (!(horizon > 0.0)) throw config_error("solve_lln: T must be positive");
    if (beta < 0.0) throw config_error("solve_lln: beta must be non-negative");
    if (h <= 0.0) h = horizon / 2000.0;
    const auto steps = static_cast<std::size_t>(
        std::max<long long>(1, std::llround(horizon / h)));
    const double step = horizon / static_cast<double>(steps);

    bool truncated_full = false;
    bool truncated_half = false;
    const auto coarse =
        detail::integrate(dist, beta, alpha_s, steps, step, truncated_full);
    const auto fine =
        detail::integrate(dist, beta, alpha_s, 2 * steps, 0.5 * step, truncated_half);

    LlnSolution sol;
    sol.beta = beta;
    sol.alpha_s = alpha_s;
    sol.horizon = horizon;
    sol.step = step;
    sol.dist_descriptor = dist.descriptor();
    sol.truncated = truncated_full || truncated_half;

    const std::size_t nodes = std::min(coarse.size(), (fine.size() + 1) / 2);
    for (std::size_t j = 0; j < nodes; ++j) {
        sol.t.push_back(static_cast<double>(j) * step);
        sol.x_s.push_back(coarse[j][0]);
        sol.x_si.push_back(coarse[j][1]);
        sol.x_ss.push_back(coarse[j][2]);
        sol.theta.push_back(coarse[j][3]);
        for (int c = 0; c < 4; ++c)
            sol.refinement_sup_error = std::max(
                sol.refinement_sup_error, std::abs(coarse[j][c] - fine[2 * j][c]));
    }
    if (sol.truncated && sol.t.size() <= 1)
        throw singular_error("solve_lln: singular state at the initial condition");
    if (sol.refinement_sup_error > 1e-4)
        throw singular_error("solve_lln: step-halving check failed; step too coarse");
    return sol;
}

// 1 - alpha_s * psi(theta(t)): limiting infected share.
inline double infected_fraction(const LlnSolution& sol, const DegreeDistribution& dist,
                                double when) {
    const MeanFieldState y = sol.at_time(when);
    return 1.0 - sol.alpha_s * dist.pgf(y.theta);
}

} // namespace netdiff
