#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "netdiff/common.hpp"
#include "netdiff/degree.hpp"
#include "netdiff/fclt.hpp"
#include "netdiff/gillespie.hpp"
#include "netdiff/graph.hpp"
#include "netdiff/lln.hpp"
#include "netdiff/parallel.hpp"
#include "netdiff/rng.hpp"

namespace netdiff {

namespace detail {

inline double log_sum_exp(const std::vector<double>& logs) {
    double peak = -std::numeric_limits<double>::infinity();
    for (double v : logs) peak = std::max(peak, v);
    if (!std::isfinite(peak)) return peak;
    double acc = 0.0;
    for (double v : logs) acc += std::exp(v - peak);
    return peak + std::log(acc);
}

} // namespace detail

// One full replica: fresh degree sequence, fresh pairing, fresh initial
// infection, one event log. All randomness comes from `rng`.
inline Trajectory run_replica(const DegreeDistribution& dist, int n, GraphMode mode,
                              double beta, double alpha_s, double horizon, Rng& rng) {
    const auto degrees = dist.sample_degree_sequence(n, rng);
    const Graph graph = build_configuration_model(degrees, mode, rng);
    Trajectory traj = simulate(graph, beta, alpha_s, horizon, rng);
    traj.dist_descriptor = dist.descriptor();
    return traj;
}

// ---------------------------------------------------------------------------
// Percolation profiles
// ---------------------------------------------------------------------------

struct PercolationProfile {
    std::vector<double> betas;
    std::vector<double> times;
    std::vector<std::vector<double>> fraction; // [beta][time]
    std::vector<std::vector<bool>> valid;      // false where the solver hit the guard
    double alpha_s = 0.0;
    double horizon = 0.0;
    std::string dist_descriptor;
};

inline PercolationProfile percolation_profile(const DegreeDistribution& dist,
                                              double alpha_s,
                                              const std::vector<double>& beta_grid,
                                              double horizon, int time_points,
                                              double h = 0.0, int threads = 1) {
    if (beta_grid.empty()) throw config_error("percolation_profile: empty beta grid");
    for (std::size_t i = 0; i < beta_grid.size(); ++i) {
        if (beta_grid[i] < 0.0)
            throw config_error("percolation_profile: beta must be non-negative");
        if (i > 0 && beta_grid[i] <= beta_grid[i - 1])
            throw config_error("percolation_profile: beta grid must be ascending");
    }
    if (time_points < 2) throw config_error("percolation_profile: need at least 2 time points");

    PercolationProfile profile;
    profile.betas = beta_grid;
    profile.alpha_s = alpha_s;
    profile.horizon = horizon;
    profile.dist_descriptor = dist.descriptor();
    profile.times.resize(static_cast<std::size_t>(time_points));
    for (int j = 0; j < time_points; ++j)
        profile.times[static_cast<std::size_t>(j)] =
            horizon * static_cast<double>(j) / static_cast<double>(time_points - 1);
    profile.fraction.assign(beta_grid.size(),
                            std::vector<double>(profile.times.size(), 0.0));
    profile.valid.assign(beta_grid.size(), std::vector<bool>(profile.times.size(), false));

    run_indexed(static_cast<int>(beta_grid.size()), threads, [&](int bi) {
        const auto b = static_cast<std::size_t>(bi);
        LlnSolution sol;
        try {
            sol = solve_lln(dist, beta_grid[b], alpha_s, horizon, h);
        } catch (const singular_error&) {
            return; // whole row stays flagged invalid
        }
        for (std::size_t j = 0; j < profile.times.size(); ++j) {
            const double when = profile.times[j];
            if (sol.truncated && when > sol.t.back()) continue;
            profile.fraction[b][j] = infected_fraction(sol, dist, when);
            profile.valid[b][j] = true;
        }
    });
    return profile;
}

// True when the infected share reaches `level` by `deadline` at the grid
// beta nearest to the query (query must lie inside the grid range).
inline bool percolates(const PercolationProfile& profile, double beta, double level,
                       double deadline) {
    const double lo = profile.betas.front();
    const double hi = profile.betas.back();
    const double span = std::max(hi - lo, 1e-12);
    if (beta < lo - 1e-9 * span || beta > hi + 1e-9 * span)
        throw config_error("percolates: beta outside the profile grid");
    std::size_t best = 0;
    for (std::size_t b = 1; b < profile.betas.size(); ++b)
        if (std::abs(profile.betas[b] - beta) < std::abs(profile.betas[best] - beta))
            best = b;
    for (std::size_t j = 0; j < profile.times.size(); ++j) {
        if (profile.times[j] > deadline) break;
        // small slack so exact-boundary levels (e.g. the initial share) hit
        if (profile.valid[best][j] && profile.fraction[best][j] >= level - 1e-12)
            return true;
    }
    return false;
}

// ---------------------------------------------------------------------------
// Giant component
// ---------------------------------------------------------------------------

struct GiantComponent {
    double theta_inf = 1.0;
    double fraction = 0.0;
    double residual = 0.0;
};

// Solves mean_degree * theta = psi'(theta) on (0, 1) by bisection and
// reports the asymptotic component share 1 - psi(theta). Subcritical input
// (mean degree <= 1, or no sign change) returns the trivial root.
inline GiantComponent giant_component_fraction(const DegreeDistribution& dist) {
    const double mean_degree = dist.pgf_derivative(1.0, 1);
    GiantComponent out;
    if (mean_degree <= 1.0) return out;
    const auto g = [&](double th) { return mean_degree * th - dist.pgf_derivative(th, 1); };

    double hi = -1.0;
    for (int j = 1; j <= 48; ++j) {
        const double cand = 1.0 - std::pow(0.5, j);
        if (g(cand) > 1e-14) {
            hi = cand;
            break;
        }
    }
    if (hi < 0.0) return out; // no interior sign change: treat as subcritical

    double lo = 0.0; // g(0) = -p_1 <= 0
    double mid = hi;
    for (int it = 0; it < 200; ++it) {
        mid = 0.5 * (lo + hi);
        const double val = g(mid);
        if (std::abs(val) < 1e-13 || hi - lo < 1e-16) break;
        if (val > 0.0) hi = mid;
        else lo = mid;
    }
    out.theta_inf = mid;
    out.fraction = 1.0 - dist.pgf(mid);
    out.residual = std::abs(g(mid));
    return out;
}

// ---------------------------------------------------------------------------
// Discounted exponential cost
// ---------------------------------------------------------------------------

enum class CostMethod { monte_carlo, gaussian };

inline const char* to_string(CostMethod m) {
    return m == CostMethod::monte_carlo ? "monte_carlo" : "gaussian";
}

struct CostParams {
    int n = 1000;
    double beta = 0.5;
    double alpha_s = 0.9;
    double gamma = 1.0;
    double c = 1e-3;
    double horizon = 3.0;
    int replicas = 500;
    GraphMode mode = GraphMode::erased;
    std::uint64_t seed = 0;
    int threads = 1;
    double h = 0.0;
};

struct CostReport {
    std::string method;
    double log_value = 0.0;
    // Standard error of log_value (Monte-Carlo only; NaN for gaussian).
    double log_std_error = std::numeric_limits<double>::quiet_NaN();
    // Per-replica log integrals (MC) or per-node log integrand (gaussian).
    std::vector<double> log_samples;
};

// log of int_0^T exp(-gamma t + c X_I(t)) dt for one event log; the path is
// piecewise constant so each segment integrates in closed form, and the
// segments combine by log-sum-exp.
inline double log_cost_of_trajectory(const Trajectory& traj, double gamma, double c) {
    std::vector<double> seg_logs;
    double t_prev = 0.0;
    auto x_i = static_cast<double>(traj.initial.x_i);
    const auto segment = [&](double a, double b, double infected) {
        if (b <= a) return;
        seg_logs.push_back(c * infected - gamma * a +
                           std::log1p(-std::exp(-gamma * (b - a))) - std::log(gamma));
    };
    for (const auto& ev : traj.events) {
        segment(t_prev, ev.t, x_i);
        t_prev = ev.t;
        x_i += 1.0; // each event infects exactly one node
    }
    segment(t_prev, traj.horizon, x_i);
    return detail::log_sum_exp(seg_logs);
}

inline CostReport discounted_cost(const DegreeDistribution& dist, const CostParams& p,
                                  CostMethod method) {
    if (!(p.gamma > 0.0)) throw config_error("discounted_cost: gamma must be positive");
    if (!(p.c > 0.0)) throw config_error("discounted_cost: c must be positive");
    if (!(p.horizon > 0.0)) throw config_error("discounted_cost: T must be positive");

    CostReport report;
    report.method = to_string(method);

    if (method == CostMethod::monte_carlo) {
        if (p.replicas < 1) throw config_error("discounted_cost: need replicas >= 1");
        std::vector<double> logs(static_cast<std::size_t>(p.replicas));
        run_indexed(p.replicas, p.threads, [&](int r) {
            Rng rng = Rng::stream(p.seed, static_cast<std::uint64_t>(r));
            const Trajectory traj =
                run_replica(dist, p.n, p.mode, p.beta, p.alpha_s, p.horizon, rng);
            logs[static_cast<std::size_t>(r)] = log_cost_of_trajectory(traj, p.gamma, p.c);
        });
        const double log_r = std::log(static_cast<double>(p.replicas));
        const double log_mean = detail::log_sum_exp(logs) - log_r;
        std::vector<double> doubled(logs.size());
        for (std::size_t i = 0; i < logs.size(); ++i) doubled[i] = 2.0 * logs[i];
        const double log_mean_sq = detail::log_sum_exp(doubled) - log_r;
        // relative second moment E[C^2]/E[C]^2 >= 1, stable in log domain
        const double rel2 = std::exp(log_mean_sq - 2.0 * log_mean);
        const double rel_var = std::max(rel2 - 1.0, 0.0);
        report.log_value = log_mean;
        report.log_std_error =
            std::sqrt(rel_var / static_cast<double>(p.replicas));
        report.log_samples = std::move(logs);
        return report;
    }

    // Gaussian closure: E[exp(c X_I)] ~ exp(c n (1 - x_S) + c^2 n Sigma_SS / 2)
    // with Sigma_SS the fluctuation variance of the susceptible count.
    const LlnSolution lln = solve_lln(dist, p.beta, p.alpha_s, p.horizon, p.h);
    const FcltSolution fclt = solve_fclt(lln, dist, p.beta);
    const double n = static_cast<double>(p.n);
    std::vector<double> node_logs(lln.size());
    std::vector<double> weighted(lln.size());
    for (std::size_t j = 0; j < lln.size(); ++j) {
        const double g = -p.gamma * lln.t[j] + p.c * n * (1.0 - lln.x_s[j]) +
                         0.5 * p.c * p.c * n * fclt.sigma[j](0, 0);
        node_logs[j] = g;
        const double w =
            (j == 0 || j + 1 == lln.size()) ? 0.5 * lln.step : lln.step;
        weighted[j] = g + std::log(w);
    }
    report.log_value = detail::log_sum_exp(weighted);
    report.log_samples = std::move(node_logs);
    return report;
}

// ---------------------------------------------------------------------------
// Monte-Carlo versus theory
// ---------------------------------------------------------------------------

struct CompareParams {
    int n = 2000;
    double beta = 0.5;
    double alpha_s = 0.9;
    double horizon = 1.0;
    int replicas = 2000;
    std::vector<double> checkpoints{0.5, 1.0};
    double jump_window = 0.2;
    GraphMode mode = GraphMode::erased;
    std::uint64_t seed = 0;
    int threads = 1;
    double h = 0.0;
    int batches = 40; // replica batches for the jump-correlation standard error
    // The mean of X/n carries a deterministic O(1/n) correction relative to
    // the limit path that no replica count averages away; the mean tolerance
    // is 3 CLT standard errors plus this constant over n.
    double mean_bias_allowance = 10.0;
};

struct CheckpointReport {
    double t = 0.0;
    Vec3 mean_emp{};   // mean of X(t)/n over replicas
    Vec3 mean_theory{};
    Vec3 mean_se{};    // sqrt(Sigma_jj / n) / sqrt(R)
    Vec3 mean_z{};     // gap over the CLT standard error alone
    Vec3 mean_tol{};   // 3 se + bias allowance / n
    bool mean_ok = true;

    Mat3 cov_emp;      // covariance of Y(t)
    Mat3 cov_theory;   // Sigma(t)
    Mat3 cov_se;
    std::array<bool, 9> cov_ok_entry{};
    bool cov_ok = true;

    double rho_emp = 0.0;
    double rho_theory_window = 0.0;
    double rho_theory_instant = 0.0;
    double rho_se = 0.0;
    std::int64_t rho_events = 0;
    bool rho_ok = true;
};

struct CompareReport {
    Mat3 sigma0; // covariance of Y(0), used as the initial condition
    std::vector<CheckpointReport> checkpoints;
    bool pass = true;
};

namespace detail {

struct ReplicaSummary {
    Vec3 y0{};
    std::vector<std::array<std::int64_t, 3>> counts_at; // per checkpoint, raw counts
    // jump sums per checkpoint window: events, sum dx_si, sum dx_si^2
    std::vector<std::array<double, 3>> jumps;
};

inline Mat3 sample_covariance(const std::vector<Vec3>& samples) {
    const auto r = static_cast<double>(samples.size());
    Vec3 mean{};
    for (const auto& s : samples)
        for (int i = 0; i < 3; ++i) mean[static_cast<std::size_t>(i)] += s[static_cast<std::size_t>(i)];
    for (int i = 0; i < 3; ++i) mean[static_cast<std::size_t>(i)] /= r;
    Mat3 cov = Mat3::zero();
    for (const auto& s : samples)
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                cov(i, j) += (s[static_cast<std::size_t>(i)] - mean[static_cast<std::size_t>(i)]) *
                             (s[static_cast<std::size_t>(j)] - mean[static_cast<std::size_t>(j)]);
    return cov * (1.0 / (r - 1.0));
}

} // namespace detail

inline CompareReport compare_mc_theory(const DegreeDistribution& dist,
                                       const CompareParams& p) {
    if (p.replicas < 2) throw config_error("compare_mc_theory: need at least 2 replicas");
    if (p.checkpoints.empty())
        throw config_error("compare_mc_theory: need at least one checkpoint");
    for (double t : p.checkpoints)
        if (t < 0.0 || t > p.horizon)
            throw config_error("compare_mc_theory: checkpoint outside [0, T]");

    const auto m = p.checkpoints.size();
    const InitialAlpha a0 = initial_alpha(dist, p.alpha_s);
    const double root_n = std::sqrt(static_cast<double>(p.n));
    const double n_real = static_cast<double>(p.n);

    std::vector<detail::ReplicaSummary> summaries(static_cast<std::size_t>(p.replicas));
    run_indexed(p.replicas, p.threads, [&](int r) {
        Rng rng = Rng::stream(p.seed, static_cast<std::uint64_t>(r));
        const Trajectory traj =
            run_replica(dist, p.n, p.mode, p.beta, p.alpha_s, p.horizon, rng);
        auto& summary = summaries[static_cast<std::size_t>(r)];
        summary.y0 = Vec3{
            (static_cast<double>(traj.initial.x_s) - n_real * a0.s) / root_n,
            (static_cast<double>(traj.initial.x_si) - n_real * a0.si) / root_n,
            (static_cast<double>(traj.initial.x_ss) - n_real * a0.ss) / root_n};
        summary.counts_at.resize(m);
        summary.jumps.assign(m, {0.0, 0.0, 0.0});
        for (std::size_t ci = 0; ci < m; ++ci) {
            const Counts c = traj.counts_at(p.checkpoints[ci]);
            summary.counts_at[ci] = {c.x_s, c.x_si, c.x_ss};
            const double t0 = std::max(0.0, p.checkpoints[ci] - 0.5 * p.jump_window);
            const double t1 = std::min(p.horizon, p.checkpoints[ci] + 0.5 * p.jump_window);
            for (const auto& ev : traj.events) {
                if (ev.t < t0) continue;
                if (ev.t > t1) break;
                summary.jumps[ci][0] += 1.0;
                summary.jumps[ci][1] += static_cast<double>(ev.dx_si);
                summary.jumps[ci][2] +=
                    static_cast<double>(ev.dx_si) * static_cast<double>(ev.dx_si);
            }
        }
    });

    std::vector<Vec3> y0_samples;
    y0_samples.reserve(summaries.size());
    for (const auto& s : summaries) y0_samples.push_back(s.y0);
    const Mat3 sigma0 = detail::sample_covariance(y0_samples);

    const LlnSolution lln = solve_lln(dist, p.beta, p.alpha_s, p.horizon, p.h);
    FcltOptions opts;
    opts.sigma0 = sigma0;
    const FcltSolution fclt = solve_fclt(lln, dist, p.beta, opts);

    CompareReport report;
    report.sigma0 = sigma0;
    const auto r_count = static_cast<double>(p.replicas);

    for (std::size_t ci = 0; ci < m; ++ci) {
        CheckpointReport cp;
        cp.t = p.checkpoints[ci];
        const MeanFieldState xs = lln.at_time(cp.t);
        cp.mean_theory = Vec3{xs.x_s, xs.x_si, xs.x_ss};
        const Mat3 sigma_t = fclt.sigma_at(cp.t);
        cp.cov_theory = sigma_t;

        std::vector<Vec3> y_samples;
        y_samples.reserve(summaries.size());
        std::array<std::int64_t, 3> totals{0, 0, 0};
        for (const auto& s : summaries) {
            const auto& counts = s.counts_at[ci];
            y_samples.push_back(
                Vec3{(static_cast<double>(counts[0]) - n_real * xs.x_s) / root_n,
                     (static_cast<double>(counts[1]) - n_real * xs.x_si) / root_n,
                     (static_cast<double>(counts[2]) - n_real * xs.x_ss) / root_n});
            for (int i = 0; i < 3; ++i)
                totals[static_cast<std::size_t>(i)] += counts[static_cast<std::size_t>(i)];
        }
        for (int i = 0; i < 3; ++i)
            cp.mean_emp[static_cast<std::size_t>(i)] =
                static_cast<double>(totals[static_cast<std::size_t>(i)]) /
                (r_count * n_real);

        for (int i = 0; i < 3; ++i) {
            const auto iu = static_cast<std::size_t>(i);
            cp.mean_se[iu] = std::sqrt(std::max(sigma_t(i, i), 0.0) / n_real) /
                             std::sqrt(r_count);
            cp.mean_tol[iu] = 3.0 * cp.mean_se[iu] + p.mean_bias_allowance / n_real;
            const double diff = cp.mean_emp[iu] - cp.mean_theory[iu];
            if (diff == 0.0) cp.mean_z[iu] = 0.0;
            else if (cp.mean_se[iu] > 0.0) cp.mean_z[iu] = diff / cp.mean_se[iu];
            else cp.mean_z[iu] = std::numeric_limits<double>::infinity();
            if (std::abs(diff) > cp.mean_tol[iu]) cp.mean_ok = false;
        }

        cp.cov_emp = detail::sample_covariance(y_samples);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                const double se = std::sqrt(
                    (cp.cov_emp(i, i) * cp.cov_emp(j, j) + cp.cov_emp(i, j) * cp.cov_emp(i, j)) /
                    (r_count - 1.0));
                cp.cov_se(i, j) = se;
                const double tol =
                    std::max(0.10 * std::abs(sigma_t(i, j)), 3.0 * se);
                const bool ok = std::abs(cp.cov_emp(i, j) - sigma_t(i, j)) <= tol;
                cp.cov_ok_entry[static_cast<std::size_t>(3 * i + j)] = ok;
                if (!ok) cp.cov_ok = false;
            }

        // Pooled jump correlation over the window, batched standard error.
        const double t0 = std::max(0.0, cp.t - 0.5 * p.jump_window);
        const double t1 = std::min(p.horizon, cp.t + 0.5 * p.jump_window);
        double events = 0.0, cross = 0.0, sq = 0.0;
        for (const auto& s : summaries) {
            events += s.jumps[ci][0];
            cross += -s.jumps[ci][1]; // dx_s = -1 per event
            sq += s.jumps[ci][2];
        }
        cp.rho_events = static_cast<std::int64_t>(events);
        if (events > 0.0 && sq > 0.0) {
            cp.rho_emp = cross / std::sqrt(events * sq);
            const int batches = std::max(2, std::min(p.batches, p.replicas));
            std::vector<double> batch_rho;
            const int per = p.replicas / batches;
            for (int b = 0; b < batches; ++b) {
                double be = 0.0, bc = 0.0, bs = 0.0;
                const int lo = b * per;
                const int hi = (b + 1 == batches) ? p.replicas : (b + 1) * per;
                for (int r = lo; r < hi; ++r) {
                    const auto& s = summaries[static_cast<std::size_t>(r)];
                    be += s.jumps[ci][0];
                    bc += -s.jumps[ci][1];
                    bs += s.jumps[ci][2];
                }
                if (be > 0.0 && bs > 0.0) batch_rho.push_back(bc / std::sqrt(be * bs));
            }
            double mean_b = 0.0;
            for (double v : batch_rho) mean_b += v;
            mean_b /= static_cast<double>(batch_rho.size());
            double var_b = 0.0;
            for (double v : batch_rho) var_b += (v - mean_b) * (v - mean_b);
            var_b /= std::max<double>(1.0, static_cast<double>(batch_rho.size()) - 1.0);
            cp.rho_se = std::sqrt(var_b / static_cast<double>(batch_rho.size()));
            cp.rho_theory_window = jump_correlation_window(fclt, t0, t1);
            cp.rho_theory_instant = jump_correlation(fclt, cp.t);
            cp.rho_ok =
                std::abs(cp.rho_emp - cp.rho_theory_window) <= 3.0 * cp.rho_se;
        } else {
            // no events in the window (frozen dynamics): correlation is moot
            cp.rho_ok = true;
        }

        if (!cp.mean_ok || !cp.cov_ok || !cp.rho_ok) report.pass = false;
        report.checkpoints.push_back(std::move(cp));
    }
    return report;
}

} // namespace netdiff
