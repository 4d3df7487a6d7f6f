#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "netdiff/common.hpp"
#include "netdiff/degree.hpp"
#include "netdiff/gillespie.hpp"
#include "netdiff/linalg.hpp"
#include "netdiff/lln.hpp"
#include "netdiff/rng.hpp"

namespace netdiff {

// Component order used for every 3x3 object below: (S, SI, SS).

// Instantaneous covariance rate of the jump noise at a mean-field state.
// All entries carry a factor x_si, so an absorbed state yields the zero
// matrix.
inline Mat3 v_matrix(const MeanFieldState& y, const DegreeDistribution& dist,
                     double beta) {
    Mat3 v = Mat3::zero();
    if (y.x_si <= 0.0) return v;
    if (!(y.x_s > k_singular_floor))
        throw singular_error("v_matrix: susceptible fraction at singular floor");
    const double d2 = dist.d_operator(y.theta, 2);
    const double d3 = dist.d_operator(y.theta, 3);
    const double si = y.x_si, ss = y.x_ss, s = y.x_s;
    const double diff = ss - si;

    const double v_s = beta * si;
    const double v_si =
        beta * (si * diff * diff / (s * s) * d3 - si * (ss - 3.0 * si) / s * d2 + si);
    const double v_ss = 4.0 * beta * (si * ss / s) * ((ss / s) * d3 + d2);
    const double v_s_si = -beta * (si * diff / s * d2 - si);
    const double v_s_ss = 2.0 * beta * si * ss / s * d2;
    const double v_si_ss = -2.0 * beta * si * ss * diff / (s * s) * d3;

    v(0, 0) = v_s;
    v(1, 1) = v_si;
    v(2, 2) = v_ss;
    v(0, 1) = v(1, 0) = v_s_si;
    v(0, 2) = v(2, 0) = v_s_ss;
    v(1, 2) = v(2, 1) = v_si_ss;
    return v;
}

// Jacobian of the drift with respect to (x_s, x_si, x_ss), theta held fixed.
// The resulting linear transport is exact when kappa and the D operators are
// constant in theta (poisson, regular); for strongly heterogeneous tables the
// degree composition of the infected set is an extra fluctuation coordinate
// that a three-dimensional closure cannot carry.
inline Mat3 drift_jacobian(const MeanFieldState& y, const DegreeDistribution& dist,
                           double beta) {
    if (!(y.x_s > k_singular_floor))
        throw singular_error("drift_jacobian: susceptible fraction at singular floor");
    const double kap = dist.kappa(y.theta);
    const double si = y.x_si, ss = y.x_ss, s = y.x_s;
    Mat3 a = Mat3::zero();
    a(0, 1) = -beta;
    a(1, 0) = -beta * kap * si * (ss - si) / (s * s);
    a(1, 1) = beta * kap * (ss - 2.0 * si) / s - beta;
    a(1, 2) = beta * kap * si / s;
    a(2, 0) = 2.0 * beta * kap * si * ss / (s * s);
    a(2, 1) = -2.0 * beta * kap * ss / s;
    a(2, 2) = -2.0 * beta * kap * si / s;
    return a;
}

struct FcltOptions {
    Mat3 sigma0 = Mat3::zero(); // fluctuation covariance at time zero
    bool freeze_jacobian = false; // drop the linear transport term (testing hook)
};

// Grid-aligned fluctuation theory along a solved mean-field path: the rate
// matrix v(t), its running integral V(t), the drift Jacobian A(t), and the
// fluctuation covariance Sigma(t) solving
//   dSigma/dt = A Sigma + Sigma A^T + v,  Sigma(0) = sigma0.
class FcltSolution {
public:
    std::vector<double> t;
    std::vector<Mat3> v;
    std::vector<Mat3> big_v;
    std::vector<Mat3> jacobian;
    std::vector<Mat3> sigma;

    double beta = 0.0;
    double step = 0.0;
    std::string dist_descriptor;

    std::size_t size() const { return t.size(); }

    Mat3 interpolate(const std::vector<Mat3>& series, double when) const {
        const auto [j, w] = locate(when);
        if (w == 0.0) return series[j];
        return series[j] * (1.0 - w) + series[j + 1] * w;
    }

    Mat3 v_at(double when) const { return interpolate(v, when); }
    Mat3 big_v_at(double when) const { return interpolate(big_v, when); }
    Mat3 sigma_at(double when) const { return interpolate(sigma, when); }

    std::pair<std::size_t, double> locate(double when) const {
        if (when < t.front() || when > t.back() + 1e-12 * (1.0 + t.back()))
            throw config_error("time outside the solved grid");
        if (when >= t.back()) return {t.size() - 1, 0.0};
        const double pos = (when - t.front()) / step;
        auto j = static_cast<std::size_t>(pos);
        if (j >= t.size() - 1) j = t.size() - 2;
        return {j, (when - t[j]) / step};
    }
};

namespace detail {

struct AugmentedState {
    std::array<double, 4> y{};
    Mat3 big_v;
    Mat3 sigma;
};

inline Mat3 sigma_rate(const Mat3& v, const std::array<double, 4>& y, const Mat3& sigma,
                       const DegreeDistribution& dist, double beta,
                       bool freeze_jacobian) {
    Mat3 rate = v;
    if (!freeze_jacobian) {
        const Mat3 a = drift_jacobian(MeanFieldState{y[0], y[1], y[2], y[3]}, dist, beta);
        rate += a.matmul(sigma) + sigma.matmul(a.transposed());
    }
    return rate;
}

} // namespace detail

// Evaluates v and A on the mean-field grid and propagates both running
// integrals with RK4 on the coupled (state, V, Sigma) system, so V and
// Sigma carry the same fourth-order accuracy as the path itself.
inline FcltSolution solve_fclt(const LlnSolution& lln, const DegreeDistribution& dist,
                               double beta, const FcltOptions& opts = {}) {
    if (lln.size() == 0) throw config_error("solve_fclt: empty mean-field solution");
    FcltSolution out;
    out.t = lln.t;
    out.beta = beta;
    out.step = lln.step;
    out.dist_descriptor = lln.dist_descriptor;
    out.v.reserve(lln.size());
    out.big_v.reserve(lln.size());
    out.jacobian.reserve(lln.size());
    out.sigma.reserve(lln.size());

    const double h = lln.step;
    detail::AugmentedState cur;
    cur.y = {lln.x_s[0], lln.x_si[0], lln.x_ss[0], lln.theta[0]};
    cur.sigma = opts.sigma0;
    cur.sigma.symmetrize();

    for (std::size_t j = 0; j < lln.size(); ++j) {
        const MeanFieldState grid_state = lln.at_index(j);
        out.v.push_back(v_matrix(grid_state, dist, beta));
        out.big_v.push_back(cur.big_v);
        out.jacobian.push_back(drift_jacobian(grid_state, dist, beta));
        out.sigma.push_back(cur.sigma);

        if (j + 1 == lln.size()) break;

        // RK4 step of the coupled system; the state component repeats the
        // mean-field integration so stage values stay consistent.
        const auto f = [&](const detail::AugmentedState& z) {
            detail::AugmentedState d;
            d.y = detail::drift_array(z.y, dist, beta, lln.alpha_s);
            d.big_v = v_matrix(MeanFieldState{z.y[0], z.y[1], z.y[2], z.y[3]}, dist, beta);
            d.sigma =
                detail::sigma_rate(d.big_v, z.y, z.sigma, dist, beta, opts.freeze_jacobian);
            return d;
        };
        const auto advance = [](const detail::AugmentedState& z,
                                const detail::AugmentedState& d, double factor) {
            detail::AugmentedState n = z;
            for (int i = 0; i < 4; ++i) n.y[i] += factor * d.y[i];
            n.big_v += d.big_v * factor;
            n.sigma += d.sigma * factor;
            return n;
        };
        const auto k1 = f(cur);
        const auto k2 = f(advance(cur, k1, 0.5 * h));
        const auto k3 = f(advance(cur, k2, 0.5 * h));
        const auto k4 = f(advance(cur, k3, h));
        detail::AugmentedState next = cur;
        for (int i = 0; i < 4; ++i)
            next.y[i] += (h / 6.0) * (k1.y[i] + 2.0 * k2.y[i] + 2.0 * k3.y[i] + k4.y[i]);
        next.big_v += (k1.big_v + k2.big_v * 2.0 + k3.big_v * 2.0 + k4.big_v) * (h / 6.0);
        next.sigma += (k1.sigma + k2.sigma * 2.0 + k3.sigma * 2.0 + k4.sigma) * (h / 6.0);
        next.sigma.symmetrize();
        for (int i = 1; i <= 2; ++i)
            if (next.y[i] < 0.0 && next.y[i] > -1e-9) next.y[i] = 0.0;
        cur = next;
    }
    return out;
}

// Covariance series alone (convenience wrapper).
inline std::vector<Mat3> solve_sigma(const LlnSolution& lln, const DegreeDistribution& dist,
                                     double beta, const Mat3& sigma0 = Mat3::zero()) {
    FcltOptions opts;
    opts.sigma0 = sigma0;
    return solve_fclt(lln, dist, beta, opts).sigma;
}

// Scaled deviation of one replica from the mean-field path:
// Y(t) = (X(t) - n x(t)) / sqrt(n).
inline Vec3 fluctuation_sample(const Trajectory& traj, const LlnSolution& lln, double when) {
    const Counts c = traj.counts_at(when);
    const MeanFieldState y = lln.at_time(when);
    const double n = static_cast<double>(traj.n);
    const double root_n = std::sqrt(n);
    return Vec3{(static_cast<double>(c.x_s) - n * y.x_s) / root_n,
                (static_cast<double>(c.x_si) - n * y.x_si) / root_n,
                (static_cast<double>(c.x_ss) - n * y.x_ss) / root_n};
}

inline std::vector<Vec3> fluctuation_samples(const std::vector<Trajectory>& trajectories,
                                             const LlnSolution& lln, double when) {
    std::vector<Vec3> out;
    out.reserve(trajectories.size());
    for (const auto& traj : trajectories) {
        const auto& first = trajectories.front();
        if (traj.n != first.n || traj.beta != first.beta || traj.alpha_s != first.alpha_s ||
            traj.dist_descriptor != first.dist_descriptor)
            throw config_error("fluctuation_samples: replicas disagree on parameters");
        if (traj.beta != lln.beta || traj.alpha_s != lln.alpha_s)
            throw config_error("fluctuation_samples: trajectory and solution parameters differ");
        out.push_back(fluctuation_sample(traj, lln, when));
    }
    return out;
}

struct DiffusionPath {
    std::vector<double> t;
    std::vector<Vec3> counts; // synthetic (X_S, X_SI, X_SS), count scale
};

// Euler-Maruyama sample of the linear fluctuation equation, mapped back to
// count scale: X(t) = n x(t) + sqrt(n) U(t). Gaussian increments use the
// per-node rate matrix with covariance v(t_k) h.
inline DiffusionPath diffusion_sample_path(const LlnSolution& lln,
                                           const FcltSolution& fclt, int n, Rng& rng,
                                           const Vec3& u0 = Vec3{0.0, 0.0, 0.0}) {
    if (fclt.size() != lln.size())
        throw config_error("diffusion_sample_path: grids are not aligned");
    const double h = lln.step;
    const double root_n = std::sqrt(static_cast<double>(n));
    DiffusionPath path;
    path.t = lln.t;
    path.counts.resize(lln.size());
    Vec3 u = u0;
    for (std::size_t j = 0; j < lln.size(); ++j) {
        const MeanFieldState y = lln.at_index(j);
        Vec3 x{static_cast<double>(n) * y.x_s + root_n * u[0],
               static_cast<double>(n) * y.x_si + root_n * u[1],
               static_cast<double>(n) * y.x_ss + root_n * u[2]};
        x[0] = std::clamp(x[0], 0.0, static_cast<double>(n));
        x[1] = std::max(x[1], 0.0);
        x[2] = std::max(x[2], 0.0);
        path.counts[j] = x;

        if (j + 1 == lln.size()) break;
        const Mat3 step_cov = fclt.v[j] * h;
        const Mat3 l = cholesky_psd(step_cov, 1e-12 * std::max(step_cov.trace(), 0.0));
        const Vec3 z{rng.normal(), rng.normal(), rng.normal()};
        const Vec3 noise = l.apply(z);
        const Vec3 du = fclt.jacobian[j].apply(u);
        for (int i = 0; i < 3; ++i)
            u[static_cast<std::size_t>(i)] +=
                h * du[static_cast<std::size_t>(i)] + noise[static_cast<std::size_t>(i)];
    }
    return path;
}

struct Ellipse {
    double center_x = 0.0;
    double center_y = 0.0;
    double semi_major = 0.0;
    double semi_minor = 0.0;
    double angle_rad = 0.0;
};

// Confidence ellipse of a bivariate Gaussian: semi-axes sqrt(q * eigenvalue)
// with q the chi-square(2) quantile -2 ln(1 - level).
inline Ellipse confidence_ellipse(double var_x, double cov_xy, double var_y,
                                  double center_x, double center_y, double level) {
    if (!(level > 0.0 && level < 1.0))
        throw config_error("confidence_ellipse: level must lie in (0, 1)");
    const double scale = std::max({std::abs(var_x), std::abs(var_y), 1e-300});
    const Eig2 e = sym_eigen2(var_x, cov_xy, var_y);
    if (e.lambda_min < -1e-9 * scale)
        throw config_error("confidence_ellipse: covariance is not positive semidefinite");
    const double q = -2.0 * std::log1p(-level);
    Ellipse out;
    out.center_x = center_x;
    out.center_y = center_y;
    out.semi_major = std::sqrt(q * std::max(e.lambda_max, 0.0));
    out.semi_minor = std::sqrt(q * std::max(e.lambda_min, 0.0));
    const bool degenerate = std::abs(e.lambda_max - e.lambda_min) <= 1e-12 * scale;
    out.angle_rad = degenerate ? 0.0 : std::atan2(e.vy, e.vx);
    return out;
}

// Instantaneous correlation of the (S, SI) jump noise components.
inline double jump_correlation(const FcltSolution& fclt, double when) {
    const Mat3 v = fclt.v_at(when);
    const double denom = v(0, 0) * v(1, 1);
    if (!(denom > 0.0))
        throw config_error("jump_correlation: degenerate jump variance");
    return v(0, 1) / std::sqrt(denom);
}

// Same correlation integrated over a window [t0, t1] (ratio of cumulative
// covariances); this is what a windowed estimate from event logs converges
// to, and it tends to the instantaneous value as the window shrinks.
inline double jump_correlation_window(const FcltSolution& fclt, double t0, double t1) {
    const Mat3 dv = fclt.big_v_at(t1) - fclt.big_v_at(t0);
    const double denom = dv(0, 0) * dv(1, 1);
    if (!(denom > 0.0))
        throw config_error("jump_correlation_window: degenerate window");
    return dv(0, 1) / std::sqrt(denom);
}

} // namespace netdiff
