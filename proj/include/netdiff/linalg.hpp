#pragma once

#include <array>
#include <cmath>
#include <cstddef>

#include "netdiff/common.hpp"

namespace netdiff {

using Vec3 = std::array<double, 3>;

// Dense 3x3 matrix, row-major. Small enough that everything is by value.
struct Mat3 {
    std::array<double, 9> m{};

    static Mat3 zero() { return Mat3{}; }
    static Mat3 identity() {
        Mat3 a;
        a(0, 0) = a(1, 1) = a(2, 2) = 1.0;
        return a;
    }

    double& operator()(int r, int c) { return m[static_cast<std::size_t>(3 * r + c)]; }
    double operator()(int r, int c) const { return m[static_cast<std::size_t>(3 * r + c)]; }

    Mat3 operator+(const Mat3& o) const {
        Mat3 a;
        for (std::size_t i = 0; i < 9; ++i) a.m[i] = m[i] + o.m[i];
        return a;
    }
    Mat3 operator-(const Mat3& o) const {
        Mat3 a;
        for (std::size_t i = 0; i < 9; ++i) a.m[i] = m[i] - o.m[i];
        return a;
    }
    Mat3 operator*(double s) const {
        Mat3 a;
        for (std::size_t i = 0; i < 9; ++i) a.m[i] = m[i] * s;
        return a;
    }
    Mat3& operator+=(const Mat3& o) {
        for (std::size_t i = 0; i < 9; ++i) m[i] += o.m[i];
        return *this;
    }

    Mat3 matmul(const Mat3& o) const {
        Mat3 a;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) {
                double s = 0.0;
                for (int k = 0; k < 3; ++k) s += (*this)(r, k) * o(k, c);
                a(r, c) = s;
            }
        return a;
    }

    Mat3 transposed() const {
        Mat3 a;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) a(r, c) = (*this)(c, r);
        return a;
    }

    Vec3 apply(const Vec3& v) const {
        Vec3 out{};
        for (int r = 0; r < 3; ++r)
            out[static_cast<std::size_t>(r)] =
                (*this)(r, 0) * v[0] + (*this)(r, 1) * v[1] + (*this)(r, 2) * v[2];
        return out;
    }

    void symmetrize() {
        for (int r = 0; r < 3; ++r)
            for (int c = r + 1; c < 3; ++c) {
                const double avg = 0.5 * ((*this)(r, c) + (*this)(c, r));
                (*this)(r, c) = avg;
                (*this)(c, r) = avg;
            }
    }

    double trace() const { return m[0] + m[4] + m[8]; }

    double max_abs() const {
        double v = 0.0;
        for (double x : m) v = std::max(v, std::abs(x));
        return v;
    }
};

// Eigenvalues of a symmetric 3x3 matrix by cyclic Jacobi sweeps, ascending.
inline Vec3 sym_eigenvalues(Mat3 a) {
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = std::abs(a(0, 1)) + std::abs(a(0, 2)) + std::abs(a(1, 2));
        if (off < 1e-300 || off < 1e-15 * (1.0 + std::abs(a.trace()))) break;
        for (int p = 0; p < 2; ++p)
            for (int q = p + 1; q < 3; ++q) {
                if (std::abs(a(p, q)) < 1e-300) continue;
                const double tau = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (tau >= 0 ? 1.0 : -1.0) /
                                 (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                Mat3 r = Mat3::identity();
                r(p, p) = c;
                r(q, q) = c;
                r(p, q) = s;
                r(q, p) = -s;
                a = r.transposed().matmul(a).matmul(r);
                a.symmetrize();
            }
    }
    Vec3 ev{a(0, 0), a(1, 1), a(2, 2)};
    if (ev[0] > ev[1]) std::swap(ev[0], ev[1]);
    if (ev[1] > ev[2]) std::swap(ev[1], ev[2]);
    if (ev[0] > ev[1]) std::swap(ev[0], ev[1]);
    return ev;
}

// Lower-triangular Cholesky factor of a psd matrix. Ridge `jitter` is added
// to the diagonal first; zero pivots (within roundoff of the matrix scale)
// produce zero columns so exactly-singular psd inputs factor cleanly.
// A pivot that is negative beyond roundoff throws.
inline Mat3 cholesky_psd(Mat3 a, double jitter) {
    for (int i = 0; i < 3; ++i) a(i, i) += jitter;
    const double scale = std::max(a.max_abs(), 1e-300);
    Mat3 l = Mat3::zero();
    for (int j = 0; j < 3; ++j) {
        double d = a(j, j);
        for (int k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (d < -1e-10 * scale)
            throw singular_error("cholesky_psd: matrix is not positive semidefinite");
        if (d <= 1e-14 * scale) {
            // treat as a zero mode
            continue;
        }
        l(j, j) = std::sqrt(d);
        for (int i = j + 1; i < 3; ++i) {
            double s = a(i, j);
            for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / l(j, j);
        }
    }
    return l;
}

struct Eig2 {
    double lambda_max = 0.0;
    double lambda_min = 0.0;
    double vx = 1.0; // eigenvector of lambda_max
    double vy = 0.0;
};

inline Eig2 sym_eigen2(double a, double b, double c) {
    Eig2 e;
    const double half_tr = 0.5 * (a + c);
    const double disc = std::sqrt(0.25 * (a - c) * (a - c) + b * b);
    e.lambda_max = half_tr + disc;
    e.lambda_min = half_tr - disc;
    if (std::abs(b) > 1e-300) {
        e.vx = b;
        e.vy = e.lambda_max - a;
        const double norm = std::hypot(e.vx, e.vy);
        e.vx /= norm;
        e.vy /= norm;
    } else if (c > a) {
        e.vx = 0.0;
        e.vy = 1.0;
    }
    return e;
}

} // namespace netdiff
