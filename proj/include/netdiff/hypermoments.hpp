#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>

#include "netdiff/common.hpp"

namespace netdiff {

// Conditional law of the (infected, susceptible) neighbour split of a
// susceptible node of degree k, given the aggregate half-edge counts:
// a k-draw without replacement from x_si "infected-side" half-edges out of
// x_sdot total susceptible half-edges.
struct NeighborhoodLaw {
    int k = 0;
    std::int64_t x_si = 0;
    std::int64_t x_sdot = 0;

    std::int64_t x_ss_mass() const { return x_sdot - x_si; }

    void validate() const {
        if (k < 0) throw config_error("neighborhood law: negative degree");
        if (x_si < 0 || x_si > x_sdot)
            throw config_error("neighborhood law: need 0 <= x_si <= x_sdot");
        if (static_cast<std::int64_t>(k) > x_sdot)
            throw config_error("neighborhood law: degree exceeds available half-edges");
    }
};

enum class MomentKind {
    si_quadvar,  // E[ n_si (n_ss - n_si)^2 ]
    ss_quadvar,  // E[ n_ss^2 n_si ]
    s_si_cov,    // E[ n_si (n_ss - n_si) ]
    s_ss_cov,    // E[ n_si n_ss ]
    si_ss_cov,   // E[ n_si n_ss (n_ss - n_si) ]
    si_drift,    // E[ n_si (n_ss - n_si) ]
    ss_drift,    // E[ n_si n_ss ]
};

inline const char* to_string(MomentKind kind) {
    switch (kind) {
        case MomentKind::si_quadvar: return "si_quadvar";
        case MomentKind::ss_quadvar: return "ss_quadvar";
        case MomentKind::s_si_cov: return "s_si_cov";
        case MomentKind::s_ss_cov: return "s_ss_cov";
        case MomentKind::si_ss_cov: return "si_ss_cov";
        case MomentKind::si_drift: return "si_drift";
        case MomentKind::ss_drift: return "ss_drift";
    }
    throw config_error("unknown moment kind");
}

namespace detail {

// Falling factorial (a)_r as a long double; exact for the integer ranges the
// enumeration oracle certifies.
inline long double falling(long double a, int r) {
    long double out = 1.0L;
    for (int j = 0; j < r; ++j) out *= a - static_cast<long double>(j);
    return out;
}

inline long double binomial_ld(std::int64_t n, std::int64_t r) {
    if (r < 0 || r > n) return 0.0L;
    long double out = 1.0L;
    for (std::int64_t j = 1; j <= r; ++j)
        out = out * static_cast<long double>(n - r + j) / static_cast<long double>(j);
    return out;
}

} // namespace detail

// Exact pmf of (n_si, n_ss) with n_si + n_ss = k:
//   P(n_si, n_ss) = C(x_si, n_si) C(x_sdot - x_si, n_ss) / C(x_sdot, k).
inline std::map<std::pair<int, int>, double> neighborhood_pmf(const NeighborhoodLaw& law) {
    law.validate();
    std::map<std::pair<int, int>, double> pmf;
    const long double denom = detail::binomial_ld(law.x_sdot, law.k);
    for (int n_si = 0; n_si <= law.k; ++n_si) {
        const int n_ss = law.k - n_si;
        const long double mass = detail::binomial_ld(law.x_si, n_si) *
                                 detail::binomial_ld(law.x_ss_mass(), n_ss) / denom;
        if (mass > 0.0L)
            pmf[{n_si, n_ss}] = static_cast<double>(mass);
    }
    return pmf;
}

// Mixed falling-factorial moment E[(n_si)_a (n_ss)_b], a + b <= 3:
//   (k)_{a+b} (x_si)_a (x_ss)_b / (x_sdot)_{a+b}.
inline double falling_factorial_moment(const NeighborhoodLaw& law, int a, int b) {
    law.validate();
    if (a < 0 || b < 0 || a + b > 3)
        throw config_error("falling_factorial_moment: total order must be <= 3");
    const long double num_k = detail::falling(static_cast<long double>(law.k), a + b);
    if (num_k == 0.0L) return 0.0;
    const long double num = num_k *
                            detail::falling(static_cast<long double>(law.x_si), a) *
                            detail::falling(static_cast<long double>(law.x_ss_mass()), b);
    const long double den = detail::falling(static_cast<long double>(law.x_sdot), a + b);
    return static_cast<double>(num / den);
}

// Exact conditional expectation of the cubic jump statistic selected by
// `kind`, expanded into falling-factorial moments. Equals direct summation
// over neighborhood_pmf.
inline double drift_moment_exact(const NeighborhoodLaw& law, MomentKind kind) {
    const auto ff = [&law](int a, int b) { return falling_factorial_moment(law, a, b); };
    switch (kind) {
        case MomentKind::si_quadvar:
            // n_si (n_ss - n_si)^2 = n_si (n_ss)_2 - 2 (n_si)_2 n_ss - n_si n_ss
            //                        + (n_si)_3 + 3 (n_si)_2 + n_si
            return ff(1, 2) - 2.0 * ff(2, 1) - ff(1, 1) + ff(3, 0) + 3.0 * ff(2, 0) +
                   ff(1, 0);
        case MomentKind::ss_quadvar:
            // n_ss^2 n_si = (n_ss)_2 n_si + n_ss n_si
            return ff(1, 2) + ff(1, 1);
        case MomentKind::s_si_cov:
        case MomentKind::si_drift:
            // n_si (n_ss - n_si) = n_si n_ss - (n_si)_2 - n_si
            return ff(1, 1) - ff(2, 0) - ff(1, 0);
        case MomentKind::s_ss_cov:
        case MomentKind::ss_drift:
            return ff(1, 1);
        case MomentKind::si_ss_cov:
            // n_si n_ss (n_ss - n_si) = n_si (n_ss)_2 - (n_si)_2 n_ss
            return ff(1, 2) - ff(2, 1);
    }
    throw config_error("unknown moment kind");
}

// Large-population (multinomial) counterpart of drift_moment_exact, written
// in scaled counts: z is the susceptible half-edge density n^{-1} x_sdot (or
// its limit) and must stay above k_density_guard.
inline double multinomial_compensator(int k, std::int64_t n, std::int64_t x_si,
                                      std::int64_t x_ss, double z, MomentKind kind) {
    if (!(z >= k_density_guard))
        throw config_error("multinomial_compensator: density below guard");
    const double si = static_cast<double>(x_si);
    const double ss = static_cast<double>(x_ss);
    const double k1 = static_cast<double>(k);
    const double k2 = k1 * (k1 - 1.0);
    const double k3 = k2 * (k1 - 2.0);
    const double w = 1.0 / (static_cast<double>(n) * z); // n^{-1} / z
    switch (kind) {
        case MomentKind::si_quadvar:
            return k3 * si * (ss - si) * (ss - si) * w * w * w -
                   k2 * si * (ss - 3.0 * si) * w * w + k1 * si * w;
        case MomentKind::ss_quadvar:
            return k3 * si * ss * ss * w * w * w + k2 * si * ss * w * w;
        case MomentKind::s_si_cov:
        case MomentKind::si_drift:
            return k2 * si * (ss - si) * w * w - k1 * si * w;
        case MomentKind::s_ss_cov:
        case MomentKind::ss_drift:
            return k2 * si * ss * w * w;
        case MomentKind::si_ss_cov:
            return k3 * si * ss * (ss - si) * w * w * w;
    }
    throw config_error("unknown moment kind");
}

} // namespace netdiff
