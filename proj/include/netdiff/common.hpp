#pragma once

#include <stdexcept>
#include <string>

namespace netdiff {

// Floor below which a mean-field state is treated as degenerate. Solvers
// stop (or refuse to evaluate) instead of silently clamping.
inline constexpr double k_singular_floor = 1e-12;

// Lower guard for the scaled half-edge density passed to the multinomial
// compensators.
inline constexpr double k_density_guard = 1e-9;

// Invalid parameters, malformed configs, out-of-range arguments.
class config_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A state hit the singular region (vanishing susceptible mass or PGF
// derivative) where the limit operators are undefined.
class singular_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace netdiff
