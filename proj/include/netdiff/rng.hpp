#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace netdiff {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Deterministic random stream. The engine is mt19937_64 (its output sequence
// is fully specified by the standard), all variate transforms are done here
// rather than through std:: distributions, so a (seed, stream) pair yields
// the same draws on every platform and build.
//
// Monte-Carlo replicas use Rng::stream(master_seed, replica_index); streams
// are independent of how replicas are scheduled across threads.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed_from(seed, 0)) {}
    Rng(std::uint64_t seed, std::uint64_t stream) : engine_(seed_from(seed, stream)) {}

    static Rng stream(std::uint64_t master_seed, std::uint64_t stream_id) {
        return Rng(master_seed, stream_id);
    }

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1).
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [0, bound), bias-free by rejection.
    std::uint64_t uniform_below(std::uint64_t bound) {
        if (bound <= 1) return 0;
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound + 1) % bound;
        std::uint64_t draw = engine_();
        while (draw > limit) draw = engine_();
        return draw % bound;
    }

    double exponential(double rate) {
        // uniform() < 1, so the argument of log1p stays in (-1, 0].
        return -std::log1p(-uniform()) / rate;
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 6.283185307179586476925286766559 * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

private:
    static std::uint64_t seed_from(std::uint64_t seed, std::uint64_t stream) {
        std::uint64_t state = seed;
        std::uint64_t mixed = splitmix64(state);
        state ^= (stream + 1) * 0x9e3779b97f4a7c15ULL;
        mixed ^= splitmix64(state);
        return mixed;
    }

    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace netdiff
