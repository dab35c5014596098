#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace favk {

/// splitmix64 stream with explicit seeding. All stochastic machinery in the
/// library draws from this generator so outputs are reproducible bit-for-bit
/// for a given seed.
struct Rng {
    uint64_t state = 0;

    explicit Rng(uint64_t seed) : state(seed) {}

    uint64_t next() {
        uint64_t z = (state += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double uniform() { return double(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Integer in [0, n).
    uint64_t below(uint64_t n) { return n ? next() % n : 0; }

    /// Standard normal via Box-Muller.
    double gaussian() {
        double u1 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }
};

}  // namespace favk
