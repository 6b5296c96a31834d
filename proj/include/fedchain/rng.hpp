#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace fedchain {

// Counter-based generator: every draw is a hash of (seed, counter), so
// streams can be split per component without coupling their sequences.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed) {}

    // Deterministic child stream for a named component.
    Rng fork(std::uint64_t stream_id) const {
        return Rng(mix(seed_ ^ 0x9e3779b97f4a7c15ULL, stream_id));
    }

    std::uint64_t next_u64() { return mix(seed_, counter_++); }

    // Uniform in [0, 1).
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Uniform integer in [0, n).
    std::uint64_t next_below(std::uint64_t n) {
        // Rejection sampling keeps the draw unbiased.
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v;
        do {
            v = next_u64();
        } while (v >= limit);
        return v % n;
    }

    // Box-Muller on two counter draws.
    double gaussian(double stddev) {
        double u1 = next_double();
        double u2 = next_double();
        if (u1 < 1e-300) u1 = 1e-300;
        return stddev * std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * std::numbers::pi * u2);
    }

    // Uniform draw from {-1, 0, 1}.
    int ternary() { return static_cast<int>(next_below(3)) - 1; }

private:
    static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
        // splitmix64 finalizer over the combined word
        std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

}  // namespace fedchain
