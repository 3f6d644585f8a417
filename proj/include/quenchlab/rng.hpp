#pragma once

#include <cstdint>
#include <cmath>

namespace quenchlab {

// Counter-based random stream: every draw is a pure function of
// (seed, stream labels, counter), so replicas / disorder samples / sweeps
// can be scheduled in any order and still produce identical numbers.
struct RngStream {
    uint64_t state;

    explicit RngStream(uint64_t seed) : state(mix(seed ^ 0x9e3779b97f4a7c15ull)) {}
    RngStream(uint64_t seed, uint64_t a, uint64_t b = 0, uint64_t c = 0)
        : state(mix(mix(mix(mix(seed ^ 0x9e3779b97f4a7c15ull) ^ a) ^ b) ^ c)) {}

    static uint64_t mix(uint64_t z) {
        z += 0x9e3779b97f4a7c15ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    uint64_t next_u64() {
        state += 0x9e3779b97f4a7c15ull;
        uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // uniform in [0,1)
    double uniform() { return (next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    bool bernoulli(double p) { return uniform() < p; }

    // standard normal, Box-Muller (one value per call, second discarded
    // to keep the stream position independent of usage pattern)
    double normal() {
        double u1 = uniform(), u2 = uniform();
        if (u1 <= 0) u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

    uint64_t below(uint64_t n) { return next_u64() % n; }
};

} // namespace quenchlab
