#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "floodlab/error.hpp"

namespace floodlab {

// Seeded generator used everywhere randomness is needed. std::mt19937_64 has a
// standard-mandated output sequence, and all distributions here are derived
// from it by explicit arithmetic, so identical seeds give identical streams on
// every platform. No global RNG exists in this library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n).
    std::uint64_t uniform_int(std::uint64_t n) {
        if (n == 0) throw InvalidArgument("uniform_int: n must be positive");
        // Rejection sampling to avoid modulo bias.
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    double exponential(double mean) {
        // 1 - uniform() is in (0, 1], so the log is finite.
        return -mean * std::log(1.0 - uniform());
    }

    // Box-Muller without the cached spare so the draw count per call is fixed.
    double normal(double mean, double stddev) {
        double u1 = 1.0 - uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        return mean + stddev * r * std::cos(2.0 * M_PI * u2);
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Independent child stream; used to give scenario components their own
    // generators so the draw order of one cannot perturb another.
    Rng fork() { return Rng(engine_() ^ 0x9e3779b97f4a7c15ULL); }

private:
    std::mt19937_64 engine_;
};

}  // namespace floodlab
