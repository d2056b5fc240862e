#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace hrplab {

/// Portable seeded generator: std::mt19937_64 (bit-exact across standard
/// libraries) with explicit conversions, since the std distributions are
/// implementation-defined.
///
/// uniform(): top 53 bits of one engine draw scaled to [0, 1).
/// normal():  Box-Muller on two consecutive uniforms, cosine branch only.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

private:
    std::mt19937_64 engine_;
};

}  // namespace hrplab
