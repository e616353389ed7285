#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace btoep {

// Seeded generator with hand-rolled distributions so that a fixed seed yields
// the same stream on every platform and standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() {
        // Box-Muller; one fresh pair per call keeps the stream stateless.
        double u1 = uniform();
        while (u1 == 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    std::uint64_t integer(std::uint64_t bound) { return gen_() % bound; }

private:
    std::mt19937_64 gen_;
};

}  // namespace btoep
