#pragma once

#include <cmath>
#include <cstdint>

namespace ftdr {

// Deterministic 64-bit splitmix generator. Used for every source of
// randomness in the project so that outputs are bit-identical across
// runs and platforms (std:: distributions are implementation-defined).
class SplitMix64 {
  public:
    explicit SplitMix64(uint64_t seed = 0) : state_(seed) {}

    uint64_t next() {
        state_ += 0x9E3779B97F4A7C15ULL;
        uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1) with 53 bits of mantissa.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n), n > 0.
    int uniform_int(int n) { return static_cast<int>(next() % static_cast<uint64_t>(n)); }

    // Box-Muller standard normal.
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 1e-300) u1 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    // Independent child stream (seed xor index through one mixing round).
    SplitMix64 fork(uint64_t index) const {
        SplitMix64 mixer(state_ ^ (0xA0761D6478BD642FULL * (index + 1)));
        return SplitMix64(mixer.next());
    }

  private:
    uint64_t state_;
};

}  // namespace ftdr
