#pragma once

// Counter-based seeding for reproducible parallel Monte-Carlo runs: every
// (seed, snr index, trial index) triple owns an independent stream, so
// results do not depend on execution order or thread count.

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

namespace mpps {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    static Rng from_counters(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
        std::uint64_t state = seed;
        splitmix64(state);
        state ^= 0x5851f42d4c957f2dULL * (a + 1);
        splitmix64(state);
        state ^= 0x14057b7ef767814fULL * (b + 1);
        return Rng(splitmix64(state));
    }

    std::mt19937_64& engine() { return gen_; }

    double normal() { return normal_(gen_); }

    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(gen_);
    }

    int uniform_int(int lo, int hi) { // inclusive bounds
        return std::uniform_int_distribution<int>(lo, hi)(gen_);
    }

    int bit() { return uniform_int(0, 1); }

    // Circularly-symmetric complex Gaussian with total variance var.
    std::complex<double> cnormal(double var) {
        const double s = std::sqrt(var / 2.0);
        const double re = normal();
        const double im = normal();
        return {s * re, s * im};
    }

  private:
    std::mt19937_64 gen_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

} // namespace mpps
