#pragma once

// Square-QAM constellation on the unnormalized lattice: per-dimension PAM
// levels X_i = 2(i - M) + 1 with spacing exactly 2, reflected-Gray bit
// labels. Detection math elsewhere relies on this lattice staying
// unnormalized; energy scaling lives in the SNR convention instead.

#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "mpps/errors.hpp"

namespace mpps {

struct Constellation {
    int bits_per_symbol = 0;          // M_c
    int half_levels = 0;              // M; levels per dimension = 2M
    std::vector<double> pam_levels;   // ascending, 2M entries
    std::vector<std::uint32_t> gray_of_index; // level index -> Gray pattern
    std::vector<int> index_of_gray;           // Gray pattern -> level index
    double symbol_energy = 0.0;       // E_s = mean |s|^2 over the QAM grid

    int bits_per_dim() const { return bits_per_symbol / 2; }
    int num_levels() const { return 2 * half_levels; }

    // Bit t (0 = most significant) of the Gray label of a level index.
    // The MSB equals 1 exactly on positive levels.
    int bit_of_level(int level_index, int t) const {
        return static_cast<int>((gray_of_index[static_cast<std::size_t>(level_index)]
                                 >> (bits_per_dim() - 1 - t)) & 1u);
    }

    int level_index_from_bits(std::span<const int> bits) const {
        std::uint32_t pattern = 0;
        for (int t = 0; t < bits_per_dim(); ++t)
            pattern = (pattern << 1) | static_cast<std::uint32_t>(bits[static_cast<std::size_t>(t)] & 1);
        return index_of_gray[pattern];
    }

    int nearest_level_index(double x) const {
        // Levels are 2(i-M)+1; invert and clamp.
        int i = static_cast<int>(std::lround((x - 1.0) / 2.0)) + half_levels;
        if (i < 0) i = 0;
        if (i >= num_levels()) i = num_levels() - 1;
        return i;
    }
};

inline Constellation build_constellation(int m_c) {
    if (m_c < 2 || m_c > 8 || m_c % 2 != 0)
        throw std::invalid_argument("build_constellation: bits per symbol must be one of {2,4,6,8}");

    Constellation c;
    c.bits_per_symbol = m_c;
    const int bits_per_dim = m_c / 2;
    c.half_levels = 1 << (bits_per_dim - 1);
    const int n = 2 * c.half_levels;

    c.pam_levels.resize(static_cast<std::size_t>(n));
    c.gray_of_index.resize(static_cast<std::size_t>(n));
    c.index_of_gray.assign(static_cast<std::size_t>(n), -1);
    double e1d = 0.0;
    for (int i = 0; i < n; ++i) {
        c.pam_levels[static_cast<std::size_t>(i)] = 2.0 * (i - c.half_levels) + 1.0;
        const auto g = static_cast<std::uint32_t>(i ^ (i >> 1));
        c.gray_of_index[static_cast<std::size_t>(i)] = g;
        c.index_of_gray[g] = i;
        e1d += c.pam_levels[static_cast<std::size_t>(i)] * c.pam_levels[static_cast<std::size_t>(i)];
    }
    e1d /= n;
    c.symbol_energy = 2.0 * e1d;
    return c;
}

// Maps bits to complex symbols, layer-major: for layer t the first
// M_c/2 bits select the real level, the next M_c/2 the imaginary one.
inline std::vector<std::complex<double>> modulate(std::span<const int> bits,
                                                  const Constellation& c, int n_t) {
    if (static_cast<int>(bits.size()) != n_t * c.bits_per_symbol)
        throw std::invalid_argument("modulate: bit count must equal n_t * bits_per_symbol");
    std::vector<std::complex<double>> s(static_cast<std::size_t>(n_t));
    const int m = c.bits_per_dim();
    for (int t = 0; t < n_t; ++t) {
        const auto base = static_cast<std::size_t>(t * c.bits_per_symbol);
        const int ire = c.level_index_from_bits(bits.subspan(base, static_cast<std::size_t>(m)));
        const int iim = c.level_index_from_bits(bits.subspan(base + static_cast<std::size_t>(m),
                                                             static_cast<std::size_t>(m)));
        s[static_cast<std::size_t>(t)] = {c.pam_levels[static_cast<std::size_t>(ire)],
                                          c.pam_levels[static_cast<std::size_t>(iim)]};
    }
    return s;
}

// Nearest-level hard demapping back to bits; inverse of modulate on
// noiseless lattice points.
inline std::vector<int> hard_demap(std::span<const std::complex<double>> s,
                                   const Constellation& c) {
    std::vector<int> bits;
    bits.reserve(s.size() * static_cast<std::size_t>(c.bits_per_symbol));
    const int m = c.bits_per_dim();
    for (const auto& sym : s) {
        const int ire = c.nearest_level_index(sym.real());
        const int iim = c.nearest_level_index(sym.imag());
        for (int t = 0; t < m; ++t) bits.push_back(c.bit_of_level(ire, t));
        for (int t = 0; t < m; ++t) bits.push_back(c.bit_of_level(iim, t));
    }
    return bits;
}

} // namespace mpps
