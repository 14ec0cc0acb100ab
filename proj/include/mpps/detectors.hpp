#pragma once

// Reference soft detectors. LLR convention: lambda = log p(b=1|y) - log
// p(b=0|y) with likelihood exp(-||y-Hs||^2 / sigma^2), sigma^2 the noise
// variance per complex receive entry. Output ordering is layer-major: for
// complex layer t, bits 0..M_c/2-1 label the real dimension (most
// significant first), the rest the imaginary one.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "mpps/candidates.hpp"
#include "mpps/constellation.hpp"
#include "mpps/errors.hpp"
#include "mpps/real_lattice.hpp"

namespace mpps {

using LlrVector = std::vector<double>;

constexpr double kDefaultLlrClamp = 60.0;

inline std::size_t llr_index(int n_t, int m_c, int real_layer, int bit) {
    const int m = m_c / 2;
    if (real_layer < n_t) return static_cast<std::size_t>(real_layer * m_c + bit);
    return static_cast<std::size_t>((real_layer - n_t) * m_c + m + bit);
}

inline std::vector<int> bits_from_llrs(const LlrVector& llr) {
    std::vector<int> bits(llr.size());
    for (std::size_t i = 0; i < llr.size(); ++i) bits[i] = llr[i] > 0.0 ? 1 : 0;
    return bits;
}

namespace detail {

inline double logsumexp(const std::vector<double>& v) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double x : v) mx = std::max(mx, x);
    if (!std::isfinite(mx)) return mx;
    double s = 0.0;
    for (double x : v) s += std::exp(x - mx);
    return mx + std::log(s);
}

// Per-(layer, level) sums of exp(-(metric - best)/sigma^2) over the whole
// lattice, aggregated once per tree node instead of once per leaf.
inline std::vector<std::vector<double>> posterior_buckets(const RealDecomposition& dec,
                                                          const Constellation& c,
                                                          double noise_var, double best_metric) {
    const int n_layers = dec.n_layers();
    const int n_levels = c.num_levels();
    std::vector<std::vector<double>> z(static_cast<std::size_t>(n_layers),
                                       std::vector<double>(static_cast<std::size_t>(n_levels), 0.0));
    std::vector<int> levels_perm(static_cast<std::size_t>(n_layers), 0);

    auto dfs = [&](auto&& self, int p, double acc) -> double {
        if (p < 0) return std::exp(-(acc - best_metric) / noise_var);
        double base = dec.qty(p);
        for (int m = p + 1; m < n_layers; ++m)
            base -= dec.r(p, m) *
                    c.pam_levels[static_cast<std::size_t>(levels_perm[static_cast<std::size_t>(m)])];
        const int orig = dec.col_perm[static_cast<std::size_t>(p)];
        double total = 0.0;
        for (int lvl = 0; lvl < n_levels; ++lvl) {
            const double res = base - dec.r(p, p) * c.pam_levels[static_cast<std::size_t>(lvl)];
            levels_perm[static_cast<std::size_t>(p)] = lvl;
            const double w = self(self, p - 1, acc + res * res);
            z[static_cast<std::size_t>(orig)][static_cast<std::size_t>(lvl)] += w;
            total += w;
        }
        return total;
    };
    // Seeding with the column-space offset makes leaf accumulators equal the
    // full metric, matching best_metric's convention.
    dfs(dfs, n_layers - 1, dec.metric_offset);
    return z;
}

} // namespace detail

inline LlrVector exact_log_map(const Eigen::VectorXcd& y, const Eigen::MatrixXcd& h,
                               double noise_var, const Constellation& c, int n_t) {
    if (h.cols() != n_t) throw std::invalid_argument("exact_log_map: n_t mismatch");
    if (!(noise_var > 0.0)) throw std::invalid_argument("exact_log_map: need sigma^2 > 0");
    const RealDecomposition dec = real_decompose(h, y);
    const ExhaustiveMinima em = exhaustive_layer_minima(dec, c, false);
    const auto z = detail::posterior_buckets(dec, c, noise_var, em.best_metric);

    const int m = c.bits_per_dim();
    LlrVector llr(static_cast<std::size_t>(n_t * c.bits_per_symbol), 0.0);
    std::vector<double> set0, set1;
    for (int j = 0; j < dec.n_layers(); ++j) {
        for (int t = 0; t < m; ++t) {
            set0.clear();
            set1.clear();
            for (int i = 0; i < c.num_levels(); ++i) {
                const double zji = z[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
                const double dji = *em.table.d[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
                // Bucket log-mass relative to the best path; if the linear sum
                // underflowed, keep the bucket's dominant (max-log) term.
                const double lji = zji > 0.0 ? std::log(zji)
                                             : -(dji - em.best_metric) / noise_var;
                (c.bit_of_level(i, t) ? set1 : set0).push_back(lji);
            }
            llr[llr_index(n_t, c.bits_per_symbol, j, t)] =
                detail::logsumexp(set1) - detail::logsumexp(set0);
        }
    }
    return llr;
}

inline LlrVector exact_max_log(const Eigen::VectorXcd& y, const Eigen::MatrixXcd& h,
                               double noise_var, const Constellation& c, int n_t) {
    if (h.cols() != n_t) throw std::invalid_argument("exact_max_log: n_t mismatch");
    if (!(noise_var > 0.0)) throw std::invalid_argument("exact_max_log: need sigma^2 > 0");
    const RealDecomposition dec = real_decompose(h, y);
    const ExhaustiveMinima em = exhaustive_layer_minima(dec, c, false);

    const int m = c.bits_per_dim();
    LlrVector llr(static_cast<std::size_t>(n_t * c.bits_per_symbol), 0.0);
    for (int j = 0; j < dec.n_layers(); ++j) {
        for (int t = 0; t < m; ++t) {
            double m0 = std::numeric_limits<double>::infinity();
            double m1 = m0;
            for (int i = 0; i < c.num_levels(); ++i) {
                const double dji = *em.table.d[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
                auto& slot = c.bit_of_level(i, t) ? m1 : m0;
                slot = std::min(slot, dji);
            }
            llr[llr_index(n_t, c.bits_per_symbol, j, t)] = (m0 - m1) / noise_var;
        }
    }
    return llr;
}

// Max-log over a sampled candidate list; a bit whose counter-hypothesis is
// missing gets the clamp value with the sign of the surviving hypothesis.
inline LlrVector candidate_max_log(const CandidateList& cands, const LayerMetricTable& table,
                                   double noise_var, const Constellation& c,
                                   double llr_clamp = kDefaultLlrClamp) {
    if (cands.paths.empty())
        throw std::invalid_argument("candidate_max_log: empty candidate list");
    const int n_layers = table.n_layers();
    const int n_t = n_layers / 2;
    const int m = c.bits_per_dim();
    LlrVector llr(static_cast<std::size_t>(n_t * c.bits_per_symbol), 0.0);
    for (int j = 0; j < n_layers; ++j) {
        for (int t = 0; t < m; ++t) {
            double m0 = std::numeric_limits<double>::infinity();
            double m1 = m0;
            for (int i = 0; i < c.num_levels(); ++i) {
                const auto& cell = table.d[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
                if (!cell) continue;
                auto& slot = c.bit_of_level(i, t) ? m1 : m0;
                slot = std::min(slot, *cell);
            }
            double v;
            const bool has0 = std::isfinite(m0), has1 = std::isfinite(m1);
            if (has0 && has1) v = std::clamp((m0 - m1) / noise_var, -llr_clamp, llr_clamp);
            else v = has1 ? llr_clamp : -llr_clamp;
            llr[llr_index(n_t, c.bits_per_symbol, j, t)] = v;
        }
    }
    return llr;
}

struct LmmseStream {
    double gain = 0.0;      // g_j = Re (WH)_jj, in (0,1)
    double residual = 0.0;  // g_j - g_j^2; complex noise variance is E_s * residual
};

struct LmmseEqualization {
    Eigen::VectorXcd z;
    std::vector<LmmseStream> streams;
};

inline LmmseEqualization lmmse_equalize(const Eigen::VectorXcd& y, const Eigen::MatrixXcd& h,
                                        double noise_var, double symbol_energy) {
    const int n_t = static_cast<int>(h.cols());
    Eigen::MatrixXcd a = h.adjoint() * h;
    a.diagonal().array() += noise_var / symbol_energy;
    Eigen::LDLT<Eigen::MatrixXcd> ldlt(a);
    if (ldlt.info() != Eigen::Success)
        throw DegenerateChannelError("lmmse_equalize: regularized Gram matrix not factorizable");
    const Eigen::MatrixXcd w = ldlt.solve(h.adjoint());
    const Eigen::MatrixXcd g = w * h;

    LmmseEqualization out;
    out.z = w * y;
    out.streams.resize(static_cast<std::size_t>(n_t));
    for (int j = 0; j < n_t; ++j) {
        const double gj = g(j, j).real();
        out.streams[static_cast<std::size_t>(j)] = {gj, gj - gj * gj};
    }
    return out;
}

inline LlrVector lmmse_soft(const Eigen::VectorXcd& y, const Eigen::MatrixXcd& h,
                            double noise_var, const Constellation& c, int n_t,
                            double llr_clamp = kDefaultLlrClamp) {
    if (h.cols() != n_t) throw std::invalid_argument("lmmse_soft: n_t mismatch");
    if (!(noise_var > 0.0)) throw std::invalid_argument("lmmse_soft: need sigma^2 > 0");
    const LmmseEqualization eq = lmmse_equalize(y, h, noise_var, c.symbol_energy);

    const int m = c.bits_per_dim();
    LlrVector llr(static_cast<std::size_t>(n_t * c.bits_per_symbol), 0.0);
    for (int j = 0; j < n_t; ++j) {
        const auto& st = eq.streams[static_cast<std::size_t>(j)];
        const double nu2 = std::max(st.residual * c.symbol_energy, 1e-300);
        for (int dim = 0; dim < 2; ++dim) {
            const double zd = dim == 0 ? eq.z(j).real() : eq.z(j).imag();
            for (int t = 0; t < m; ++t) {
                double m0 = std::numeric_limits<double>::infinity();
                double m1 = m0;
                for (int i = 0; i < c.num_levels(); ++i) {
                    const double e = zd - st.gain * c.pam_levels[static_cast<std::size_t>(i)];
                    auto& slot = c.bit_of_level(i, t) ? m1 : m0;
                    slot = std::min(slot, e * e);
                }
                llr[llr_index(n_t, c.bits_per_symbol, j + dim * n_t, t)] =
                    std::clamp((m0 - m1) / nu2, -llr_clamp, llr_clamp);
            }
        }
    }
    return llr;
}

} // namespace mpps
