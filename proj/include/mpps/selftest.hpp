#pragma once

// Independent reference implementations used by the oracle/invariant
// suites. These deliberately avoid the QR/tree machinery of the production
// path: everything here enumerates in the complex domain with plain loops,
// so agreement is a genuine cross-check rather than a tautology.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mpps/constellation.hpp"
#include "mpps/detectors.hpp"
#include "mpps/mlp.hpp"

namespace mpps::selftest {

// Streaming log-sum-exp with running max.
struct Lse {
    double mx = -std::numeric_limits<double>::infinity();
    double s = 0.0;
    void add(double e) {
        if (e <= mx) {
            s += std::exp(e - mx);
        } else {
            s = s * std::exp(mx - e) + 1.0;
            mx = e;
        }
    }
    double value() const { return mx + std::log(s); }
};

// Odometer over all complex symbol vectors: visit(levels, s) where levels
// holds (re, im) level indices layer by layer.
template <typename Visit>
inline void for_each_symbol_vector(const Constellation& c, int n_t, Visit&& visit) {
    const int per_layer = c.num_levels() * c.num_levels();
    std::vector<int> idx(static_cast<std::size_t>(n_t), 0);
    Eigen::VectorXcd s(n_t);
    for (;;) {
        for (int t = 0; t < n_t; ++t) {
            const int ire = idx[static_cast<std::size_t>(t)] / c.num_levels();
            const int iim = idx[static_cast<std::size_t>(t)] % c.num_levels();
            s(t) = {c.pam_levels[static_cast<std::size_t>(ire)],
                    c.pam_levels[static_cast<std::size_t>(iim)]};
        }
        visit(idx, s);
        int t = 0;
        while (t < n_t && ++idx[static_cast<std::size_t>(t)] == per_layer) {
            idx[static_cast<std::size_t>(t)] = 0;
            ++t;
        }
        if (t == n_t) break;
    }
}

inline LlrVector naive_log_map(const Eigen::VectorXcd& y, const Eigen::MatrixXcd& h,
                               double noise_var, const Constellation& c, int n_t) {
    const int m = c.bits_per_dim();
    const std::size_t n_bits = static_cast<std::size_t>(n_t * c.bits_per_symbol);
    std::vector<Lse> acc0(n_bits), acc1(n_bits);
    for_each_symbol_vector(c, n_t, [&](const std::vector<int>& idx, const Eigen::VectorXcd& s) {
        const double e = -(y - h * s).squaredNorm() / noise_var;
        for (int t = 0; t < n_t; ++t) {
            const int ire = idx[static_cast<std::size_t>(t)] / c.num_levels();
            const int iim = idx[static_cast<std::size_t>(t)] % c.num_levels();
            for (int b = 0; b < m; ++b) {
                const auto pre = static_cast<std::size_t>(t * c.bits_per_symbol + b);
                (c.bit_of_level(ire, b) ? acc1[pre] : acc0[pre]).add(e);
                const auto pim = static_cast<std::size_t>(t * c.bits_per_symbol + m + b);
                (c.bit_of_level(iim, b) ? acc1[pim] : acc0[pim]).add(e);
            }
        }
    });
    LlrVector llr(n_bits);
    for (std::size_t i = 0; i < n_bits; ++i) llr[i] = acc1[i].value() - acc0[i].value();
    return llr;
}

inline LlrVector naive_max_log(const Eigen::VectorXcd& y, const Eigen::MatrixXcd& h,
                               double noise_var, const Constellation& c, int n_t) {
    const int m = c.bits_per_dim();
    const std::size_t n_bits = static_cast<std::size_t>(n_t * c.bits_per_symbol);
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> m0(n_bits, inf), m1(n_bits, inf);
    for_each_symbol_vector(c, n_t, [&](const std::vector<int>& idx, const Eigen::VectorXcd& s) {
        const double e = (y - h * s).squaredNorm();
        for (int t = 0; t < n_t; ++t) {
            const int ire = idx[static_cast<std::size_t>(t)] / c.num_levels();
            const int iim = idx[static_cast<std::size_t>(t)] % c.num_levels();
            for (int b = 0; b < m; ++b) {
                const auto pre = static_cast<std::size_t>(t * c.bits_per_symbol + b);
                auto& sre = c.bit_of_level(ire, b) ? m1[pre] : m0[pre];
                sre = std::min(sre, e);
                const auto pim = static_cast<std::size_t>(t * c.bits_per_symbol + m + b);
                auto& sim = c.bit_of_level(iim, b) ? m1[pim] : m0[pim];
                sim = std::min(sim, e);
            }
        }
    });
    LlrVector llr(n_bits);
    for (std::size_t i = 0; i < n_bits; ++i) llr[i] = (m0[i] - m1[i]) / noise_var;
    return llr;
}

// Minimum metric (and per-layer-per-level constrained minima) by direct
// complex enumeration.
struct NaiveMinima {
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> best_levels;                 // real layer order, level indices
    std::vector<std::vector<double>> constrained; // [2 n_t][2M]
};

inline NaiveMinima naive_minima(const Eigen::VectorXcd& y, const Eigen::MatrixXcd& h,
                                const Constellation& c, int n_t) {
    NaiveMinima out;
    out.constrained.assign(static_cast<std::size_t>(2 * n_t),
                           std::vector<double>(static_cast<std::size_t>(c.num_levels()),
                                               std::numeric_limits<double>::infinity()));
    for_each_symbol_vector(c, n_t, [&](const std::vector<int>& idx, const Eigen::VectorXcd& s) {
        const double e = (y - h * s).squaredNorm();
        std::vector<int> levels(static_cast<std::size_t>(2 * n_t));
        for (int t = 0; t < n_t; ++t) {
            levels[static_cast<std::size_t>(t)] = idx[static_cast<std::size_t>(t)] / c.num_levels();
            levels[static_cast<std::size_t>(t + n_t)] =
                idx[static_cast<std::size_t>(t)] % c.num_levels();
        }
        for (int j = 0; j < 2 * n_t; ++j) {
            auto& cell = out.constrained[static_cast<std::size_t>(j)]
                                        [static_cast<std::size_t>(levels[static_cast<std::size_t>(j)])];
            cell = std::min(cell, e);
        }
        if (e < out.best) {
            out.best = e;
            out.best_levels = levels;
        }
    });
    return out;
}

// Rearrangement objective of Theorem 1: q is the discretized unit-width
// Gaussian at the row minimum; returns sum_i q_i log p_i for the given
// arrangement and the maximum over all permutations of the row.
struct OtObjective {
    double arranged = 0.0;
    double best = 0.0;
};

inline double ot_objective(const std::vector<double>& metrics, const std::vector<double>& q) {
    double z = 0.0;
    for (double d : metrics) z += std::exp(-d);
    double obj = 0.0;
    for (std::size_t i = 0; i < metrics.size(); ++i)
        obj += q[i] * (-metrics[i] - std::log(z));
    return obj;
}

inline std::vector<double> gaussian_q(int k, int peak) {
    std::vector<double> q(static_cast<std::size_t>(k));
    double sum = 0.0;
    for (int i = 0; i < k; ++i) {
        q[static_cast<std::size_t>(i)] = std::exp(-0.5 * (i - peak) * (i - peak));
        sum += q[static_cast<std::size_t>(i)];
    }
    for (auto& v : q) v /= sum;
    return q;
}

inline OtObjective ot_brute_force(const std::vector<double>& row,
                                  const std::vector<double>& arranged) {
    const int k = static_cast<int>(row.size());
    int peak = 0;
    for (int i = 1; i < k; ++i)
        if (row[static_cast<std::size_t>(i)] < row[static_cast<std::size_t>(peak)]) peak = i;
    const std::vector<double> q = gaussian_q(k, peak);

    OtObjective res;
    res.arranged = ot_objective(arranged, q);
    std::vector<int> perm(static_cast<std::size_t>(k));
    std::iota(perm.begin(), perm.end(), 0);
    res.best = -std::numeric_limits<double>::infinity();
    std::vector<double> trial(static_cast<std::size_t>(k));
    do {
        for (int i = 0; i < k; ++i)
            trial[static_cast<std::size_t>(i)] = row[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
        res.best = std::max(res.best, ot_objective(trial, q));
    } while (std::next_permutation(perm.begin(), perm.end()));
    return res;
}

// Metric row of an exact Gaussian posterior section, Eq-(19) shape.
inline std::vector<double> synthetic_gaussian_row(const Constellation& c, double mu,
                                                  double sigma2, double offset = 0.0) {
    std::vector<double> row(static_cast<std::size_t>(c.num_levels()));
    for (int i = 0; i < c.num_levels(); ++i) {
        const double x = c.pam_levels[static_cast<std::size_t>(i)];
        row[static_cast<std::size_t>(i)] = (x - mu) * (x - mu) / (2.0 * sigma2) + offset;
    }
    return row;
}

// Central finite differences against the analytic gradient; returns the
// worst relative error over n_coords sampled parameter coordinates.
inline double gradient_fd_max_rel_error(MlpModel model, const std::vector<TrainSample>& batch,
                                        int n_coords, Rng& rng, double h = 1e-5) {
    const MlpGradients g = grad_l2(model, batch);
    const std::array<std::pair<double*, const double*>, 4> views{{{model.w1.data(), g.w1.data()},
                                                                  {model.b1.data(), g.b1.data()},
                                                                  {model.w2.data(), g.w2.data()},
                                                                  {model.b2.data(), g.b2.data()}}};
    const std::array<Eigen::Index, 4> sizes{model.w1.size(), model.b1.size(), model.w2.size(),
                                            model.b2.size()};
    double worst = 0.0;
    for (int k = 0; k < n_coords; ++k) {
        const auto part = static_cast<std::size_t>(rng.uniform_int(0, 3));
        const Eigen::Index i =
            static_cast<Eigen::Index>(rng.uniform_int(0, static_cast<int>(sizes[part]) - 1));
        double* coeff = views[part].first + i;
        const double analytic = *(views[part].second + i);
        const double save = *coeff;
        *coeff = save + h;
        const double lp = batch_loss(model, batch);
        *coeff = save - h;
        const double lm = batch_loss(model, batch);
        *coeff = save;
        const double fd = (lp - lm) / (2.0 * h);
        const double denom = std::max({std::abs(analytic), std::abs(fd), 1e-8});
        worst = std::max(worst, std::abs(fd - analytic) / denom);
    }
    return worst;
}

} // namespace mpps::selftest
