#pragma once

// Real embedding of the complex system: y_r = [Re y; Im y],
// H_r = [Re H, -Im H; Im H, Re H], which preserves ||y - Hs||^2 and makes
// every PAM dimension its own search layer. Columns are sorted by ascending
// norm before QR so the strongest layers sit at the root of the tree.

#include <algorithm>
#include <complex>
#include <numeric>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mpps/constellation.hpp"
#include "mpps/errors.hpp"

namespace mpps {

struct RealDecomposition {
    Eigen::VectorXd y_r;          // 2 N_r
    Eigen::MatrixXd h_r;          // 2 N_r x 2 N_t, original column order
    Eigen::MatrixXd q;            // thin Q of the permuted embedding
    Eigen::MatrixXd r;            // upper triangular, nonnegative diagonal
    Eigen::VectorXd qty;          // Q^T y_r
    double metric_offset = 0.0;   // ||y_r||^2 - ||Q^T y_r||^2 (out-of-span part)
    std::vector<int> col_perm;    // permuted column p came from col_perm[p]
    // real layer j -> (complex layer, is imaginary part)
    std::vector<std::pair<int, bool>> layer_map;

    int n_t() const { return static_cast<int>(h_r.cols()) / 2; }
    int n_layers() const { return static_cast<int>(h_r.cols()); }

    // Exact residual of a real-embedded lattice point given level indices in
    // original layer order.
    double direct_metric(const std::vector<int>& levels, const Constellation& c) const {
        Eigen::VectorXd res = y_r;
        for (int j = 0; j < n_layers(); ++j)
            res -= c.pam_levels[static_cast<std::size_t>(levels[static_cast<std::size_t>(j)])] *
                   h_r.col(j);
        return res.squaredNorm();
    }
};

inline RealDecomposition real_decompose(const Eigen::MatrixXcd& h, const Eigen::VectorXcd& y) {
    const int n_r = static_cast<int>(h.rows());
    const int n_t = static_cast<int>(h.cols());
    if (y.size() != n_r) throw std::invalid_argument("real_decompose: y/H shape mismatch");
    if (n_r < n_t) throw std::invalid_argument("real_decompose: need N_r >= N_t");

    RealDecomposition dec;
    dec.y_r.resize(2 * n_r);
    dec.y_r.head(n_r) = y.real();
    dec.y_r.tail(n_r) = y.imag();

    dec.h_r.resize(2 * n_r, 2 * n_t);
    dec.h_r.topLeftCorner(n_r, n_t) = h.real();
    dec.h_r.topRightCorner(n_r, n_t) = -h.imag();
    dec.h_r.bottomLeftCorner(n_r, n_t) = h.imag();
    dec.h_r.bottomRightCorner(n_r, n_t) = h.real();

    dec.layer_map.resize(static_cast<std::size_t>(2 * n_t));
    for (int j = 0; j < n_t; ++j) {
        dec.layer_map[static_cast<std::size_t>(j)] = {j, false};
        dec.layer_map[static_cast<std::size_t>(n_t + j)] = {j, true};
    }

    dec.col_perm.resize(static_cast<std::size_t>(2 * n_t));
    std::iota(dec.col_perm.begin(), dec.col_perm.end(), 0);
    std::stable_sort(dec.col_perm.begin(), dec.col_perm.end(), [&](int a, int b) {
        return dec.h_r.col(a).squaredNorm() < dec.h_r.col(b).squaredNorm();
    });

    Eigen::MatrixXd hp(2 * n_r, 2 * n_t);
    for (int p = 0; p < 2 * n_t; ++p) hp.col(p) = dec.h_r.col(dec.col_perm[static_cast<std::size_t>(p)]);

    Eigen::HouseholderQR<Eigen::MatrixXd> qr(hp);
    Eigen::MatrixXd qfull = qr.householderQ() * Eigen::MatrixXd::Identity(2 * n_r, 2 * n_t);
    Eigen::MatrixXd rfull = qr.matrixQR().topRows(2 * n_t).triangularView<Eigen::Upper>();
    // Normalize signs so diag(R) >= 0.
    for (int p = 0; p < 2 * n_t; ++p) {
        if (rfull(p, p) < 0.0) {
            rfull.row(p) = -rfull.row(p);
            qfull.col(p) = -qfull.col(p);
        }
    }
    const double scale = dec.h_r.norm();
    for (int p = 0; p < 2 * n_t; ++p)
        if (rfull(p, p) < 1e-12 * scale)
            throw DegenerateChannelError("real_decompose: rank-deficient channel embedding");

    dec.q = std::move(qfull);
    dec.r = std::move(rfull);
    dec.qty = dec.q.transpose() * dec.y_r;
    dec.metric_offset = std::max(0.0, dec.y_r.squaredNorm() - dec.qty.squaredNorm());
    return dec;
}

} // namespace mpps
