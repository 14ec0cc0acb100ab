#pragma once

// Channel generation and the transmission model y = Hs + n. Supported
// models: fixed identity (AWGN), i.i.d. Rayleigh, and Kronecker-correlated
// Rayleigh with exponential correlation R(i,j) = rho^|i-j|.

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "mpps/constellation.hpp"
#include "mpps/rng.hpp"

namespace mpps {

enum class ChannelKind { identity_awgn, iid_rayleigh, kronecker_rayleigh };

struct ChannelModelConfig {
    ChannelKind kind = ChannelKind::iid_rayleigh;
    double rho_t = 0.0;
    double rho_r = 0.0;
};

inline ChannelKind channel_kind_from_string(const std::string& s) {
    if (s == "identity_awgn") return ChannelKind::identity_awgn;
    if (s == "iid_rayleigh") return ChannelKind::iid_rayleigh;
    if (s == "kronecker_rayleigh") return ChannelKind::kronecker_rayleigh;
    throw std::invalid_argument("unknown channel kind: " + s);
}

inline std::string to_string(ChannelKind k) {
    switch (k) {
        case ChannelKind::identity_awgn: return "identity_awgn";
        case ChannelKind::iid_rayleigh: return "iid_rayleigh";
        case ChannelKind::kronecker_rayleigh: return "kronecker_rayleigh";
    }
    return "?";
}

struct ChannelRealization {
    Eigen::MatrixXcd h;
    double noise_var = 0.0; // sigma^2 per complex receive entry
};

// sigma^2 from the SNR definition E||Hs||^2 / E||n||^2. With unit-variance
// fading entries this gives N_t * E_s / snr; the identity channel drops the
// N_t factor.
inline double noise_var_from_snr(double snr_db, int n_t, const Constellation& c,
                                 const ChannelModelConfig& model) {
    if (n_t < 1) throw std::invalid_argument("noise_var_from_snr: n_t must be >= 1");
    const double snr_lin = std::pow(10.0, snr_db / 10.0);
    if (model.kind == ChannelKind::identity_awgn) return c.symbol_energy / snr_lin;
    return static_cast<double>(n_t) * c.symbol_energy / snr_lin;
}

// Principal symmetric square root of the exponential-correlation matrix.
// rho = 0 returns the exact identity so the Kronecker path degenerates to
// the i.i.d. generator bit-for-bit.
inline Eigen::MatrixXd correlation_sqrt(int n, double rho) {
    if (rho < 0.0 || rho >= 1.0)
        throw std::invalid_argument("correlation coefficient must lie in [0,1)");
    if (rho == 0.0) return Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd r(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) r(i, j) = std::pow(rho, std::abs(i - j));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(r);
    Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

inline Eigen::MatrixXcd draw_channel(const ChannelModelConfig& cfg, int n_r, int n_t,
                                     Rng& rng) {
    if (n_t < 1 || n_r < n_t)
        throw std::invalid_argument("draw_channel: need n_r >= n_t >= 1");
    if (cfg.kind == ChannelKind::identity_awgn)
        return Eigen::MatrixXcd::Identity(n_r, n_t);

    Eigen::MatrixXcd a(n_r, n_t);
    for (int i = 0; i < n_r; ++i)
        for (int j = 0; j < n_t; ++j) a(i, j) = rng.cnormal(1.0);
    if (cfg.kind == ChannelKind::iid_rayleigh) return a;

    if (cfg.rho_r == 0.0 && cfg.rho_t == 0.0) return a;
    const Eigen::MatrixXcd rr = correlation_sqrt(n_r, cfg.rho_r).cast<std::complex<double>>();
    const Eigen::MatrixXcd rt = correlation_sqrt(n_t, cfg.rho_t).cast<std::complex<double>>();
    return rr * a * rt;
}

inline Eigen::VectorXcd transmit(const Eigen::MatrixXcd& h, const Eigen::VectorXcd& s,
                                 double noise_var, Rng& rng) {
    if (h.cols() != s.size())
        throw std::invalid_argument("transmit: dimension mismatch between H and s");
    if (noise_var < 0.0) throw std::invalid_argument("transmit: negative noise variance");
    Eigen::VectorXcd y = h * s;
    if (noise_var > 0.0)
        for (Eigen::Index k = 0; k < y.size(); ++k) y(k) += rng.cnormal(noise_var);
    return y;
}

} // namespace mpps
