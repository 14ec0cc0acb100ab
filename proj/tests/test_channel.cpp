#include <catch2/catch_amalgamated.hpp>

#include "mpps/channel.hpp"

using namespace mpps;

namespace {
const ChannelModelConfig kIid{ChannelKind::iid_rayleigh, 0.0, 0.0};
const ChannelModelConfig kAwgn{ChannelKind::identity_awgn, 0.0, 0.0};
}

TEST_CASE("noise variance from SNR") {
    const Constellation c16 = build_constellation(4);
    REQUIRE(noise_var_from_snr(0.0, 4, c16, kIid) == Catch::Approx(40.0));

    const Constellation c4 = build_constellation(2);
    REQUIRE(noise_var_from_snr(10.0, 1, c4, kAwgn) == Catch::Approx(0.2));

    // strictly decreasing in SNR, vanishing in the limit
    double prev = noise_var_from_snr(-10.0, 2, c16, kIid);
    for (double snr = -8.0; snr <= 40.0; snr += 2.0) {
        const double cur = noise_var_from_snr(snr, 2, c16, kIid);
        REQUIRE(cur < prev);
        prev = cur;
    }
    REQUIRE(noise_var_from_snr(300.0, 2, c16, kIid) < 1e-25);
}

TEST_CASE("identity channel is the identity") {
    Rng rng(1);
    const auto h = draw_channel(kAwgn, 4, 4, rng);
    REQUIRE(h.isApprox(Eigen::MatrixXcd::Identity(4, 4)));
    REQUIRE_THROWS_AS(draw_channel(kIid, 2, 3, rng), std::invalid_argument);
}

TEST_CASE("kronecker with zero correlation equals the iid generator bit-for-bit") {
    const ChannelModelConfig kron0{ChannelKind::kronecker_rayleigh, 0.0, 0.0};
    Rng a(77), b(77);
    const auto h_kron = draw_channel(kron0, 4, 4, a);
    const auto h_iid = draw_channel(kIid, 4, 4, b);
    REQUIRE(h_kron == h_iid);
}

TEST_CASE("kronecker rho=0.3 produces the expected receive correlation") {
    const ChannelModelConfig kron{ChannelKind::kronecker_rayleigh, 0.3, 0.3};
    Rng rng(2024);
    const int n = 4;
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(n, n);
    const int draws = 100000;
    for (int k = 0; k < draws; ++k) {
        const auto h = draw_channel(kron, n, n, rng);
        acc += h * h.adjoint();
    }
    acc /= static_cast<double>(draws) * n;
    REQUIRE(std::abs(acc(0, 1).real() - 0.3) < 0.05);
    REQUIRE(std::abs(acc(0, 0).real() - 1.0) < 0.05);
}

TEST_CASE("transmit adds complex noise of the requested variance") {
    Rng rng(5);
    const Eigen::MatrixXcd h = Eigen::MatrixXcd::Identity(2, 2);
    const Eigen::VectorXcd s = Eigen::VectorXcd::Zero(2);

    SECTION("noiseless") {
        Eigen::VectorXcd s2(2);
        s2 << std::complex<double>(1, -3), std::complex<double>(-1, 1);
        const auto y = transmit(h, s2, 0.0, rng);
        REQUIRE(y == h * s2);
    }
    SECTION("unit variance moments") {
        double e2 = 0.0, vre = 0.0, vim = 0.0;
        const int draws = 100000;
        for (int k = 0; k < draws; ++k) {
            const auto y = transmit(h, s, 1.0, rng);
            e2 += y.squaredNorm() / 2.0;
            vre += y(0).real() * y(0).real();
            vim += y(0).imag() * y(0).imag();
        }
        REQUIRE(std::abs(e2 / draws - 1.0) < 0.02);
        REQUIRE(std::abs(vre / draws - 0.5) < 0.02);
        REQUIRE(std::abs(vim / draws - 0.5) < 0.02);
    }
    SECTION("shape mismatch") {
        const Eigen::VectorXcd bad = Eigen::VectorXcd::Zero(3);
        REQUIRE_THROWS_AS(transmit(h, bad, 1.0, rng), std::invalid_argument);
    }
}
