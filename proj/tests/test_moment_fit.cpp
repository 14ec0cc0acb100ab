#include <catch2/catch_amalgamated.hpp>

#include "mpps/candidates.hpp"
#include "mpps/channel.hpp"
#include "mpps/moment_fit.hpp"
#include "mpps/selftest.hpp"

using namespace mpps;

TEST_CASE("least-squares fit inverts the difference line") {
    const std::vector<double> levels{-3, -1, 1, 3};
    for (double offset : {0.0, 7.25, -3.5}) {
        std::vector<double> d{4 + offset, 1 + offset, 0 + offset, 1 + offset};
        const auto [mu, s2] = fit_moments_ls(levels, d);
        REQUIRE(mu == Catch::Approx(1.0).margin(1e-12));
        REQUIRE(s2 == Catch::Approx(2.0).margin(1e-12));
    }
}

TEST_CASE("synthetic Gaussian rows are recovered exactly") {
    const Constellation c = build_constellation(6);
    Rng rng(17);
    for (int trial = 0; trial < 500; ++trial) {
        const double mu = rng.uniform(-7.0, 7.0);
        const double s2 = rng.uniform(0.1, 10.0);
        const auto row = selftest::synthetic_gaussian_row(c, mu, s2, rng.uniform(0.0, 3.0));
        const auto [m, v] = fit_moments_ls(c.pam_levels, row);
        REQUIRE(m == Catch::Approx(mu).margin(1e-8));
        REQUIRE(v == Catch::Approx(s2).margin(1e-8));
    }
}

TEST_CASE("symmetric rows give zero mean") {
    const std::vector<double> levels{-3, -1, 1, 3};
    const std::vector<double> d{5.0, 1.25, 1.25, 5.0};
    const auto [mu, s2] = fit_moments_ls(levels, d);
    REQUIRE(mu == Catch::Approx(0.0).margin(1e-12));
    REQUIRE(s2 > 0.0);
}

TEST_CASE("least-squares error paths") {
    REQUIRE_THROWS_AS(fit_moments_ls(std::vector<double>{-1, 1}, std::vector<double>{1, 2}),
                      InsufficientSamplesError);
    // gap between runs leaves a single usable difference
    REQUIRE_THROWS_AS(
        fit_moments_ls(std::vector<double>{-3, -1, 3}, std::vector<double>{4, 1, 1}),
        InsufficientSamplesError);
    // decreasing differences: negative slope
    REQUIRE_THROWS_AS(
        fit_moments_ls(std::vector<double>{-3, -1, 1, 3}, std::vector<double>{0, 1, 1, 0}),
        NonConvexFitError);
}

TEST_CASE("three-point solve") {
    SECTION("hand value") {
        for (double offset : {0.0, 2.5}) {
            const auto [mu, s2] = fit_moments_three_point(1.0, 1 + offset, offset, 1 + offset);
            REQUIRE(mu == Catch::Approx(1.0).margin(1e-12));
            REQUIRE(s2 == Catch::Approx(2.0).margin(1e-12));
        }
    }
    SECTION("synthetic recovery") {
        const Constellation c = build_constellation(6);
        Rng rng(19);
        for (int trial = 0; trial < 500; ++trial) {
            const double mu = rng.uniform(-7.0, 7.0);
            const double s2 = rng.uniform(0.1, 10.0);
            const auto row = selftest::synthetic_gaussian_row(c, mu, s2);
            const int ctr = std::clamp(c.nearest_level_index(mu), 1, c.num_levels() - 2);
            const auto [m, v] = fit_moments_three_point(
                c.pam_levels[static_cast<std::size_t>(ctr)], row[static_cast<std::size_t>(ctr - 1)],
                row[static_cast<std::size_t>(ctr)], row[static_cast<std::size_t>(ctr + 1)]);
            REQUIRE(m == Catch::Approx(mu).margin(1e-10));
            REQUIRE(v == Catch::Approx(s2).margin(1e-10));
        }
    }
    SECTION("flat and non-convex triples are rejected") {
        REQUIRE_THROWS_AS(fit_moments_three_point(1.0, 3.0, 3.0, 3.0), NonConvexFitError);
        REQUIRE_THROWS_AS(fit_moments_three_point(1.0, 0.0, 2.0, 3.0), NonConvexFitError);
    }
}

TEST_CASE("LS and three-point agree on full exact rows") {
    const Constellation c = build_constellation(4);
    Rng rng(23);
    for (int trial = 0; trial < 200; ++trial) {
        const double mu = rng.uniform(-3.0, 3.0);
        const double s2 = rng.uniform(0.1, 10.0);
        const auto row = selftest::synthetic_gaussian_row(c, mu, s2);
        const auto [m_ls, v_ls] = fit_moments_ls(c.pam_levels, row);
        const int ctr = std::clamp(c.nearest_level_index(mu), 1, c.num_levels() - 2);
        const auto [m_3p, v_3p] = fit_moments_three_point(
            c.pam_levels[static_cast<std::size_t>(ctr)], row[static_cast<std::size_t>(ctr - 1)],
            row[static_cast<std::size_t>(ctr)], row[static_cast<std::size_t>(ctr + 1)]);
        REQUIRE(m_ls == Catch::Approx(m_3p).margin(1e-8));
        REQUIRE(v_ls == Catch::Approx(v_3p).margin(1e-8));
    }
}

TEST_CASE("layer statistics on minimal sets of a synthetic Gaussian surface") {
    // Build a table whose rows are exact Gaussian sections restricted to the
    // Theorem-2 neighborhood and check end-to-end recovery.
    const Constellation c = build_constellation(4);
    Rng rng(29);
    for (int trial = 0; trial < 200; ++trial) {
        const int n_layers = 4;
        std::vector<double> mu(n_layers), s2(n_layers);
        LayerMetricTable table;
        table.d.assign(n_layers, std::vector<std::optional<double>>(4));
        table.global_min = 0.0;
        for (int j = 0; j < n_layers; ++j) {
            mu[static_cast<std::size_t>(j)] = rng.uniform(-3.0, 3.0);
            s2[static_cast<std::size_t>(j)] = rng.uniform(0.2, 5.0);
            const auto row = selftest::synthetic_gaussian_row(c, mu[static_cast<std::size_t>(j)],
                                                              s2[static_cast<std::size_t>(j)]);
            const int best = c.nearest_level_index(mu[static_cast<std::size_t>(j)]);
            std::vector<int> keep;
            if (best > 0 && best < 3) keep = {best - 1, best, best + 1};
            else if (best == 0) keep = {0, 1, 2};
            else keep = {1, 2, 3};
            for (int i : keep)
                table.d[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] =
                    row[static_cast<std::size_t>(i)];
        }
        const auto lm = mpps_layer_statistics(table, c);
        for (int j = 0; j < n_layers; ++j) {
            REQUIRE_FALSE(lm[static_cast<std::size_t>(j)].fallback);
            REQUIRE(lm[static_cast<std::size_t>(j)].mu ==
                    Catch::Approx(mu[static_cast<std::size_t>(j)]).margin(1e-8));
            REQUIRE(lm[static_cast<std::size_t>(j)].sigma2 ==
                    Catch::Approx(s2[static_cast<std::size_t>(j)]).margin(1e-8));
            REQUIRE(lm[static_cast<std::size_t>(j)].transform_feature == 0.0);
        }
    }
}

TEST_CASE("layer statistics fallback and invariances") {
    const Constellation c = build_constellation(4);
    SECTION("single present level per layer forces the fallback") {
        LayerMetricTable t;
        t.d.assign(2, std::vector<std::optional<double>>(4));
        t.d[0][2] = 1.5;
        t.d[1][0] = 1.5;
        t.global_min = 1.5;
        const auto lm = mpps_layer_statistics(t, c);
        REQUIRE(lm[0].fallback);
        REQUIRE(lm[0].mu == 1.0);   // argmin level
        REQUIRE(lm[0].sigma2 == kSigma2Floor);
        REQUIRE(lm[1].mu == -3.0);
        REQUIRE(lm[1].sigma2 == kSigma2Floor);
    }
    SECTION("table cells are a pure min-reduce over paths") {
        Rng rng(31);
        const ChannelModelConfig iid{ChannelKind::iid_rayleigh, 0.0, 0.0};
        const auto h = draw_channel(iid, 2, 2, rng);
        Eigen::VectorXcd y(2);
        y << rng.cnormal(8.0), rng.cnormal(8.0);
        const auto dec = real_decompose(h, y);
        const auto cl = kbest_search(dec, c, 12);
        const auto table = extract_layer_metrics(cl, c, 2);
        // reduce in reverse path order and compare cell for cell
        std::vector<std::vector<std::optional<double>>> manual(
            4, std::vector<std::optional<double>>(4));
        for (auto it = cl.paths.rbegin(); it != cl.paths.rend(); ++it)
            for (int j = 0; j < 4; ++j) {
                auto& cell = manual[static_cast<std::size_t>(j)]
                                   [static_cast<std::size_t>(it->levels[static_cast<std::size_t>(j)])];
                if (!cell || it->metric < *cell) cell = it->metric;
            }
        for (int j = 0; j < 4; ++j)
            for (int i = 0; i < 4; ++i)
                REQUIRE(table.d[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] ==
                        manual[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)]);
        // statistics are deterministic in the table
        const auto a = mpps_layer_statistics(table, c);
        const auto b = mpps_layer_statistics(table, c);
        for (int j = 0; j < 4; ++j) {
            REQUIRE(a[static_cast<std::size_t>(j)].mu == b[static_cast<std::size_t>(j)].mu);
            REQUIRE(a[static_cast<std::size_t>(j)].sigma2 == b[static_cast<std::size_t>(j)].sigma2);
        }
    }
    SECTION("scale equivariance: metric offsets cancel") {
        Rng rng(37);
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<double> metrics(4);
            metrics[1] = rng.uniform(0.0, 1.0);
            metrics[0] = metrics[1] + rng.uniform(0.5, 3.0);
            metrics[2] = metrics[1] + rng.uniform(0.5, 3.0);
            metrics[3] = metrics[2] + rng.uniform(0.5, 3.0);
            const auto [mu0, s20] = fit_moments_ls(c.pam_levels, metrics);
            std::vector<double> shifted = metrics;
            for (auto& v : shifted) v += 11.75;
            const auto [mu1, s21] = fit_moments_ls(c.pam_levels, shifted);
            REQUIRE(mu0 == Catch::Approx(mu1).margin(1e-10));
            REQUIRE(s20 == Catch::Approx(s21).margin(1e-10));
            REQUIRE(s20 > 0.0);
        }
    }
}
