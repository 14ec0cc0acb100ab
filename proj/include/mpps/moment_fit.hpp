#pragma once

// Gaussian moment recovery from constrained-minimum metric rows. On the
// lattice X_{i+1} - X_i = 2 the forward differences of
// f(X) = (X - mu)^2 / (2 sigma^2) + const satisfy
//   D_{i+1} - D_i = (2/sigma^2) X_i + (2/sigma^2)(1 - mu),
// so a line fit over (X_i, D_{i+1}-D_i) inverts the moments exactly:
// sigma^2 = 2/a, mu = 1 - b/a.

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "mpps/candidates.hpp"
#include "mpps/constellation.hpp"
#include "mpps/errors.hpp"
#include "mpps/ot_transform.hpp"

namespace mpps {

struct LayerMoments {
    double mu = 0.0;
    double sigma2 = 0.0;
    double transform_feature = 0.0; // displaced fraction of the OT sort
    int layer = 0;                  // real-layer index
    bool fallback = false;          // moments substituted, not fitted
};

constexpr double kSigma2Floor = 0.25; // fallback variance, lattice units^2

namespace detail {

inline std::pair<double, double> solve_moments(double a, double b) {
    if (!(a > 1e-12)) throw NonConvexFitError("moment fit: non-positive difference slope");
    return {1.0 - b / a, 2.0 / a};
}

} // namespace detail

// Least-squares line through the forward differences of consecutive present
// levels. levels must be ascending lattice values; gaps wider than one
// spacing contribute no difference.
inline std::pair<double, double> fit_moments_ls(std::span<const double> levels,
                                                std::span<const double> metrics) {
    if (levels.size() != metrics.size())
        throw std::invalid_argument("fit_moments_ls: length mismatch");
    std::vector<double> xs, ds;
    for (std::size_t i = 0; i + 1 < levels.size(); ++i) {
        if (std::abs(levels[i + 1] - levels[i] - 2.0) > 1e-9) continue;
        xs.push_back(levels[i]);
        ds.push_back(metrics[i + 1] - metrics[i]);
    }
    if (xs.size() < 2)
        throw InsufficientSamplesError("fit_moments_ls: need at least two consecutive differences");

    double mx = 0.0, md = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        md += ds[i];
    }
    mx /= static_cast<double>(xs.size());
    md /= static_cast<double>(xs.size());
    double sxx = 0.0, sxd = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxd += (xs[i] - mx) * (ds[i] - md);
    }
    if (sxx <= 0.0)
        throw InsufficientSamplesError("fit_moments_ls: degenerate abscissae");
    const double a = sxd / sxx;
    const double b = md - a * mx;
    return detail::solve_moments(a, b);
}

// Exact solve from three consecutive lattice points around x_center.
inline std::pair<double, double> fit_moments_three_point(double x_center, double f_minus,
                                                         double f_center, double f_plus) {
    const double d_minus = f_center - f_minus; // a*(x_center - 2) + b
    const double d_plus = f_plus - f_center;   // a*x_center + b
    const double a = (d_plus - d_minus) / 2.0;
    const double b = d_plus - a * x_center;
    return detail::solve_moments(a, b);
}

namespace detail {

// Fit a compacted (position, value) row: exact three-point solve on a lone
// consecutive triple, least squares otherwise.
inline std::pair<double, double> fit_present_row(const std::vector<int>& present,
                                                 const std::vector<double>& values,
                                                 const Constellation& c) {
    if (present.size() == 3 && present[2] - present[0] == 2)
        return fit_moments_three_point(c.pam_levels[static_cast<std::size_t>(present[1])],
                                       values[0], values[1], values[2]);
    std::vector<double> levels;
    levels.reserve(present.size());
    for (int i : present) levels.push_back(c.pam_levels[static_cast<std::size_t>(i)]);
    return fit_moments_ls(levels, values);
}

} // namespace detail

// Steps 1-2 of the detector: per real layer, OT-sort the present metrics,
// then fit moments (three-point on an exact minimal neighborhood, least
// squares otherwise). A non-convex arrangement (possible when the minimum
// sits at a lattice edge) is rearranged once around the neighborhood center
// before the floor fallback applies; rows that cannot support any fit fall
// back to the argmin level with the floor variance.
inline std::vector<LayerMoments> mpps_layer_statistics(const LayerMetricTable& table,
                                                       const Constellation& c,
                                                       double sigma2_floor = kSigma2Floor) {
    std::vector<LayerMoments> out;
    out.reserve(table.d.size());
    for (int j = 0; j < table.n_layers(); ++j) {
        const auto& row = table.d[static_cast<std::size_t>(j)];
        auto [st, transformed] = ot_sort_transform(row);

        std::vector<int> present;
        for (int i = 0; i < table.n_levels(); ++i)
            if (transformed[static_cast<std::size_t>(i)]) present.push_back(i);
        const int k = static_cast<int>(present.size());

        std::vector<double> values;
        values.reserve(present.size());
        for (int i : present) values.push_back(*transformed[static_cast<std::size_t>(i)]);

        LayerMoments lm;
        lm.layer = j;
        lm.transform_feature = st.displaced_fraction;

        int best_idx = present[0];
        for (int i : present)
            if (*transformed[static_cast<std::size_t>(i)] <
                *transformed[static_cast<std::size_t>(best_idx)])
                best_idx = i;

        try {
            try {
                auto [mu, s2] = detail::fit_present_row(present, values, c);
                lm.mu = mu;
                lm.sigma2 = s2;
            } catch (const NonConvexFitError&) {
                // Re-center: ascending metrics around the middle position is
                // again a Gaussian rank order and always convex for rows of
                // up to four levels.
                std::vector<double> sorted(values);
                std::sort(sorted.begin(), sorted.end());
                const auto order = gaussian_target_order(k, (k - 1) / 2);
                std::vector<double> centered(static_cast<std::size_t>(k));
                int displaced = 0;
                for (int r = 0; r < k; ++r) {
                    centered[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])] =
                        sorted[static_cast<std::size_t>(r)];
                }
                for (int i = 0; i < k; ++i)
                    if (centered[static_cast<std::size_t>(i)] !=
                        *row[static_cast<std::size_t>(present[static_cast<std::size_t>(i)])])
                        ++displaced;
                auto [mu, s2] = detail::fit_present_row(present, centered, c);
                lm.mu = mu;
                lm.sigma2 = s2;
                lm.transform_feature = static_cast<double>(displaced) / table.n_levels();
            }
        } catch (const NonConvexFitError&) {
            lm.mu = c.pam_levels[static_cast<std::size_t>(best_idx)];
            lm.sigma2 = sigma2_floor;
            lm.fallback = true;
        } catch (const InsufficientSamplesError&) {
            lm.mu = c.pam_levels[static_cast<std::size_t>(best_idx)];
            lm.sigma2 = sigma2_floor;
            lm.fallback = true;
        }
        out.push_back(lm);
    }
    return out;
}

} // namespace mpps
