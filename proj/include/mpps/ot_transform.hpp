#pragma once

// Optimal-transport rearrangement of a sampled metric row: permute the
// induced probabilities p_i ~ exp(-D_i) into the rank order of a discrete
// Gaussian centered at the row minimum. Positions at equal distance from
// the peak carry equal target mass, so any assignment inside such a pair is
// optimal; we pick the one closest to the original row, which leaves
// already-unimodal rows untouched.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include "mpps/errors.hpp"

namespace mpps {

struct SortTransform {
    std::vector<int> perm;          // perm[i] = destination of entry i
    double displaced_fraction = 0.0; // #{i : perm[i] != i} / row length
};

// Positions 0..k-1 ranked by ascending distance to the peak, ties toward the
// smaller index; the rank order of a discretized Gaussian at the peak.
inline std::vector<int> gaussian_target_order(int k, int peak) {
    if (peak < 0 || peak >= k) throw std::invalid_argument("gaussian_target_order: peak out of range");
    std::vector<int> order(static_cast<std::size_t>(k));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return std::abs(a - peak) < std::abs(b - peak);
    });
    return order;
}

inline std::pair<SortTransform, std::vector<std::optional<double>>>
ot_sort_transform(const std::vector<std::optional<double>>& metric_row) {
    const int n = static_cast<int>(metric_row.size());
    std::vector<int> present;
    for (int i = 0; i < n; ++i)
        if (metric_row[static_cast<std::size_t>(i)]) present.push_back(i);
    if (present.empty()) throw EmptyRowError("ot_sort_transform: all entries absent");

    const int k = static_cast<int>(present.size());
    // Work in compacted coordinates 0..k-1 over the present entries.
    std::vector<double> vals(static_cast<std::size_t>(k));
    for (int t = 0; t < k; ++t)
        vals[static_cast<std::size_t>(t)] = *metric_row[static_cast<std::size_t>(present[static_cast<std::size_t>(t)])];

    int peak = 0;
    for (int t = 1; t < k; ++t)
        if (vals[static_cast<std::size_t>(t)] < vals[static_cast<std::size_t>(peak)]) peak = t;

    // Ascending value ranks, stable in original position.
    std::vector<int> rank(static_cast<std::size_t>(k));
    std::iota(rank.begin(), rank.end(), 0);
    std::stable_sort(rank.begin(), rank.end(), [&](int a, int b) {
        return vals[static_cast<std::size_t>(a)] < vals[static_cast<std::size_t>(b)];
    });

    // dest[t] = compacted position the t-th source entry moves to.
    std::vector<int> dest(static_cast<std::size_t>(k), -1);
    int consumed = 0;
    for (int d = 0; consumed < k; ++d) {
        std::vector<int> cls;
        if (peak - d >= 0) cls.push_back(peak - d);
        if (d > 0 && peak + d < k) cls.push_back(peak + d);
        if (cls.empty()) continue;
        if (cls.size() == 1) {
            dest[static_cast<std::size_t>(rank[static_cast<std::size_t>(consumed++)])] = cls[0];
            continue;
        }
        const int l = cls[0] < cls[1] ? cls[0] : cls[1];
        const int r = cls[0] < cls[1] ? cls[1] : cls[0];
        const int u = rank[static_cast<std::size_t>(consumed)];
        const int v = rank[static_cast<std::size_t>(consumed + 1)];
        consumed += 2;
        // Both assignments carry equal target mass; keep entries in place
        // where possible, default the smaller value to the left.
        const int keep_lr = (u == l ? 1 : 0) + (v == r ? 1 : 0);
        const int keep_rl = (v == l ? 1 : 0) + (u == r ? 1 : 0);
        if (keep_rl > keep_lr) {
            dest[static_cast<std::size_t>(v)] = l;
            dest[static_cast<std::size_t>(u)] = r;
        } else {
            dest[static_cast<std::size_t>(u)] = l;
            dest[static_cast<std::size_t>(v)] = r;
        }
    }

    SortTransform st;
    st.perm.resize(static_cast<std::size_t>(n));
    std::iota(st.perm.begin(), st.perm.end(), 0);
    std::vector<std::optional<double>> out(metric_row);
    int displaced = 0;
    for (int t = 0; t < k; ++t) {
        const int src = present[static_cast<std::size_t>(t)];
        const int dst = present[static_cast<std::size_t>(dest[static_cast<std::size_t>(t)])];
        st.perm[static_cast<std::size_t>(src)] = dst;
        out[static_cast<std::size_t>(dst)] = vals[static_cast<std::size_t>(t)];
        if (src != dst) ++displaced;
    }
    st.displaced_fraction = n > 0 ? static_cast<double>(displaced) / n : 0.0;
    return {st, out};
}

// D_KL(q || p) over discrete distributions; terms with q_i = 0 vanish.
inline double kl_divergence(const std::vector<double>& q, const std::vector<double>& p) {
    if (q.size() != p.size()) throw std::invalid_argument("kl_divergence: length mismatch");
    double sq = 0.0, sp = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (q[i] < 0.0 || p[i] < 0.0) throw std::invalid_argument("kl_divergence: negative entry");
        sq += q[i];
        sp += p[i];
    }
    if (std::abs(sq - 1.0) > 1e-9 || std::abs(sp - 1.0) > 1e-9)
        throw std::invalid_argument("kl_divergence: inputs must sum to 1");
    double kl = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (q[i] == 0.0) continue;
        if (p[i] == 0.0) throw std::domain_error("kl_divergence: q not absolutely continuous wrt p");
        kl += q[i] * std::log(q[i] / p[i]);
    }
    return kl;
}

} // namespace mpps
