#pragma once

// Candidate-path generation over the real lattice: a generic K-best
// breadth-first search (fixed path budget, exact metrics), exhaustive
// enumeration for desk-scale oracles, per-layer per-level minimum tables
// D[j][i], and the 4*N_t+1 minimal path set.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <optional>
#include <vector>

#include "mpps/constellation.hpp"
#include "mpps/errors.hpp"
#include "mpps/real_lattice.hpp"

namespace mpps {

struct CandidatePath {
    std::vector<int> levels; // level index per real layer, original order
    double metric = 0.0;     // ||y - Hs||^2
};

struct CandidateList {
    std::vector<CandidatePath> paths; // ascending metric, no duplicates
};

struct LayerMetricTable {
    std::vector<std::vector<std::optional<double>>> d; // [2N_t][2M]
    double global_min = 0.0;

    int n_layers() const { return static_cast<int>(d.size()); }
    int n_levels() const { return d.empty() ? 0 : static_cast<int>(d[0].size()); }
};

inline std::uint64_t candidate_list_hash(const CandidateList& cl) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](std::uint64_t v) {
        for (int b = 0; b < 8; ++b) {
            h ^= (v >> (8 * b)) & 0xffu;
            h *= 0x100000001b3ULL;
        }
    };
    for (const auto& p : cl.paths) {
        for (int lvl : p.levels) mix(static_cast<std::uint64_t>(lvl));
        std::uint64_t bits;
        static_assert(sizeof(bits) == sizeof(p.metric));
        std::memcpy(&bits, &p.metric, sizeof(bits));
        mix(bits);
    }
    return h;
}

namespace detail {

inline bool lex_less(const std::vector<int>& a, const std::vector<int>& b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

inline void sort_paths(std::vector<CandidatePath>& paths) {
    std::sort(paths.begin(), paths.end(), [](const CandidatePath& a, const CandidatePath& b) {
        if (a.metric != b.metric) return a.metric < b.metric;
        return lex_less(a.levels, b.levels);
    });
}

// K-best over the permuted triangular system; forced_layer/forced_level (in
// original layer indexing) pin one layer to a single level when >= 0.
inline CandidateList kbest_impl(const RealDecomposition& dec, const Constellation& c, int k,
                                int forced_layer, int forced_level) {
    if (k < 1) throw std::invalid_argument("kbest_search: k must be >= 1");
    const int n_layers = dec.n_layers();
    const int n_levels = c.num_levels();

    struct Partial {
        double acc = 0.0;
        std::vector<int> levels; // by permuted layer, entries [p..L-1] valid
    };
    std::vector<Partial> beam(1);
    beam[0].levels.assign(static_cast<std::size_t>(n_layers), -1);

    struct Expansion {
        double acc;
        int level;
        int parent;
    };
    std::vector<Expansion> exps;

    for (int p = n_layers - 1; p >= 0; --p) {
        const int orig = dec.col_perm[static_cast<std::size_t>(p)];
        exps.clear();
        for (int parent = 0; parent < static_cast<int>(beam.size()); ++parent) {
            const Partial& par = beam[static_cast<std::size_t>(parent)];
            double base = dec.qty(p);
            for (int m = p + 1; m < n_layers; ++m)
                base -= dec.r(p, m) *
                        c.pam_levels[static_cast<std::size_t>(par.levels[static_cast<std::size_t>(m)])];
            for (int lvl = 0; lvl < n_levels; ++lvl) {
                if (orig == forced_layer && lvl != forced_level) continue;
                const double res = base - dec.r(p, p) * c.pam_levels[static_cast<std::size_t>(lvl)];
                exps.push_back({par.acc + res * res, lvl, parent});
            }
        }
        std::sort(exps.begin(), exps.end(), [&](const Expansion& a, const Expansion& b) {
            if (a.acc != b.acc) return a.acc < b.acc;
            if (a.level != b.level) return a.level < b.level;
            return lex_less(beam[static_cast<std::size_t>(a.parent)].levels,
                            beam[static_cast<std::size_t>(b.parent)].levels);
        });
        if (static_cast<int>(exps.size()) > k) exps.resize(static_cast<std::size_t>(k));

        std::vector<Partial> next;
        next.reserve(exps.size());
        for (const Expansion& e : exps) {
            Partial np = beam[static_cast<std::size_t>(e.parent)];
            np.acc = e.acc;
            np.levels[static_cast<std::size_t>(p)] = e.level;
            next.push_back(std::move(np));
        }
        beam = std::move(next);
    }

    CandidateList out;
    out.paths.reserve(beam.size());
    for (const Partial& par : beam) {
        CandidatePath cp;
        cp.levels.assign(static_cast<std::size_t>(n_layers), -1);
        for (int p = 0; p < n_layers; ++p)
            cp.levels[static_cast<std::size_t>(dec.col_perm[static_cast<std::size_t>(p)])] =
                par.levels[static_cast<std::size_t>(p)];
        cp.metric = dec.direct_metric(cp.levels, c);
        out.paths.push_back(std::move(cp));
    }
    sort_paths(out.paths);
    return out;
}

} // namespace detail

inline CandidateList kbest_search(const RealDecomposition& dec, const Constellation& c, int k) {
    return detail::kbest_impl(dec, c, k, -1, -1);
}

// Best path subject to s[layer] = level; approximation tool for scales where
// exhaustive constrained minima are off the table.
inline CandidateList constrained_kbest(const RealDecomposition& dec, const Constellation& c,
                                       int k, int layer, int level) {
    return detail::kbest_impl(dec, c, k, layer, level);
}

inline LayerMetricTable extract_layer_metrics(const CandidateList& cands, const Constellation& c,
                                              int n_t) {
    if (cands.paths.empty())
        throw std::invalid_argument("extract_layer_metrics: empty candidate list");
    LayerMetricTable t;
    t.d.assign(static_cast<std::size_t>(2 * n_t),
               std::vector<std::optional<double>>(static_cast<std::size_t>(c.num_levels())));
    t.global_min = cands.paths.front().metric;
    for (const auto& p : cands.paths) {
        for (std::size_t j = 0; j < p.levels.size(); ++j) {
            auto& cell = t.d[j][static_cast<std::size_t>(p.levels[j])];
            if (!cell || p.metric < *cell) cell = p.metric;
        }
    }
    return t;
}

struct ExhaustiveMinima {
    LayerMetricTable table;                             // every cell present
    std::vector<std::vector<std::vector<int>>> argmin;  // [j][i] -> levels
    std::vector<int> best;
    double best_metric = std::numeric_limits<double>::infinity();
};

inline double enumeration_size(const Constellation& c, int n_t) {
    return std::pow(static_cast<double>(c.num_levels()), 2.0 * n_t);
}

constexpr double kEnumerationGuard = 16777216.0; // 2^24 leaves

// Full-tree enumeration of all constrained minima D[j][i] (and their argmin
// paths). Cost is one metric evaluation per leaf with shared prefixes.
inline ExhaustiveMinima exhaustive_layer_minima(const RealDecomposition& dec,
                                                const Constellation& c,
                                                bool want_argmin_paths = true) {
    const int n_layers = dec.n_layers();
    const int n_levels = c.num_levels();
    if (enumeration_size(c, n_layers / 2) > kEnumerationGuard)
        throw EnumerationTooLargeError("exhaustive_layer_minima: lattice too large to enumerate");

    ExhaustiveMinima out;
    out.table.d.assign(static_cast<std::size_t>(n_layers),
                       std::vector<std::optional<double>>(static_cast<std::size_t>(n_levels)));
    if (want_argmin_paths)
        out.argmin.assign(static_cast<std::size_t>(n_layers),
                          std::vector<std::vector<int>>(static_cast<std::size_t>(n_levels)));

    std::vector<int> levels_perm(static_cast<std::size_t>(n_layers), 0);
    std::vector<int> levels_orig(static_cast<std::size_t>(n_layers), 0);

    auto dfs = [&](auto&& self, int p, double acc) -> void {
        if (p < 0) {
            const double metric = acc + dec.metric_offset;
            for (int q = 0; q < n_layers; ++q)
                levels_orig[static_cast<std::size_t>(dec.col_perm[static_cast<std::size_t>(q)])] =
                    levels_perm[static_cast<std::size_t>(q)];
            for (int j = 0; j < n_layers; ++j) {
                auto& cell = out.table.d[static_cast<std::size_t>(j)]
                                       [static_cast<std::size_t>(levels_orig[static_cast<std::size_t>(j)])];
                if (!cell || metric < *cell) {
                    cell = metric;
                    if (want_argmin_paths)
                        out.argmin[static_cast<std::size_t>(j)]
                                  [static_cast<std::size_t>(levels_orig[static_cast<std::size_t>(j)])] =
                            levels_orig;
                }
            }
            if (metric < out.best_metric) {
                out.best_metric = metric;
                out.best = levels_orig;
            }
            return;
        }
        double base = dec.qty(p);
        for (int m = p + 1; m < n_layers; ++m)
            base -= dec.r(p, m) *
                    c.pam_levels[static_cast<std::size_t>(levels_perm[static_cast<std::size_t>(m)])];
        for (int lvl = 0; lvl < n_levels; ++lvl) {
            const double res = base - dec.r(p, p) * c.pam_levels[static_cast<std::size_t>(lvl)];
            levels_perm[static_cast<std::size_t>(p)] = lvl;
            self(self, p - 1, acc + res * res);
        }
    };
    dfs(dfs, n_layers - 1, 0.0);
    out.table.global_min = out.best_metric;
    return out;
}

// Theorem-2 path set: the global best path plus, per real layer, the
// constrained minima at the two levels flanking the best level (both taken
// from the same side at a lattice edge). At most 4*N_t+1 distinct paths.
inline CandidateList minimal_path_set(const RealDecomposition& dec, const Constellation& c,
                                      const std::vector<int>& best,
                                      int approx_kbest_budget = 64) {
    const int n_layers = dec.n_layers();
    const int n_levels = c.num_levels();
    if (static_cast<int>(best.size()) != n_layers)
        throw std::invalid_argument("minimal_path_set: best path has wrong length");

    auto neighbor_levels = [&](int b) {
        std::vector<int> out;
        if (b > 0 && b < n_levels - 1) out = {b - 1, b + 1};
        else if (b == 0) out = {1, 2};
        else out = {n_levels - 3, n_levels - 2};
        std::erase_if(out, [&](int i) { return i < 0 || i >= n_levels; });
        return out;
    };

    std::vector<CandidatePath> paths;
    CandidatePath bp{best, dec.direct_metric(best, c)};
    paths.push_back(std::move(bp));

    const bool exhaustive_ok = enumeration_size(c, n_layers / 2) <= kEnumerationGuard;
    std::optional<ExhaustiveMinima> em;
    if (exhaustive_ok) em = exhaustive_layer_minima(dec, c, true);

    for (int j = 0; j < n_layers; ++j) {
        for (int lvl : neighbor_levels(best[static_cast<std::size_t>(j)])) {
            if (exhaustive_ok) {
                const auto& levels =
                    em->argmin[static_cast<std::size_t>(j)][static_cast<std::size_t>(lvl)];
                paths.push_back({levels, dec.direct_metric(levels, c)});
            } else {
                CandidateList cl = constrained_kbest(dec, c, approx_kbest_budget, j, lvl);
                paths.push_back(cl.paths.front());
            }
        }
    }

    detail::sort_paths(paths);
    paths.erase(std::unique(paths.begin(), paths.end(),
                            [](const CandidatePath& a, const CandidatePath& b) {
                                return a.levels == b.levels;
                            }),
                paths.end());
    return CandidateList{std::move(paths)};
}

} // namespace mpps
