#pragma once

// Full MPPS pipeline: candidate metrics -> OT sort -> per-layer moments ->
// shared network -> per-bit LLRs. mpps_ideal feeds the Theorem-2 minimal
// path set built around the exact best path instead of a heuristic list.

#include <array>
#include <vector>

#include "mpps/candidates.hpp"
#include "mpps/constellation.hpp"
#include "mpps/detectors.hpp"
#include "mpps/mlp.hpp"
#include "mpps/moment_fit.hpp"

namespace mpps {

// One 7-feature vector per complex layer t: moments of real layer t and of
// imaginary layer t+N_t plus the channel noise variance. Fitted moments are
// conditioned to the lattice scale before standardization: a near-flat row
// can put mu/sigma^2 orders of magnitude outside the meaningful range, which
// would wreck the z-scored inputs for every other sample.
inline std::vector<std::array<double, kFeatureDim>>
moment_features(const std::vector<LayerMoments>& lm, int n_t, double noise_var,
                const Constellation& c) {
    const double mu_cap = 3.0 * c.pam_levels.back();
    const double s2_cap = 100.0;
    auto cond_mu = [&](double mu) { return std::clamp(mu, -mu_cap, mu_cap); };
    auto cond_s2 = [&](double s2) { return std::min(s2, s2_cap); };
    std::vector<std::array<double, kFeatureDim>> out(static_cast<std::size_t>(n_t));
    for (int t = 0; t < n_t; ++t) {
        const auto& re = lm[static_cast<std::size_t>(t)];
        const auto& im = lm[static_cast<std::size_t>(t + n_t)];
        out[static_cast<std::size_t>(t)] = {cond_mu(re.mu),
                                            cond_mu(im.mu),
                                            cond_s2(re.sigma2),
                                            cond_s2(im.sigma2),
                                            re.transform_feature,
                                            im.transform_feature,
                                            noise_var};
    }
    return out;
}

inline LlrVector mpps_llrs_from_table(const LayerMetricTable& table, const Constellation& c,
                                      double noise_var, const MlpModel& model) {
    const int n_t = table.n_layers() / 2;
    const auto lm = mpps_layer_statistics(table, c);
    const auto feats = moment_features(lm, n_t, noise_var, c);
    LlrVector llr(static_cast<std::size_t>(n_t * c.bits_per_symbol), 0.0);
    for (int t = 0; t < n_t; ++t) {
        const auto out = forward(model, feats[static_cast<std::size_t>(t)]);
        for (int b = 0; b < c.bits_per_symbol; ++b)
            llr[static_cast<std::size_t>(t * c.bits_per_symbol + b)] =
                out[static_cast<std::size_t>(b)];
    }
    return llr;
}

inline LlrVector mpps_detect(const RealDecomposition& dec, const CandidateList& cands,
                             const Constellation& c, double noise_var, const MlpModel& model) {
    const LayerMetricTable table = extract_layer_metrics(cands, c, dec.n_t());
    return mpps_llrs_from_table(table, c, noise_var, model);
}

inline LlrVector mpps_ideal_detect(const RealDecomposition& dec, const Constellation& c,
                                   double noise_var, const MlpModel& model) {
    const ExhaustiveMinima em = exhaustive_layer_minima(dec, c, false);
    const CandidateList minimal = minimal_path_set(dec, c, em.best);
    return mpps_detect(dec, minimal, c, noise_var, model);
}

} // namespace mpps
