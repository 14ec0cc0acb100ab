#pragma once

// Oracle-labeled training data: each channel use contributes one sample per
// complex layer, with MPPS moment features as inputs and clamped exact
// log-MAP LLRs as labels. SNR is drawn uniformly over a dB range per use.

#include <algorithm>
#include <vector>

#include "mpps/candidates.hpp"
#include "mpps/channel.hpp"
#include "mpps/constellation.hpp"
#include "mpps/detectors.hpp"
#include "mpps/mlp.hpp"
#include "mpps/moment_fit.hpp"
#include "mpps/mpps_detector.hpp"
#include "mpps/rng.hpp"

namespace mpps {

struct DatasetConfig {
    int n_t = 2;
    int n_r = 2;
    int m_c = 2;
    ChannelModelConfig channel;
    int k_budget = 24;
    double snr_min_db = 10.0;
    double snr_max_db = 20.0;
    double llr_clamp = kDefaultLlrClamp;
};

// n_uses channel uses -> n_uses * N_t layer samples. Draw order per use:
// SNR, channel, bits, noise.
inline std::vector<TrainSample> build_dataset(const DatasetConfig& cfg, int n_uses, Rng& rng) {
    const Constellation c = build_constellation(cfg.m_c);
    if (enumeration_size(c, cfg.n_t) > kEnumerationGuard)
        throw EnumerationTooLargeError("build_dataset: label oracle cannot enumerate this lattice");

    std::vector<TrainSample> data;
    data.reserve(static_cast<std::size_t>(n_uses) * static_cast<std::size_t>(cfg.n_t));
    for (int use = 0; use < n_uses; ++use) {
        const double snr_db = rng.uniform(cfg.snr_min_db, cfg.snr_max_db);
        const double noise_var = noise_var_from_snr(snr_db, cfg.n_t, c, cfg.channel);
        const Eigen::MatrixXcd h = draw_channel(cfg.channel, cfg.n_r, cfg.n_t, rng);
        std::vector<int> bits(static_cast<std::size_t>(cfg.n_t * cfg.m_c));
        for (auto& b : bits) b = rng.bit();
        const auto s = modulate(bits, c, cfg.n_t);
        const Eigen::VectorXcd sv =
            Eigen::Map<const Eigen::VectorXcd>(s.data(), static_cast<Eigen::Index>(s.size()));
        const Eigen::VectorXcd y = transmit(h, sv, noise_var, rng);

        const RealDecomposition dec = real_decompose(h, y);
        const CandidateList cands = kbest_search(dec, c, cfg.k_budget);
        const LayerMetricTable table = extract_layer_metrics(cands, c, cfg.n_t);
        const auto lm = mpps_layer_statistics(table, c);
        const auto feats = moment_features(lm, cfg.n_t, noise_var, c);
        const LlrVector ref = exact_log_map(y, h, noise_var, c, cfg.n_t);

        for (int t = 0; t < cfg.n_t; ++t) {
            TrainSample ts;
            ts.features = feats[static_cast<std::size_t>(t)];
            ts.label.resize(static_cast<std::size_t>(cfg.m_c));
            for (int b = 0; b < cfg.m_c; ++b)
                ts.label[static_cast<std::size_t>(b)] =
                    std::clamp(ref[static_cast<std::size_t>(t * cfg.m_c + b)], -cfg.llr_clamp,
                               cfg.llr_clamp);
            data.push_back(std::move(ts));
        }
    }
    return data;
}

} // namespace mpps
