#pragma once

// Monte-Carlo link simulator: SNR sweeps over configured detectors with
// uncoded BER and LLR-fidelity metrics against the exact log-MAP reference.
// Trials are seeded by (seed, snr index, trial index), so sweeps are
// reproducible for any thread count; aggregation reduces in trial order.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "mpps/candidates.hpp"
#include "mpps/channel.hpp"
#include "mpps/constellation.hpp"
#include "mpps/dataset.hpp"
#include "mpps/detectors.hpp"
#include "mpps/mlp.hpp"
#include "mpps/mpps_detector.hpp"
#include "mpps/rng.hpp"

namespace mpps {

enum class DetectorKind {
    exact_log_map,
    exact_max_log,
    candidate_max_log,
    lmmse,
    mpps,
    mpps_ideal
};

inline DetectorKind detector_from_string(const std::string& s) {
    if (s == "exact_log_map") return DetectorKind::exact_log_map;
    if (s == "exact_max_log") return DetectorKind::exact_max_log;
    if (s == "candidate_max_log") return DetectorKind::candidate_max_log;
    if (s == "lmmse") return DetectorKind::lmmse;
    if (s == "mpps") return DetectorKind::mpps;
    if (s == "mpps_ideal") return DetectorKind::mpps_ideal;
    throw std::invalid_argument("unknown detector: " + s);
}

inline std::string to_string(DetectorKind d) {
    switch (d) {
        case DetectorKind::exact_log_map: return "exact_log_map";
        case DetectorKind::exact_max_log: return "exact_max_log";
        case DetectorKind::candidate_max_log: return "candidate_max_log";
        case DetectorKind::lmmse: return "lmmse";
        case DetectorKind::mpps: return "mpps";
        case DetectorKind::mpps_ideal: return "mpps_ideal";
    }
    return "?";
}

struct SimConfig {
    int n_t = 4;
    int n_r = 4;
    int m_c = 4;
    ChannelModelConfig channel;
    std::vector<double> snr_db_list;
    int n_trials = 100;
    std::vector<DetectorKind> detectors;
    int k_budget = 24;
    double lambda_max = kDefaultLlrClamp;
    std::uint64_t seed = 1;
    std::string model_path;
    bool timing = false;
    // Whether trials compute the exact log-MAP reference for fidelity
    // metrics (requires the enumeration guard; skipped otherwise).
    bool fidelity_reference = true;

    // train-subcommand settings
    int train_samples = 50000; // layer samples; uses = ceil(samples / n_t)
    double train_snr_min_db = 10.0;
    double train_snr_max_db = 20.0;
    int hidden_dim = 32;
    int epochs = 200;
    int batch_size = 128;
    double step_size = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t train_seed = 1;

    void validate() const {
        if (n_trials < 1) throw std::invalid_argument("config: n_trials must be >= 1");
        if (detectors.empty()) throw std::invalid_argument("config: detector list is empty");
        if (snr_db_list.empty()) throw std::invalid_argument("config: snr_db_list is empty");
        for (DetectorKind d : detectors)
            if ((d == DetectorKind::mpps || d == DetectorKind::mpps_ideal) && model_path.empty())
                throw std::invalid_argument("config: mpps detectors require model_path");
    }
};

inline SimConfig sim_config_from_json(const nlohmann::json& j) {
    SimConfig c;
    auto get = [&](const char* key, auto& slot) {
        if (j.contains(key)) slot = j.at(key).get<std::decay_t<decltype(slot)>>();
    };
    get("n_t", c.n_t);
    get("n_r", c.n_r);
    get("m_c", c.m_c);
    if (j.contains("channel")) c.channel.kind = channel_kind_from_string(j.at("channel"));
    get("rho_t", c.channel.rho_t);
    get("rho_r", c.channel.rho_r);
    get("snr_db_list", c.snr_db_list);
    get("n_trials", c.n_trials);
    if (j.contains("detectors"))
        for (const auto& name : j.at("detectors"))
            c.detectors.push_back(detector_from_string(name.get<std::string>()));
    get("k_budget", c.k_budget);
    get("lambda_max", c.lambda_max);
    get("seed", c.seed);
    get("model_path", c.model_path);
    get("timing", c.timing);
    get("fidelity_reference", c.fidelity_reference);
    get("train_samples", c.train_samples);
    get("train_snr_min_db", c.train_snr_min_db);
    get("train_snr_max_db", c.train_snr_max_db);
    get("hidden_dim", c.hidden_dim);
    get("epochs", c.epochs);
    get("batch_size", c.batch_size);
    get("step_size", c.step_size);
    get("adam_beta1", c.adam_beta1);
    get("adam_beta2", c.adam_beta2);
    get("adam_eps", c.adam_eps);
    get("train_seed", c.train_seed);
    return c;
}

// MPPS_SEED in the environment overrides the configured seed.
inline SimConfig load_sim_config(const std::string& path, bool apply_env = true) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open config: " + path);
    nlohmann::json j = nlohmann::json::parse(f);
    SimConfig c = sim_config_from_json(j);
    if (apply_env) {
        if (const char* env = std::getenv("MPPS_SEED")) c.seed = std::stoull(env);
    }
    return c;
}

struct ResultRow {
    double snr_db = 0.0;
    std::string detector;
    int k = 0;
    long n_symbols = 0;
    double ber = 0.0;
    double llr_mse = 0.0;
    double sign_mismatch = 0.0;
    double mean_abs_llr_err = 0.0;
    std::uint64_t seed = 0;
    double wall_time_s = 0.0;
};

struct TrialOutput {
    std::vector<int> tx_bits;
    std::vector<LlrVector> detector_llrs;  // parallel to cfg.detectors
    std::vector<double> detector_seconds;
    std::vector<std::uint64_t> candidate_hashes; // 0 for detectors without a list
    LlrVector reference;
    bool has_reference = false;
};

// One channel use; every configured detector sees the identical (y, H,
// sigma^2), and detectors sharing the path budget share one candidate list.
inline TrialOutput run_trial(const SimConfig& cfg, double snr_db, Rng& rng,
                             const MlpModel* model) {
    const Constellation c = build_constellation(cfg.m_c);
    const double noise_var = noise_var_from_snr(snr_db, cfg.n_t, c, cfg.channel);

    const Eigen::MatrixXcd h = draw_channel(cfg.channel, cfg.n_r, cfg.n_t, rng);
    std::vector<int> bits(static_cast<std::size_t>(cfg.n_t * cfg.m_c));
    for (auto& b : bits) b = rng.bit();
    const auto s = modulate(bits, c, cfg.n_t);
    const Eigen::VectorXcd sv =
        Eigen::Map<const Eigen::VectorXcd>(s.data(), static_cast<Eigen::Index>(s.size()));
    const Eigen::VectorXcd y = transmit(h, sv, noise_var, rng);

    const RealDecomposition dec = real_decompose(h, y);

    std::optional<CandidateList> cands;
    std::optional<LayerMetricTable> table;
    double list_seconds = 0.0;
    auto shared_list = [&]() -> const LayerMetricTable& {
        if (!table) {
            const auto t0 = std::chrono::steady_clock::now();
            cands = kbest_search(dec, c, cfg.k_budget);
            table = extract_layer_metrics(*cands, c, cfg.n_t);
            list_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                               .count();
        }
        return *table;
    };

    TrialOutput out;
    out.tx_bits = bits;
    out.detector_llrs.resize(cfg.detectors.size());
    out.detector_seconds.assign(cfg.detectors.size(), 0.0);
    out.candidate_hashes.assign(cfg.detectors.size(), 0);

    for (std::size_t d = 0; d < cfg.detectors.size(); ++d) {
        const auto t0 = std::chrono::steady_clock::now();
        double extra = 0.0;
        switch (cfg.detectors[d]) {
            case DetectorKind::exact_log_map:
                out.detector_llrs[d] = exact_log_map(y, h, noise_var, c, cfg.n_t);
                break;
            case DetectorKind::exact_max_log:
                out.detector_llrs[d] = exact_max_log(y, h, noise_var, c, cfg.n_t);
                break;
            case DetectorKind::candidate_max_log: {
                const auto& tab = shared_list();
                extra = list_seconds; // standalone cost includes list generation
                out.detector_llrs[d] = candidate_max_log(*cands, tab, noise_var, c, cfg.lambda_max);
                out.candidate_hashes[d] = candidate_list_hash(*cands);
                break;
            }
            case DetectorKind::lmmse:
                out.detector_llrs[d] = lmmse_soft(y, h, noise_var, c, cfg.n_t, cfg.lambda_max);
                break;
            case DetectorKind::mpps: {
                const auto& tab = shared_list();
                extra = list_seconds;
                out.detector_llrs[d] = mpps_llrs_from_table(tab, c, noise_var, *model);
                out.candidate_hashes[d] = candidate_list_hash(*cands);
                break;
            }
            case DetectorKind::mpps_ideal:
                out.detector_llrs[d] = mpps_ideal_detect(dec, c, noise_var, *model);
                break;
        }
        out.detector_seconds[d] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() + extra;
    }

    if (cfg.fidelity_reference && enumeration_size(c, cfg.n_t) <= kEnumerationGuard) {
        bool reused = false;
        for (std::size_t d = 0; d < cfg.detectors.size(); ++d)
            if (cfg.detectors[d] == DetectorKind::exact_log_map) {
                out.reference = out.detector_llrs[d];
                reused = true;
                break;
            }
        if (!reused) out.reference = exact_log_map(y, h, noise_var, c, cfg.n_t);
        for (auto& v : out.reference) v = std::clamp(v, -cfg.lambda_max, cfg.lambda_max);
        out.has_reference = true;
    }
    return out;
}

namespace detail {

struct DetectorAccum {
    long bit_errors = 0;
    long bits = 0;
    double se_sum = 0.0;
    double abs_sum = 0.0;
    long mismatches = 0;
    long ref_bits = 0;
    double seconds = 0.0;

    void add(const TrialOutput& t, std::size_t d, double lambda_max) {
        const LlrVector& llr = t.detector_llrs[d];
        for (std::size_t i = 0; i < llr.size(); ++i) {
            const int hard = llr[i] > 0.0 ? 1 : 0;
            bit_errors += hard != t.tx_bits[i] ? 1 : 0;
            ++bits;
        }
        if (t.has_reference) {
            for (std::size_t i = 0; i < llr.size(); ++i) {
                const double v = std::clamp(llr[i], -lambda_max, lambda_max);
                const double e = v - t.reference[i];
                se_sum += e * e;
                abs_sum += std::abs(e);
                mismatches += (v > 0.0) != (t.reference[i] > 0.0) ? 1 : 0;
                ++ref_bits;
            }
        }
        seconds += t.detector_seconds[d];
    }
};

} // namespace detail

// Full sweep; rows stream into `rows` so partial results survive a failure
// (a marker row with detector="error" is appended before rethrowing).
inline void run_sweep(const SimConfig& cfg, std::vector<ResultRow>& rows, int n_threads = 1) {
    cfg.validate();
    if (n_threads < 1) throw std::invalid_argument("run_sweep: n_threads must be >= 1");

    std::optional<MlpModel> model;
    for (DetectorKind d : cfg.detectors)
        if (d == DetectorKind::mpps || d == DetectorKind::mpps_ideal) {
            model = load_model(cfg.model_path);
            break;
        }

    for (std::size_t snr_idx = 0; snr_idx < cfg.snr_db_list.size(); ++snr_idx) {
        const double snr_db = cfg.snr_db_list[snr_idx];
        std::vector<TrialOutput> trials(static_cast<std::size_t>(cfg.n_trials));
        std::exception_ptr failure;
        std::mutex failure_mutex;

        auto worker = [&](int tid) {
            for (int trial = tid; trial < cfg.n_trials; trial += n_threads) {
                try {
                    Rng rng = Rng::from_counters(cfg.seed, snr_idx, static_cast<std::uint64_t>(trial));
                    trials[static_cast<std::size_t>(trial)] =
                        run_trial(cfg, snr_db, rng, model ? &*model : nullptr);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                    return;
                }
            }
        };
        if (n_threads == 1) {
            worker(0);
        } else {
            std::vector<std::thread> pool;
            for (int tid = 0; tid < n_threads; ++tid) pool.emplace_back(worker, tid);
            for (auto& th : pool) th.join();
        }
        if (failure) {
            ResultRow marker;
            marker.snr_db = snr_db;
            marker.detector = "error";
            marker.seed = cfg.seed;
            rows.push_back(marker);
            std::rethrow_exception(failure);
        }

        for (std::size_t d = 0; d < cfg.detectors.size(); ++d) {
            detail::DetectorAccum acc;
            for (const auto& t : trials) acc.add(t, d, cfg.lambda_max);

            ResultRow row;
            row.snr_db = snr_db;
            row.detector = to_string(cfg.detectors[d]);
            switch (cfg.detectors[d]) {
                case DetectorKind::candidate_max_log:
                case DetectorKind::mpps: row.k = cfg.k_budget; break;
                case DetectorKind::mpps_ideal: row.k = 4 * cfg.n_t + 1; break;
                default: row.k = 0; break;
            }
            row.n_symbols = static_cast<long>(cfg.n_trials) * cfg.n_t;
            row.ber = static_cast<double>(acc.bit_errors) / static_cast<double>(acc.bits);
            const double nan = std::numeric_limits<double>::quiet_NaN();
            row.llr_mse = acc.ref_bits ? acc.se_sum / static_cast<double>(acc.ref_bits) : nan;
            row.sign_mismatch =
                acc.ref_bits ? static_cast<double>(acc.mismatches) / static_cast<double>(acc.ref_bits)
                             : nan;
            row.mean_abs_llr_err =
                acc.ref_bits ? acc.abs_sum / static_cast<double>(acc.ref_bits) : nan;
            row.seed = cfg.seed;
            row.wall_time_s =
                cfg.timing ? acc.seconds / static_cast<double>(row.n_symbols) : 0.0;
            rows.push_back(std::move(row));
        }
    }
}

inline std::vector<ResultRow> run_sweep(const SimConfig& cfg, int n_threads = 1) {
    std::vector<ResultRow> rows;
    run_sweep(cfg, rows, n_threads);
    return rows;
}

inline const char* kCsvHeader =
    "snr_db,detector,k,n_symbols,ber,llr_mse,sign_mismatch,mean_abs_llr_err,seed,wall_time_s";

namespace detail {

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace detail

inline std::string results_to_csv(const std::vector<ResultRow>& rows) {
    std::string out = kCsvHeader;
    out += '\n';
    for (const auto& r : rows) {
        out += detail::fmt17(r.snr_db);
        out += ',';
        out += r.detector;
        out += ',';
        out += std::to_string(r.k);
        out += ',';
        out += std::to_string(r.n_symbols);
        out += ',';
        out += detail::fmt17(r.ber);
        out += ',';
        out += detail::fmt17(r.llr_mse);
        out += ',';
        out += detail::fmt17(r.sign_mismatch);
        out += ',';
        out += detail::fmt17(r.mean_abs_llr_err);
        out += ',';
        out += std::to_string(r.seed);
        out += ',';
        out += detail::fmt17(r.wall_time_s);
        out += '\n';
    }
    return out;
}

inline nlohmann::json results_to_json(const std::vector<ResultRow>& rows) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : rows) {
        nlohmann::json j;
        j["snr_db"] = r.snr_db;
        j["detector"] = r.detector;
        j["k"] = r.k;
        j["n_symbols"] = r.n_symbols;
        j["ber"] = r.ber;
        j["llr_mse"] = r.llr_mse;
        j["sign_mismatch"] = r.sign_mismatch;
        j["mean_abs_llr_err"] = r.mean_abs_llr_err;
        j["seed"] = r.seed;
        j["wall_time_s"] = r.wall_time_s;
        arr.push_back(std::move(j));
    }
    return arr;
}

inline void emit_results(const std::vector<ResultRow>& rows, const std::string& format,
                         const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("emit_results: cannot open " + path);
    if (format == "csv") {
        f << results_to_csv(rows);
    } else if (format == "json") {
        f << results_to_json(rows).dump(2) << '\n';
    } else {
        throw std::invalid_argument("emit_results: format must be csv or json");
    }
    if (!f) throw std::runtime_error("emit_results: write failed for " + path);
}

} // namespace mpps
