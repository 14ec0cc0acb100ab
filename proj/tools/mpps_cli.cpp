// Command-line front end: Monte-Carlo sweeps, model training, evaluation
// with a stored model, and the quick oracle self-check suite.

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mpps/mpps.hpp"
#include "mpps/selftest.hpp"

namespace {

int cmd_simulate(const std::string& config_path, const std::string& out_path,
                 const std::string& format, int threads, bool timing) {
    mpps::SimConfig cfg = mpps::load_sim_config(config_path);
    if (timing) cfg.timing = true;
    std::vector<mpps::ResultRow> rows;
    try {
        mpps::run_sweep(cfg, rows, threads);
    } catch (const std::exception& e) {
        mpps::emit_results(rows, format, out_path);
        std::cerr << "simulate failed: " << e.what() << " (partial results written to "
                  << out_path << ")\n";
        return 1;
    }
    mpps::emit_results(rows, format, out_path);
    std::cout << "wrote " << rows.size() << " rows to " << out_path << '\n';
    return 0;
}

int cmd_train(const std::string& config_path, const std::string& model_path) {
    const mpps::SimConfig cfg = mpps::load_sim_config(config_path);
    mpps::DatasetConfig dcfg;
    dcfg.n_t = cfg.n_t;
    dcfg.n_r = cfg.n_r;
    dcfg.m_c = cfg.m_c;
    dcfg.channel = cfg.channel;
    dcfg.k_budget = cfg.k_budget;
    dcfg.snr_min_db = cfg.train_snr_min_db;
    dcfg.snr_max_db = cfg.train_snr_max_db;
    dcfg.llr_clamp = cfg.lambda_max;

    const int n_uses = (cfg.train_samples + cfg.n_t - 1) / cfg.n_t;
    mpps::Rng data_rng = mpps::Rng::from_counters(cfg.train_seed, 0xda7a, 0);
    std::cout << "generating " << n_uses << " oracle-labeled channel uses...\n";
    const auto dataset = mpps::build_dataset(dcfg, n_uses, data_rng);

    mpps::Rng init_rng = mpps::Rng::from_counters(cfg.train_seed, 0xda7a, 1);
    mpps::MlpModel model = mpps::init_model(cfg.hidden_dim, cfg.m_c, init_rng, cfg.lambda_max);
    mpps::TrainConfig tcfg;
    tcfg.epochs = cfg.epochs;
    tcfg.batch_size = cfg.batch_size;
    tcfg.step_size = cfg.step_size;
    tcfg.beta1 = cfg.adam_beta1;
    tcfg.beta2 = cfg.adam_beta2;
    tcfg.eps = cfg.adam_eps;
    tcfg.seed = cfg.train_seed;

    std::cout << "training on " << dataset.size() << " layer samples, " << tcfg.epochs
              << " epochs...\n";
    const mpps::TrainResult res = mpps::train(std::move(model), dataset, tcfg);
    mpps::save_model(res.model, model_path);
    std::cout << "final loss " << res.loss_trace.back() << ", model written to " << model_path
              << '\n';
    return 0;
}

int cmd_oracle(const std::string& config_path) {
    mpps::SimConfig cfg;
    if (!config_path.empty()) cfg = mpps::load_sim_config(config_path);
    const std::uint64_t seed = cfg.seed;

    int failures = 0;
    auto report = [&](const char* name, bool ok, const std::string& detail = "") {
        std::printf("[%s] %s%s%s\n", ok ? " ok " : "FAIL", name, detail.empty() ? "" : ": ",
                    detail.c_str());
        if (!ok) ++failures;
    };

    using namespace mpps;
    {
        bool ok = true;
        for (int m_c : {2, 4, 6, 8}) {
            const Constellation c = build_constellation(m_c);
            double sum = 0.0;
            for (int i = 0; i < c.num_levels(); ++i) {
                if (c.pam_levels[static_cast<std::size_t>(i)] != 2.0 * (i - c.half_levels) + 1.0)
                    ok = false;
                sum += c.pam_levels[static_cast<std::size_t>(i)];
                if (i > 0) {
                    const auto x = c.gray_of_index[static_cast<std::size_t>(i)] ^
                                   c.gray_of_index[static_cast<std::size_t>(i - 1)];
                    if (__builtin_popcount(x) != 1) ok = false;
                }
            }
            if (sum != 0.0) ok = false;
        }
        report("constellation lattice + Gray adjacency", ok);
    }
    {
        Rng rng(seed + 1);
        const Constellation c = build_constellation(4);
        double worst = 0.0;
        for (int k = 0; k < 200; ++k) {
            ChannelModelConfig ch{ChannelKind::iid_rayleigh, 0, 0};
            const auto h = draw_channel(ch, 4, 4, rng);
            Eigen::VectorXcd y(4), s(4);
            for (int i = 0; i < 4; ++i) {
                y(i) = rng.cnormal(4.0);
                s(i) = {c.pam_levels[static_cast<std::size_t>(rng.uniform_int(0, 3))],
                        c.pam_levels[static_cast<std::size_t>(rng.uniform_int(0, 3))]};
            }
            const auto dec = real_decompose(h, y);
            std::vector<int> levels(8);
            for (int j = 0; j < 8; ++j) {
                const auto [t, imag] = dec.layer_map[static_cast<std::size_t>(j)];
                const double v = imag ? s(t).imag() : s(t).real();
                levels[static_cast<std::size_t>(j)] = c.nearest_level_index(v);
            }
            worst = std::max(worst,
                             std::abs(dec.direct_metric(levels, c) - (y - h * s).squaredNorm()));
        }
        report("real embedding preserves metrics", worst < 1e-9);
    }
    {
        Rng rng(seed + 2);
        const Constellation c = build_constellation(2);
        bool ok = true;
        for (int k = 0; k < 50; ++k) {
            ChannelModelConfig ch{ChannelKind::iid_rayleigh, 0, 0};
            const auto h = draw_channel(ch, 2, 2, rng);
            Eigen::VectorXcd y(2);
            for (int i = 0; i < 2; ++i) y(i) = rng.cnormal(4.0);
            const auto dec = real_decompose(h, y);
            const auto cl = kbest_search(dec, c, 16);
            const auto nm = selftest::naive_minima(y, h, c, 2);
            if (std::abs(cl.paths.front().metric - nm.best) > 1e-9) ok = false;
        }
        report("k-best with full breadth finds the ML minimum", ok);
    }
    {
        Rng rng(seed + 3);
        const Constellation c = build_constellation(6);
        double worst = 0.0;
        for (int k = 0; k < 500; ++k) {
            const double mu = rng.uniform(-7.0, 7.0);
            const double s2 = rng.uniform(0.1, 10.0);
            const auto row = selftest::synthetic_gaussian_row(c, mu, s2, rng.uniform(0.0, 5.0));
            const auto [m1, v1] = fit_moments_ls(c.pam_levels, row);
            worst = std::max({worst, std::abs(m1 - mu), std::abs(v1 - s2)});
        }
        report("least-squares moment fit inverts synthetic rows", worst < 1e-8);
    }
    {
        Rng rng(seed + 4);
        bool ok = true;
        for (int k = 0; k < 200; ++k) {
            std::vector<std::optional<double>> row(4);
            std::vector<double> plain(4);
            for (int i = 0; i < 4; ++i) {
                plain[static_cast<std::size_t>(i)] = rng.uniform(0.0, 5.0);
                row[static_cast<std::size_t>(i)] = plain[static_cast<std::size_t>(i)];
            }
            const auto [st, arranged] = ot_sort_transform(row);
            std::vector<double> arr(4);
            for (int i = 0; i < 4; ++i) arr[static_cast<std::size_t>(i)] = *arranged[static_cast<std::size_t>(i)];
            const auto obj = selftest::ot_brute_force(plain, arr);
            if (obj.best - obj.arranged > 1e-12) ok = false;
        }
        report("OT sort attains the Theorem-1 maximum (k=4)", ok);
    }
    {
        Rng rng(seed + 5);
        const Constellation c = build_constellation(4);
        double worst = 0.0;
        for (int k = 0; k < 20; ++k) {
            ChannelModelConfig ch{ChannelKind::iid_rayleigh, 0, 0};
            const auto h = draw_channel(ch, 2, 2, rng);
            std::vector<int> bits(8);
            for (auto& b : bits) b = rng.bit();
            const auto s = modulate(bits, c, 2);
            const Eigen::VectorXcd sv = Eigen::Map<const Eigen::VectorXcd>(s.data(), 2);
            const double nv = noise_var_from_snr(rng.uniform(8.0, 18.0), 2, c, ch);
            const auto y = transmit(h, sv, nv, rng);
            const auto a = exact_log_map(y, h, nv, c, 2);
            const auto b = selftest::naive_log_map(y, h, nv, c, 2);
            for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
        }
        report("exact log-MAP matches naive enumeration", worst < 1e-10);
    }
    {
        Rng rng(seed + 6);
        double worst = 0.0;
        for (int k = 0; k < 3; ++k) {
            MlpModel m = init_model(16, 4, rng);
            std::vector<TrainSample> batch(8);
            for (auto& ts : batch) {
                for (auto& f : ts.features) f = rng.normal();
                ts.label.resize(4);
                for (auto& l : ts.label) l = rng.uniform(-5.0, 5.0);
            }
            worst = std::max(worst, selftest::gradient_fd_max_rel_error(m, batch, 20, rng));
        }
        report("analytic gradients match finite differences", worst < 1e-4);
    }

    std::printf("%s (%d failure%s)\n", failures == 0 ? "ORACLE SUITE PASSED" : "ORACLE SUITE FAILED",
                failures, failures == 1 ? "" : "s");
    return failures == 0 ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"MPPS soft-MIMO detection library: link simulator and tooling"};
    app.require_subcommand(1);

    std::string config_path, out_path, format = "csv", model_path;
    int threads = 1;
    bool timing = false;

    auto* sim = app.add_subcommand("simulate", "run an SNR sweep from a JSON config");
    sim->add_option("--config", config_path, "JSON config file")->required();
    sim->add_option("--out", out_path, "output file")->required();
    sim->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    sim->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    sim->add_flag("--timing", timing, "record per-symbol wall times (non-reproducible column)");

    auto* train = app.add_subcommand("train", "train the LLR-recovery network");
    train->add_option("--config", config_path, "JSON config file")->required();
    train->add_option("--out-model", model_path, "model output path")->required();

    auto* eval = app.add_subcommand("evaluate", "run a sweep with an explicit model file");
    eval->add_option("--model", model_path, "model file")->required();
    eval->add_option("--config", config_path, "JSON config file")->required();
    eval->add_option("--out", out_path, "output file")->required();
    eval->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    eval->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    eval->add_flag("--timing", timing, "record per-symbol wall times");

    auto* oracle = app.add_subcommand("oracle", "run the invariant/oracle self-checks");
    oracle->add_option("--config", config_path, "JSON config file (seed source)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return cmd_simulate(config_path, out_path, format, threads, timing);
        if (train->parsed()) return cmd_train(config_path, model_path);
        if (eval->parsed()) {
            mpps::SimConfig cfg = mpps::load_sim_config(config_path);
            cfg.model_path = model_path;
            if (timing) cfg.timing = true;
            std::vector<mpps::ResultRow> rows;
            try {
                mpps::run_sweep(cfg, rows, threads);
            } catch (const std::exception& e) {
                mpps::emit_results(rows, format, out_path);
                std::cerr << "evaluate failed: " << e.what() << " (partial results written)\n";
                return 1;
            }
            mpps::emit_results(rows, format, out_path);
            std::cout << "wrote " << rows.size() << " rows to " << out_path << '\n';
            return 0;
        }
        if (oracle->parsed()) return cmd_oracle(config_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
