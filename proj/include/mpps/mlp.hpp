#pragma once

// One-hidden-layer network mapping per-layer moment features
// [mu_re, mu_im, s2_re, s2_im, T_re, T_im, sigma2_noise] to the M_c bit
// LLRs of a complex symbol. Plain tanh MLP with input standardization,
// trained with Adam on an L2 loss; one shared model serves every layer.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mpps/errors.hpp"
#include "mpps/rng.hpp"

namespace mpps {

constexpr int kFeatureDim = 7;

struct MlpModel {
    int in_dim = kFeatureDim;
    int hidden_dim = 0;
    int out_dim = 0;
    int m_c = 0;
    double llr_clamp = 60.0;
    Eigen::VectorXd feat_mean, feat_std;
    Eigen::MatrixXd w1; // hidden x in
    Eigen::VectorXd b1;
    Eigen::MatrixXd w2; // out x hidden
    Eigen::VectorXd b2;
};

struct TrainSample {
    std::array<double, kFeatureDim> features{};
    std::vector<double> label; // M_c clamped log-MAP LLRs
};

struct MlpGradients {
    Eigen::MatrixXd w1;
    Eigen::VectorXd b1;
    Eigen::MatrixXd w2;
    Eigen::VectorXd b2;
};

struct TrainConfig {
    int epochs = 200;
    int batch_size = 128;
    double step_size = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::uint64_t seed = 1;
};

inline MlpModel init_model(int hidden_dim, int m_c, Rng& rng, double llr_clamp = 60.0) {
    if (hidden_dim < 1) throw std::invalid_argument("init_model: hidden_dim must be >= 1");
    MlpModel m;
    m.hidden_dim = hidden_dim;
    m.out_dim = m_c;
    m.m_c = m_c;
    m.llr_clamp = llr_clamp;
    m.feat_mean = Eigen::VectorXd::Zero(m.in_dim);
    m.feat_std = Eigen::VectorXd::Ones(m.in_dim);
    m.w1.resize(hidden_dim, m.in_dim);
    m.b1 = Eigen::VectorXd::Zero(hidden_dim);
    m.w2.resize(m.out_dim, hidden_dim);
    m.b2 = Eigen::VectorXd::Zero(m.out_dim);

    const double r1 = std::sqrt(6.0 / (m.in_dim + hidden_dim));
    for (int i = 0; i < hidden_dim; ++i)
        for (int j = 0; j < m.in_dim; ++j) m.w1(i, j) = rng.uniform(-r1, r1);
    const double r2 = std::sqrt(6.0 / (hidden_dim + m.out_dim));
    for (int i = 0; i < m.out_dim; ++i)
        for (int j = 0; j < hidden_dim; ++j) m.w2(i, j) = rng.uniform(-r2, r2);
    return m;
}

namespace detail {

inline Eigen::VectorXd standardize(const MlpModel& m, const std::array<double, kFeatureDim>& f) {
    Eigen::VectorXd x(m.in_dim);
    for (int i = 0; i < m.in_dim; ++i)
        x(i) = (f[static_cast<std::size_t>(i)] - m.feat_mean(i)) / m.feat_std(i);
    return x;
}

inline Eigen::VectorXd forward_raw(const MlpModel& m, const std::array<double, kFeatureDim>& f) {
    const Eigen::VectorXd x = standardize(m, f);
    const Eigen::VectorXd h = (m.w1 * x + m.b1).array().tanh();
    return m.w2 * h + m.b2;
}

} // namespace detail

inline std::vector<double> forward(const MlpModel& m, const std::array<double, kFeatureDim>& f) {
    const Eigen::VectorXd out = detail::forward_raw(m, f);
    std::vector<double> llr(static_cast<std::size_t>(m.out_dim));
    for (int i = 0; i < m.out_dim; ++i)
        llr[static_cast<std::size_t>(i)] = std::clamp(out(i), -m.llr_clamp, m.llr_clamp);
    return llr;
}

// Mean-squared-error loss over all output coordinates of a batch.
inline double batch_loss(const MlpModel& m, const std::vector<TrainSample>& batch) {
    if (batch.empty()) throw std::invalid_argument("batch_loss: empty batch");
    double se = 0.0;
    for (const auto& s : batch) {
        const Eigen::VectorXd out = detail::forward_raw(m, s.features);
        for (int i = 0; i < m.out_dim; ++i) {
            const double r = out(i) - s.label[static_cast<std::size_t>(i)];
            se += r * r;
        }
    }
    return se / (static_cast<double>(batch.size()) * m.out_dim);
}

inline MlpGradients grad_l2(const MlpModel& m, const std::vector<TrainSample>& batch,
                            double* loss_out = nullptr) {
    if (batch.empty()) throw std::invalid_argument("grad_l2: empty batch");
    MlpGradients g{Eigen::MatrixXd::Zero(m.hidden_dim, m.in_dim),
                   Eigen::VectorXd::Zero(m.hidden_dim),
                   Eigen::MatrixXd::Zero(m.out_dim, m.hidden_dim),
                   Eigen::VectorXd::Zero(m.out_dim)};
    const double scale = 2.0 / (static_cast<double>(batch.size()) * m.out_dim);
    double se = 0.0;
    for (const auto& s : batch) {
        const Eigen::VectorXd x = detail::standardize(m, s.features);
        const Eigen::VectorXd h = (m.w1 * x + m.b1).array().tanh();
        const Eigen::VectorXd out = m.w2 * h + m.b2;
        Eigen::VectorXd dout(m.out_dim);
        for (int i = 0; i < m.out_dim; ++i) {
            const double r = out(i) - s.label[static_cast<std::size_t>(i)];
            se += r * r;
            dout(i) = scale * r;
        }
        g.b2 += dout;
        g.w2 += dout * h.transpose();
        const Eigen::VectorXd dh = m.w2.transpose() * dout;
        const Eigen::VectorXd dpre = dh.array() * (1.0 - h.array().square());
        g.b1 += dpre;
        g.w1 += dpre * x.transpose();
    }
    if (loss_out) *loss_out = se / (static_cast<double>(batch.size()) * m.out_dim);
    return g;
}

struct TrainResult {
    MlpModel model;
    std::vector<double> loss_trace; // per-epoch mean loss
};

inline TrainResult train(MlpModel m, const std::vector<TrainSample>& dataset,
                         const TrainConfig& cfg) {
    if (dataset.empty()) throw std::invalid_argument("train: empty dataset");

    // Fit standardization on the training set; constant features keep unit scale.
    m.feat_mean.setZero();
    for (const auto& s : dataset)
        for (int i = 0; i < m.in_dim; ++i) m.feat_mean(i) += s.features[static_cast<std::size_t>(i)];
    m.feat_mean /= static_cast<double>(dataset.size());
    Eigen::VectorXd var = Eigen::VectorXd::Zero(m.in_dim);
    for (const auto& s : dataset)
        for (int i = 0; i < m.in_dim; ++i) {
            const double d = s.features[static_cast<std::size_t>(i)] - m.feat_mean(i);
            var(i) += d * d;
        }
    var /= static_cast<double>(dataset.size());
    for (int i = 0; i < m.in_dim; ++i)
        m.feat_std(i) = var(i) > 1e-24 ? std::sqrt(var(i)) : 1.0;

    MlpGradients mom{Eigen::MatrixXd::Zero(m.hidden_dim, m.in_dim),
                     Eigen::VectorXd::Zero(m.hidden_dim),
                     Eigen::MatrixXd::Zero(m.out_dim, m.hidden_dim),
                     Eigen::VectorXd::Zero(m.out_dim)};
    MlpGradients vel = mom;

    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(cfg.seed);

    TrainResult res;
    long step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng.engine());
        double epoch_se = 0.0;
        std::size_t epoch_n = 0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t stop =
                std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            std::vector<TrainSample> batch;
            batch.reserve(stop - start);
            for (std::size_t i = start; i < stop; ++i) batch.push_back(dataset[order[i]]);

            double loss = 0.0;
            const MlpGradients g = grad_l2(m, batch, &loss);
            ++step;
            const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
            const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
            auto adam = [&](auto& w, auto& mo, auto& ve, const auto& gr) {
                mo = cfg.beta1 * mo + (1.0 - cfg.beta1) * gr;
                ve = (cfg.beta2 * ve.array() + (1.0 - cfg.beta2) * gr.array().square()).matrix();
                w.array() -= cfg.step_size * (mo.array() / c1) / ((ve.array() / c2).sqrt() + cfg.eps);
            };
            adam(m.w1, mom.w1, vel.w1, g.w1);
            adam(m.b1, mom.b1, vel.b1, g.b1);
            adam(m.w2, mom.w2, vel.w2, g.w2);
            adam(m.b2, mom.b2, vel.b2, g.b2);

            epoch_se += loss * static_cast<double>(batch.size());
            epoch_n += batch.size();
        }
        const double epoch_loss = epoch_se / static_cast<double>(epoch_n);
        res.loss_trace.push_back(epoch_loss);
        if (epoch_loss > 1e6 || !std::isfinite(epoch_loss))
            throw TrainingDivergedError("train: loss exceeded divergence bound");
    }
    res.model = std::move(m);
    return res;
}

inline void save_model(const MlpModel& m, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("save_model: cannot open " + path);
    auto tok = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    f << "mppsnet-v1 " << m.in_dim << ' ' << m.hidden_dim << ' ' << m.out_dim << ' ' << m.m_c
      << ' ' << tok(m.llr_clamp) << '\n';
    auto line = [&](auto&& values, Eigen::Index n) {
        for (Eigen::Index i = 0; i < n; ++i) f << (i ? " " : "") << tok(values(i));
        f << '\n';
    };
    line([&](Eigen::Index i) { return m.feat_mean(i); }, m.in_dim);
    line([&](Eigen::Index i) { return m.feat_std(i); }, m.in_dim);
    line([&](Eigen::Index i) { return m.w1(i / m.in_dim, i % m.in_dim); },
         static_cast<Eigen::Index>(m.hidden_dim) * m.in_dim);
    line([&](Eigen::Index i) { return m.b1(i); }, m.hidden_dim);
    line([&](Eigen::Index i) { return m.w2(i / m.hidden_dim, i % m.hidden_dim); },
         static_cast<Eigen::Index>(m.out_dim) * m.hidden_dim);
    line([&](Eigen::Index i) { return m.b2(i); }, m.out_dim);
    if (!f) throw std::runtime_error("save_model: write failed for " + path);
}

inline MlpModel load_model(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ModelFormatError("load_model: cannot open " + path);
    std::string tag;
    MlpModel m;
    if (!(f >> tag >> m.in_dim >> m.hidden_dim >> m.out_dim >> m.m_c >> m.llr_clamp))
        throw ModelFormatError("load_model: bad header");
    if (tag != "mppsnet-v1") throw ModelFormatError("load_model: unsupported version " + tag);
    if (m.in_dim != kFeatureDim || m.hidden_dim < 1 || m.out_dim < 1 || m.out_dim != m.m_c)
        throw ModelFormatError("load_model: inconsistent dimensions");

    auto read_vec = [&](Eigen::Index n) {
        Eigen::VectorXd v(n);
        for (Eigen::Index i = 0; i < n; ++i)
            if (!(f >> v(i))) throw ModelFormatError("load_model: truncated file");
        return v;
    };
    m.feat_mean = read_vec(m.in_dim);
    m.feat_std = read_vec(m.in_dim);
    for (int i = 0; i < m.in_dim; ++i)
        if (!(m.feat_std(i) > 0.0)) throw ModelFormatError("load_model: non-positive feat_std");
    const Eigen::VectorXd w1 = read_vec(static_cast<Eigen::Index>(m.hidden_dim) * m.in_dim);
    m.w1 = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
               w1.data(), m.hidden_dim, m.in_dim);
    m.b1 = read_vec(m.hidden_dim);
    const Eigen::VectorXd w2 = read_vec(static_cast<Eigen::Index>(m.out_dim) * m.hidden_dim);
    m.w2 = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
               w2.data(), m.out_dim, m.hidden_dim);
    m.b2 = read_vec(m.out_dim);

    std::string extra;
    if (f >> extra) throw ModelFormatError("load_model: trailing content");
    return m;
}

} // namespace mpps
