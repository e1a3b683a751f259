#pragma once
// Subject-level splits, mini-batch training, and run configuration files.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "gazepred/error.hpp"
#include "gazepred/models.hpp"
#include "gazepred/nn/adam.hpp"
#include "gazepred/nn/losses.hpp"
#include "gazepred/rng.hpp"
#include "gazepred/signal.hpp"

namespace gazepred {

struct TrainConfig {
    int batch_size = 32;
    double lr = 0.0003;
    int epochs = 20;
    std::uint64_t seed = 0;
    double train_fraction = 66.0 / 78.0; // by subject
    double pi_ms = 44.0;
    bool shuffle = true;

    void validate() const {
        if (batch_size < 1)
            throw ConfigError("batch_size must be >= 1, got " + std::to_string(batch_size));
        if (!(train_fraction > 0.0 && train_fraction < 1.0))
            throw ConfigError("train_fraction must be in (0, 1), got " +
                              std::to_string(train_fraction));
        if (epochs < 1)
            throw ConfigError("epochs must be >= 1, got " + std::to_string(epochs));
        if (lr < 0.0)
            throw ConfigError("lr must be >= 0, got " + std::to_string(lr));
        if (pi_ms <= 0.0)
            throw ConfigError("pi_ms must be positive, got " + std::to_string(pi_ms));
    }
};

struct TrainHistory {
    std::vector<double> train_loss;
    std::vector<double> val_loss;
    std::vector<double> seconds; // wall time per epoch
};

// Seeded shuffle split by subject. Both sides are returned sorted.
inline std::pair<std::vector<std::string>, std::vector<std::string>>
split_subjects(std::vector<std::string> subject_ids, double train_fraction, std::uint64_t seed) {
    if (subject_ids.size() < 2)
        throw ConfigError("subject split needs at least 2 subjects, got " +
                          std::to_string(subject_ids.size()));
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw ConfigError("train_fraction must be in (0, 1), got " +
                          std::to_string(train_fraction));
    std::sort(subject_ids.begin(), subject_ids.end());
    const auto n = static_cast<std::int64_t>(subject_ids.size());
    Rng rng(mix_seed(seed, 55));
    for (std::int64_t i = n - 1; i > 0; --i) {
        const auto j = static_cast<std::int64_t>(rng.integer(static_cast<std::uint64_t>(i + 1)));
        std::swap(subject_ids[static_cast<std::size_t>(i)], subject_ids[static_cast<std::size_t>(j)]);
    }
    const std::int64_t n_train = std::lround(train_fraction * static_cast<double>(n));
    if (n_train < 1 || n_train > n - 1)
        throw ConfigError("train_fraction " + std::to_string(train_fraction) + " leaves " +
                          std::to_string(n_train) + " of " + std::to_string(n) +
                          " subjects in the train side");
    std::vector<std::string> train(subject_ids.begin(), subject_ids.begin() + n_train);
    std::vector<std::string> test(subject_ids.begin() + n_train, subject_ids.end());
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    return {train, test};
}

namespace detail {

template <typename T>
struct Batch {
    Tensor<T> x;              // [b, channels, window_len]
    Tensor<T> y;              // [b, pi, 2]
    std::vector<int> labels;  // b * pi target classes
};

template <typename T>
Batch<T> make_batch(const std::vector<WindowSample>& windows, const std::vector<std::int64_t>& order,
                    std::int64_t first, std::int64_t count, const ModelConfig& cfg) {
    Batch<T> b;
    b.x = Tensor<T>({count, cfg.in_channels(), cfg.window_len});
    b.y = Tensor<T>({count, cfg.pi_samples, 2});
    b.labels.resize(static_cast<std::size_t>(count) * cfg.pi_samples);
    for (std::int64_t i = 0; i < count; ++i) {
        const WindowSample& w = windows[static_cast<std::size_t>(order[static_cast<std::size_t>(first + i)])];
        fill_input(b.x, i, w, cfg);
        w.target_deltas.require_shape({cfg.pi_samples, 2}, "window targets");
        for (std::int64_t k = 0; k < 2LL * cfg.pi_samples; ++k)
            b.y[i * 2 * cfg.pi_samples + k] = static_cast<T>(w.target_deltas[k]);
        for (int k = 0; k < cfg.pi_samples; ++k)
            b.labels[static_cast<std::size_t>(i * cfg.pi_samples + k)] =
                w.target_labels[static_cast<std::size_t>(k)];
    }
    return b;
}

// Combined loss; fills gradients when requested.
template <typename T>
double batch_loss(Forecaster<T>& model, const Batch<T>& batch, bool training, Tensor<T>* d_deltas,
                  Tensor<T>* d_logits) {
    Tensor<T> pred = model.forward(batch.x, training);
    double loss = nn::euclidean_loss(pred, batch.y, d_deltas);
    if (model.has_class_logits()) {
        const double lambda = model.config().lambda_cls;
        Tensor<T> logits = model.class_logits();
        logits.reshape({batch.x.dim(0) * model.config().pi_samples, model.config().n_classes});
        loss += lambda * nn::cross_entropy_loss(logits, batch.labels, d_logits);
        if (d_logits) {
            d_logits->vec() *= static_cast<T>(lambda);
            d_logits->reshape({batch.x.dim(0), model.config().pi_samples, model.config().n_classes});
        }
    }
    return loss;
}

} // namespace detail

// Shuffled mini-batch training with a per-epoch validation pass.
template <typename T>
TrainHistory train(Forecaster<T>& model, const std::vector<WindowSample>& train_windows,
                   const std::vector<WindowSample>& val_windows, const TrainConfig& cfg) {
    cfg.validate();
    if (train_windows.empty())
        throw DataError("no training windows");
    {
        std::set<std::string> train_subjects, val_subjects;
        for (const auto& w : train_windows)
            train_subjects.insert(w.subject_id);
        for (const auto& w : val_windows)
            val_subjects.insert(w.subject_id);
        for (const auto& s : val_subjects)
            if (train_subjects.count(s))
                throw ConfigError("subject '" + s + "' appears in both train and validation sets");
    }

    auto params = model.parameters();
    nn::AdamState<T> opt;
    opt.lr = cfg.lr;
    opt.init(params);

    const auto n = static_cast<std::int64_t>(train_windows.size());
    std::vector<std::int64_t> order(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i)
        order[static_cast<std::size_t>(i)] = i;
    std::vector<std::int64_t> val_order(val_windows.size());
    for (std::size_t i = 0; i < val_windows.size(); ++i)
        val_order[i] = static_cast<std::int64_t>(i);

    Rng shuffle_rng(mix_seed(cfg.seed, 66));
    TrainHistory hist;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        if (cfg.shuffle)
            for (std::int64_t i = n - 1; i > 0; --i) {
                const auto j = static_cast<std::int64_t>(
                    shuffle_rng.integer(static_cast<std::uint64_t>(i + 1)));
                std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
            }
        double total = 0.0;
        int batch_index = 0;
        for (std::int64_t start = 0; start < n; start += cfg.batch_size, ++batch_index) {
            const std::int64_t m = std::min<std::int64_t>(cfg.batch_size, n - start);
            auto batch = detail::make_batch<T>(train_windows, order, start, m, model.config());
            Tensor<T> dd, dl;
            const double loss =
                detail::batch_loss(model, batch, true, &dd,
                                   model.has_class_logits() ? &dl : nullptr);
            if (!std::isfinite(loss))
                throw NumericError("non-finite training loss " + std::to_string(loss) +
                                   " at epoch " + std::to_string(epoch + 1) + ", batch " +
                                   std::to_string(batch_index + 1));
            for (auto* p : params)
                p->value.grad_vec().setZero();
            model.backward(dd, model.has_class_logits() ? &dl : nullptr);
            nn::adam_step(params, opt);
            total += loss * static_cast<double>(m);
        }
        hist.train_loss.push_back(total / static_cast<double>(n));

        double val_total = 0.0;
        const auto nv = static_cast<std::int64_t>(val_windows.size());
        for (std::int64_t start = 0; start < nv; start += cfg.batch_size) {
            const std::int64_t m = std::min<std::int64_t>(cfg.batch_size, nv - start);
            auto batch = detail::make_batch<T>(val_windows, val_order, start, m, model.config());
            val_total += detail::batch_loss<T>(model, batch, false, nullptr, nullptr) *
                         static_cast<double>(m);
        }
        hist.val_loss.push_back(nv > 0 ? val_total / static_cast<double>(nv) : 0.0);
        hist.seconds.push_back(
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    return hist;
}

// --------------------------------------------------------- run configuration

struct RunConfig {
    ModelConfig model;
    TrainConfig train;
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos)
        return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1")
        return true;
    if (v == "false" || v == "0")
        return false;
    throw ConfigError("config key '" + key + "': expected a boolean, got '" + v + "'");
}

inline int parse_int(const std::string& v, const std::string& key) {
    try {
        std::size_t pos = 0;
        int r = std::stoi(v, &pos);
        if (pos != v.size())
            throw std::invalid_argument("");
        return r;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected an integer, got '" + v + "'");
    }
}

inline double parse_real(const std::string& v, const std::string& key) {
    try {
        std::size_t pos = 0;
        double r = std::stod(v, &pos);
        if (pos != v.size())
            throw std::invalid_argument("");
        return r;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
    }
}

} // namespace detail

// Applies one key = value setting; unknown keys are errors.
inline void apply_config_key(RunConfig& cfg, const std::string& key, const std::string& value) {
    using detail::parse_bool;
    using detail::parse_int;
    using detail::parse_real;
    if (key == "arch")
        cfg.model.arch = parse_arch(value);
    else if (key == "feature_set")
        cfg.model.feature_set = parse_feature_set(value);
    else if (key == "window_len")
        cfg.model.window_len = parse_int(value, key);
    else if (key == "pi_samples")
        cfg.model.pi_samples = parse_int(value, key);
    else if (key == "hidden_size")
        cfg.model.hidden_size = parse_int(value, key);
    else if (key == "n_layers")
        cfg.model.n_layers = parse_int(value, key);
    else if (key == "d_model")
        cfg.model.d_model = parse_int(value, key);
    else if (key == "n_heads")
        cfg.model.n_heads = parse_int(value, key);
    else if (key == "ffn_dim")
        cfg.model.ffn_dim = parse_int(value, key);
    else if (key == "tcn_channels")
        cfg.model.tcn_channels = parse_int(value, key);
    else if (key == "tcn_kernel")
        cfg.model.tcn_kernel = parse_int(value, key);
    else if (key == "tcn_dilations") {
        cfg.model.tcn_dilations.clear();
        std::string cur;
        for (char ch : value + ",") {
            if (ch == ',') {
                if (!cur.empty())
                    cfg.model.tcn_dilations.push_back(parse_int(detail::trim(cur), key));
                cur.clear();
            } else {
                cur += ch;
            }
        }
        if (cfg.model.tcn_dilations.empty())
            throw ConfigError("config key 'tcn_dilations': expected a comma-separated list");
    } else if (key == "dropout")
        cfg.model.dropout = parse_real(value, key);
    else if (key == "n_classes")
        cfg.model.n_classes = parse_int(value, key);
    else if (key == "lambda_cls")
        cfg.model.lambda_cls = parse_real(value, key);
    else if (key == "labels_as_input")
        cfg.model.labels_as_input = parse_bool(value, key);
    else if (key == "batch_size")
        cfg.train.batch_size = parse_int(value, key);
    else if (key == "lr")
        cfg.train.lr = parse_real(value, key);
    else if (key == "epochs")
        cfg.train.epochs = parse_int(value, key);
    else if (key == "seed")
        cfg.train.seed = static_cast<std::uint64_t>(std::stoull(value));
    else if (key == "train_fraction")
        cfg.train.train_fraction = parse_real(value, key);
    else if (key == "pi_ms")
        cfg.train.pi_ms = parse_real(value, key);
    else if (key == "shuffle")
        cfg.train.shuffle = parse_bool(value, key);
    else
        throw ConfigError("unknown config key '" + key + "'");
}

// Flat key = value file; blank lines and lines starting with # are skipped.
inline RunConfig load_run_config(const std::string& path, RunConfig base = RunConfig{}) {
    std::ifstream f(path);
    if (!f)
        throw IoError("cannot open config file " + path);
    std::string line;
    int line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#')
            continue;
        auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key = value");
        apply_config_key(base, detail::trim(t.substr(0, eq)), detail::trim(t.substr(eq + 1)));
    }
    return base;
}

} // namespace gazepred
