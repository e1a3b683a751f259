#pragma once
// Short-horizon gaze forecasters.
//
// Three architectures share one interface: input is a batch of feature
// windows [batch, channels, window_len], output is a batch of predicted
// displacement trajectories [batch, pi_samples, 2] in degrees relative to
// the anchor sample.
//
//   lstm  stacked LSTM layers, head reads the final hidden state
//   tf    transformer encoder (pre-norm) over the window, head reads the
//         flattened encoded sequence
//   clpr  causal TCN front end, LSTM, additive attention pooling, and two
//         heads: displacement regression plus per-step event classification

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "gazepred/error.hpp"
#include "gazepred/nn/layers.hpp"
#include "gazepred/rng.hpp"
#include "gazepred/signal.hpp"
#include "gazepred/tensor.hpp"

namespace gazepred {

enum class Arch { LSTM = 0, TF = 1, CLPR = 2 };

inline const char* arch_name(Arch a) {
    switch (a) {
    case Arch::LSTM:
        return "lstm";
    case Arch::TF:
        return "tf";
    case Arch::CLPR:
        return "clpr";
    }
    return "?";
}

inline Arch parse_arch(const std::string& s) {
    if (s == "lstm")
        return Arch::LSTM;
    if (s == "tf")
        return Arch::TF;
    if (s == "clpr")
        return Arch::CLPR;
    throw ConfigError("unknown architecture '" + s + "' (expected lstm, tf or clpr)");
}

struct ModelConfig {
    Arch arch = Arch::LSTM;
    FeatureSet feature_set = FeatureSet::VEL_HEADING_4;
    int window_len = 12;
    int pi_samples = 4;
    int hidden_size = 128; // LSTM width (lstm, clpr)
    int n_layers = 3;      // stacked LSTM layers or encoder layers
    int d_model = 64;      // transformer embedding width
    int n_heads = 4;
    int ffn_dim = 128;
    int tcn_channels = 32;
    int tcn_kernel = 3;
    std::vector<int> tcn_dilations = {1, 2, 4};
    double dropout = 0.2;
    int n_classes = 4;
    double lambda_cls = 1.0;      // classification loss weight (clpr)
    bool labels_as_input = false; // clpr: append the event-class channel to the input

    int in_channels() const { return feature_channels(feature_set) + (labels_as_input ? 1 : 0); }

    void validate() const {
        if (window_len < 1)
            throw ConfigError("window_len must be >= 1, got " + std::to_string(window_len));
        if (pi_samples < 1)
            throw ConfigError("pi_samples must be >= 1, got " + std::to_string(pi_samples));
        if (hidden_size < 1 || n_layers < 1)
            throw ConfigError("hidden_size and n_layers must be >= 1");
        if (dropout < 0.0 || dropout >= 1.0)
            throw ConfigError("dropout must be in [0, 1), got " + std::to_string(dropout));
        if (arch == Arch::TF) {
            if (d_model < 1 || ffn_dim < 1)
                throw ConfigError("d_model and ffn_dim must be >= 1");
            if (n_heads < 1 || d_model % n_heads != 0)
                throw ConfigError("d_model " + std::to_string(d_model) +
                                  " not divisible by n_heads " + std::to_string(n_heads));
        }
        if (arch == Arch::CLPR) {
            if (tcn_channels < 1 || tcn_kernel < 1)
                throw ConfigError("tcn_channels and tcn_kernel must be >= 1");
            if (tcn_dilations.empty())
                throw ConfigError("tcn_dilations must not be empty");
            for (int d : tcn_dilations)
                if (d < 1)
                    throw ConfigError("tcn dilation must be >= 1, got " + std::to_string(d));
            if (n_classes < 2)
                throw ConfigError("n_classes must be >= 2, got " + std::to_string(n_classes));
            if (lambda_cls < 0.0)
                throw ConfigError("lambda_cls must be >= 0");
        }
        if (labels_as_input && arch != Arch::CLPR)
            throw ConfigError("labels_as_input is only supported by the clpr architecture");
    }
};

inline ModelConfig default_config(Arch arch) {
    ModelConfig cfg;
    cfg.arch = arch;
    switch (arch) {
    case Arch::LSTM:
        cfg.window_len = 12;
        cfg.feature_set = FeatureSet::VEL_HEADING_4;
        cfg.n_layers = 3;
        break;
    case Arch::TF:
        cfg.window_len = 18;
        cfg.feature_set = FeatureSet::VEL_HEADING_3;
        cfg.n_layers = 2;
        break;
    case Arch::CLPR:
        cfg.window_len = 16;
        cfg.feature_set = FeatureSet::VEL_HEADING_3;
        break;
    }
    return cfg;
}

namespace detail {

// [batch, channels, len] -> [batch, len, channels]
template <typename T>
Tensor<T> channels_last(const Tensor<T>& x) {
    const std::int64_t b = x.dim(0), c = x.dim(1), w = x.dim(2);
    Tensor<T> y({b, w, c});
    for (std::int64_t i = 0; i < b; ++i)
        for (std::int64_t j = 0; j < c; ++j)
            for (std::int64_t k = 0; k < w; ++k)
                y[(i * w + k) * c + j] = x[(i * c + j) * w + k];
    return y;
}

// [batch, len, channels] -> [batch, channels, len]
template <typename T>
Tensor<T> channels_first(const Tensor<T>& x) {
    const std::int64_t b = x.dim(0), w = x.dim(1), c = x.dim(2);
    Tensor<T> y({b, c, w});
    for (std::int64_t i = 0; i < b; ++i)
        for (std::int64_t k = 0; k < w; ++k)
            for (std::int64_t j = 0; j < c; ++j)
                y[(i * c + j) * w + k] = x[(i * w + k) * c + j];
    return y;
}

} // namespace detail

template <typename T>
class Forecaster {
public:
    Forecaster(const ModelConfig& cfg, std::uint64_t seed)
        : cfg_(cfg), dropout_rng_(mix_seed(seed, 77)) {
        cfg_.validate();
    }
    virtual ~Forecaster() = default;

    Forecaster(const Forecaster&) = delete;
    Forecaster& operator=(const Forecaster&) = delete;

    // x: [batch, in_channels, window_len] -> deltas [batch, pi_samples, 2]
    Tensor<T> forward(const Tensor<T>& x, bool training) {
        if (x.rank() != 3 || x.dim(1) != cfg_.in_channels() || x.dim(2) != cfg_.window_len)
            throw ShapeError(std::string(arch_name(cfg_.arch)) + " forecaster: input " +
                             shape_str(x.shape()) + ", expected [batch, " +
                             std::to_string(cfg_.in_channels()) + ", " +
                             std::to_string(cfg_.window_len) + "]");
        ++forward_calls_;
        return run_forward(x, training);
    }

    // d_deltas: [batch, pi_samples, 2]; d_class_logits only for models with a
    // classification head.
    virtual void backward(const Tensor<T>& d_deltas, const Tensor<T>* d_class_logits = nullptr) = 0;

    virtual void collect(std::vector<nn::Parameter<T>*>& out) = 0;

    std::vector<nn::Parameter<T>*> parameters() {
        std::vector<nn::Parameter<T>*> out;
        collect(out);
        return out;
    }

    virtual bool has_class_logits() const { return false; }
    // [batch, pi_samples, n_classes] from the most recent forward pass
    virtual const Tensor<T>& class_logits() const {
        throw ConfigError(std::string(arch_name(cfg_.arch)) +
                          " forecaster has no classification head");
    }

    const ModelConfig& config() const { return cfg_; }
    std::int64_t forward_count() const { return forward_calls_; }

protected:
    virtual Tensor<T> run_forward(const Tensor<T>& x, bool training) = 0;

    ModelConfig cfg_;
    Rng dropout_rng_;
    std::int64_t forward_calls_ = 0;
};

// ---------------------------------------------------------------- lstm

template <typename T>
class LstmForecaster : public Forecaster<T> {
public:
    LstmForecaster(const ModelConfig& cfg, std::uint64_t seed) : Forecaster<T>(cfg, seed) {
        if (cfg.arch != Arch::LSTM)
            throw ConfigError("LstmForecaster built with arch " + std::string(arch_name(cfg.arch)));
        Rng rng(mix_seed(seed, 11));
        std::int64_t in = cfg.in_channels();
        for (int l = 0; l < cfg.n_layers; ++l) {
            layers_.emplace_back("lstm" + std::to_string(l), in, cfg.hidden_size, rng);
            in = cfg.hidden_size;
        }
        drops_.assign(static_cast<std::size_t>(cfg.n_layers - 1), nn::Dropout<T>(cfg.dropout));
        head_drop_ = nn::Dropout<T>(cfg.dropout);
        head_ = nn::Linear<T>("head", cfg.hidden_size, 2LL * cfg.pi_samples, rng);
    }

    void backward(const Tensor<T>& d_deltas, const Tensor<T>* d_class_logits = nullptr) override {
        if (d_class_logits)
            throw ConfigError("lstm forecaster has no classification head");
        const ModelConfig& cfg = this->cfg_;
        Tensor<T> dd = d_deltas;
        dd.reshape({batch_, 2LL * cfg.pi_samples});
        Tensor<T> dlast = head_drop_.backward(head_.backward(dd));
        // only the final hidden state feeds the head
        Tensor<T> dy({batch_, cfg.window_len, cfg.hidden_size});
        for (std::int64_t b = 0; b < batch_; ++b)
            for (std::int64_t j = 0; j < cfg.hidden_size; ++j)
                dy[(b * cfg.window_len + cfg.window_len - 1) * cfg.hidden_size + j] =
                    dlast[b * cfg.hidden_size + j];
        for (int l = cfg.n_layers - 1; l >= 0; --l) {
            dy = layers_[static_cast<std::size_t>(l)].backward(dy);
            if (l > 0)
                dy = drops_[static_cast<std::size_t>(l - 1)].backward(dy);
        }
    }

    void collect(std::vector<nn::Parameter<T>*>& out) override {
        for (auto& l : layers_)
            l.collect(out);
        head_.collect(out);
    }

protected:
    Tensor<T> run_forward(const Tensor<T>& x, bool training) override {
        batch_ = x.dim(0);
        Tensor<T> h = detail::channels_last(x);
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            h = layers_[l].forward(h, training);
            if (l + 1 < layers_.size())
                h = drops_[l].forward(h, training, this->dropout_rng_);
        }
        Tensor<T> last = layers_.back().final_hidden(); // [batch, hidden]
        last = head_drop_.forward(last, training, this->dropout_rng_);
        Tensor<T> out = head_.forward(last, training);
        out.reshape({batch_, this->cfg_.pi_samples, 2});
        return out;
    }

private:
    std::vector<nn::LstmLayer<T>> layers_;
    std::vector<nn::Dropout<T>> drops_;
    nn::Dropout<T> head_drop_;
    nn::Linear<T> head_;
    std::int64_t batch_ = 0;
};

// ---------------------------------------------------------------- tf

template <typename T>
class TfForecaster : public Forecaster<T> {
public:
    // cleared by tests that probe order sensitivity
    bool use_positions = true;

    TfForecaster(const ModelConfig& cfg, std::uint64_t seed) : Forecaster<T>(cfg, seed) {
        if (cfg.arch != Arch::TF)
            throw ConfigError("TfForecaster built with arch " + std::string(arch_name(cfg.arch)));
        Rng rng(mix_seed(seed, 22));
        embed_ = nn::Linear<T>("embed", cfg.in_channels(), cfg.d_model, rng);
        pe_ = nn::sinusoidal_positions<T>(cfg.window_len, cfg.d_model);
        layers_.resize(static_cast<std::size_t>(cfg.n_layers));
        for (int l = 0; l < cfg.n_layers; ++l) {
            const std::string p = "enc" + std::to_string(l);
            EncoderLayer& e = layers_[static_cast<std::size_t>(l)];
            e.ln1 = nn::LayerNorm<T>(p + ".ln1", cfg.d_model);
            e.attn = nn::MultiHeadAttention<T>(p + ".attn", cfg.d_model, cfg.n_heads, rng);
            e.ln2 = nn::LayerNorm<T>(p + ".ln2", cfg.d_model);
            e.ffn1 = nn::Linear<T>(p + ".ffn1", cfg.d_model, cfg.ffn_dim, rng);
            e.ffn2 = nn::Linear<T>(p + ".ffn2", cfg.ffn_dim, cfg.d_model, rng);
        }
        final_ln_ = nn::LayerNorm<T>("final_norm", cfg.d_model);
        head_drop_ = nn::Dropout<T>(cfg.dropout);
        head_ = nn::Linear<T>("head", static_cast<std::int64_t>(cfg.window_len) * cfg.d_model,
                              2LL * cfg.pi_samples, rng);
    }

    void backward(const Tensor<T>& d_deltas, const Tensor<T>* d_class_logits = nullptr) override {
        if (d_class_logits)
            throw ConfigError("tf forecaster has no classification head");
        const ModelConfig& cfg = this->cfg_;
        Tensor<T> dd = d_deltas;
        dd.reshape({batch_, 2LL * cfg.pi_samples});
        Tensor<T> dh = head_drop_.backward(head_.backward(dd));
        dh.reshape({batch_, cfg.window_len, cfg.d_model});
        dh = final_ln_.backward(dh);
        for (std::size_t l = layers_.size(); l-- > 0;) {
            EncoderLayer& e = layers_[l];
            Tensor<T> df = e.ffn1.backward(e.act.backward(e.ffn2.backward(dh)));
            Tensor<T> dmid = e.ln2.backward(df);
            dmid.vec() += dh.vec();
            Tensor<T> da = e.attn.backward(dmid);
            dh = e.ln1.backward(da);
            dh.vec() += dmid.vec();
        }
        embed_.backward(dh);
    }

    void collect(std::vector<nn::Parameter<T>*>& out) override {
        embed_.collect(out);
        for (auto& e : layers_) {
            e.ln1.collect(out);
            e.attn.collect(out);
            e.ln2.collect(out);
            e.ffn1.collect(out);
            e.ffn2.collect(out);
        }
        final_ln_.collect(out);
        head_.collect(out);
    }

    const Tensor<T>& attention(int layer) const {
        return layers_.at(static_cast<std::size_t>(layer)).attn.attention();
    }

protected:
    Tensor<T> run_forward(const Tensor<T>& x, bool training) override {
        const ModelConfig& cfg = this->cfg_;
        batch_ = x.dim(0);
        Tensor<T> h = embed_.forward(detail::channels_last(x), training); // [b, w, d]
        if (use_positions) {
            const std::int64_t n = static_cast<std::int64_t>(cfg.window_len) * cfg.d_model;
            for (std::int64_t b = 0; b < batch_; ++b)
                for (std::int64_t i = 0; i < n; ++i)
                    h[b * n + i] += pe_[i];
        }
        for (auto& e : layers_) {
            Tensor<T> a = e.attn.forward(e.ln1.forward(h, training), training);
            h.vec() += a.vec();
            Tensor<T> f =
                e.ffn2.forward(e.act.forward(e.ffn1.forward(e.ln2.forward(h, training), training),
                                             training),
                               training);
            h.vec() += f.vec();
        }
        h = final_ln_.forward(h, training);
        h.reshape({batch_, static_cast<std::int64_t>(cfg.window_len) * cfg.d_model});
        h = head_drop_.forward(h, training, this->dropout_rng_);
        Tensor<T> out = head_.forward(h, training);
        out.reshape({batch_, cfg.pi_samples, 2});
        return out;
    }

private:
    struct EncoderLayer {
        nn::LayerNorm<T> ln1;
        nn::MultiHeadAttention<T> attn;
        nn::LayerNorm<T> ln2;
        nn::Linear<T> ffn1;
        nn::Relu<T> act;
        nn::Linear<T> ffn2;
    };

    nn::Linear<T> embed_;
    Tensor<T> pe_;
    std::vector<EncoderLayer> layers_;
    nn::LayerNorm<T> final_ln_;
    nn::Dropout<T> head_drop_;
    nn::Linear<T> head_;
    std::int64_t batch_ = 0;
};

// ---------------------------------------------------------------- clpr

template <typename T>
class ClprForecaster : public Forecaster<T> {
public:
    ClprForecaster(const ModelConfig& cfg, std::uint64_t seed) : Forecaster<T>(cfg, seed) {
        if (cfg.arch != Arch::CLPR)
            throw ConfigError("ClprForecaster built with arch " + std::string(arch_name(cfg.arch)));
        Rng rng(mix_seed(seed, 33));
        tcn_ = nn::TcnEncoder<T>("tcn", cfg.in_channels(), cfg.tcn_channels, cfg.tcn_kernel,
                                 cfg.tcn_dilations, rng);
        lstm_ = nn::LstmLayer<T>("lstm", cfg.tcn_channels, cfg.hidden_size, rng);
        pool_ = nn::AttentionPool<T>("pool", cfg.hidden_size, cfg.hidden_size / 2, rng);
        head_drop_ = nn::Dropout<T>(cfg.dropout);
        reg_head_ = nn::Linear<T>("reg_head", cfg.hidden_size, 2LL * cfg.pi_samples, rng);
        cls_head_ = nn::Linear<T>("cls_head", cfg.hidden_size,
                                  static_cast<std::int64_t>(cfg.n_classes) * cfg.pi_samples, rng);
    }

    void backward(const Tensor<T>& d_deltas, const Tensor<T>* d_class_logits = nullptr) override {
        const ModelConfig& cfg = this->cfg_;
        Tensor<T> dd = d_deltas;
        dd.reshape({batch_, 2LL * cfg.pi_samples});
        Tensor<T> dp = reg_head_.backward(dd);
        if (d_class_logits) {
            Tensor<T> dl = *d_class_logits;
            dl.reshape({batch_, static_cast<std::int64_t>(cfg.n_classes) * cfg.pi_samples});
            dp.vec() += cls_head_.backward(dl).vec();
        }
        dp = head_drop_.backward(dp);
        Tensor<T> dseq = lstm_.backward(pool_.backward(dp));
        tcn_.backward(detail::channels_first(dseq));
    }

    void collect(std::vector<nn::Parameter<T>*>& out) override {
        tcn_.collect(out);
        lstm_.collect(out);
        pool_.collect(out);
        reg_head_.collect(out);
        cls_head_.collect(out);
    }

    bool has_class_logits() const override { return true; }
    const Tensor<T>& class_logits() const override { return logits_; }

    const Tensor<T>& pool_weights() const { return pool_.pool_weights(); }

protected:
    Tensor<T> run_forward(const Tensor<T>& x, bool training) override {
        const ModelConfig& cfg = this->cfg_;
        batch_ = x.dim(0);
        Tensor<T> f = tcn_.forward(x, training);               // [b, ch, w]
        Tensor<T> seq = lstm_.forward(detail::channels_last(f), training);
        Tensor<T> pooled = pool_.forward(seq, training);       // [b, hidden]
        pooled = head_drop_.forward(pooled, training, this->dropout_rng_);
        Tensor<T> out = reg_head_.forward(pooled, training);
        logits_ = cls_head_.forward(pooled, training);
        logits_.reshape({batch_, cfg.pi_samples, cfg.n_classes});
        out.reshape({batch_, cfg.pi_samples, 2});
        return out;
    }

private:
    nn::TcnEncoder<T> tcn_;
    nn::LstmLayer<T> lstm_;
    nn::AttentionPool<T> pool_;
    nn::Dropout<T> head_drop_;
    nn::Linear<T> reg_head_;
    nn::Linear<T> cls_head_;
    Tensor<T> logits_;
    std::int64_t batch_ = 0;
};

template <typename T>
std::unique_ptr<Forecaster<T>> build_forecaster(const ModelConfig& cfg, std::uint64_t seed) {
    switch (cfg.arch) {
    case Arch::LSTM:
        return std::make_unique<LstmForecaster<T>>(cfg, seed);
    case Arch::TF:
        return std::make_unique<TfForecaster<T>>(cfg, seed);
    case Arch::CLPR:
        return std::make_unique<ClprForecaster<T>>(cfg, seed);
    }
    throw ConfigError("unknown architecture");
}

template <typename T>
std::int64_t count_params(Forecaster<T>& model) {
    std::int64_t n = 0;
    for (const auto* p : model.parameters())
        if (p->trainable)
            n += p->value.numel();
    return n;
}

// Multiply-accumulate count for one forward pass at batch size 1.
// Counting rules: a linear layer costs in*out per output position, an LSTM
// cell 4h*(in+h) per timestep, one attention layer 2*seq^2*d + 4*seq*d^2
// (score/value products plus the four projections) with the feed-forward
// block adding 2*seq*d*ffn, and a convolution kernel*c_in*c_out per output
// position. Elementwise work (activations, norms, residuals, softmax, bias
// adds) is not counted.
inline std::int64_t count_macs(const ModelConfig& cfg) {
    cfg.validate();
    const std::int64_t seq = cfg.window_len;
    const std::int64_t c = cfg.in_channels();
    const std::int64_t h = cfg.hidden_size;
    const std::int64_t out_dim = 2LL * cfg.pi_samples;
    switch (cfg.arch) {
    case Arch::LSTM: {
        std::int64_t macs = 0;
        std::int64_t in = c;
        for (int l = 0; l < cfg.n_layers; ++l) {
            macs += seq * 4 * h * (in + h);
            in = h;
        }
        return macs + h * out_dim;
    }
    case Arch::TF: {
        const std::int64_t d = cfg.d_model;
        std::int64_t macs = seq * c * d;
        macs += cfg.n_layers * (2 * seq * seq * d + 4 * seq * d * d + 2 * seq * d * cfg.ffn_dim);
        return macs + seq * d * out_dim;
    }
    case Arch::CLPR: {
        std::int64_t macs = 0;
        std::int64_t cin = c;
        for (std::size_t i = 0; i < cfg.tcn_dilations.size(); ++i) {
            macs += seq * cfg.tcn_kernel * cin * cfg.tcn_channels;
            macs += seq * cfg.tcn_kernel * cfg.tcn_channels * cfg.tcn_channels;
            if (cin != cfg.tcn_channels)
                macs += seq * cin * cfg.tcn_channels; // 1x1 shortcut
            cin = cfg.tcn_channels;
        }
        macs += seq * 4 * h * (cfg.tcn_channels + h);
        const std::int64_t att = h / 2;
        macs += seq * (h * att + att + h); // pooling scores and weighted sum
        macs += h * out_dim;
        macs += h * static_cast<std::int64_t>(cfg.n_classes) * cfg.pi_samples;
        return macs;
    }
    }
    throw ConfigError("unknown architecture");
}

struct PredictionOutput {
    Tensor<float> deltas;       // [pi_samples, 2]
    Tensor<float> class_logits; // [pi_samples, n_classes] when present
    bool has_class_logits = false;
};

// Writes one window into row b of a model input batch.
template <typename T>
void fill_input(Tensor<T>& x, std::int64_t b, const WindowSample& w, const ModelConfig& cfg) {
    const std::int64_t nf = feature_channels(cfg.feature_set);
    const std::int64_t wl = cfg.window_len;
    w.features.require_shape({nf, wl}, "window features");
    const std::int64_t nc = cfg.in_channels();
    for (std::int64_t cidx = 0; cidx < nf; ++cidx)
        for (std::int64_t j = 0; j < wl; ++j)
            x[(b * nc + cidx) * wl + j] = static_cast<T>(w.features[cidx * wl + j]);
    if (cfg.labels_as_input) {
        if (static_cast<std::int64_t>(w.input_labels.size()) != wl)
            throw ShapeError("window has " + std::to_string(w.input_labels.size()) +
                             " input labels, expected " + std::to_string(wl));
        for (std::int64_t j = 0; j < wl; ++j)
            x[(b * nc + nf) * wl + j] = static_cast<T>(w.input_labels[static_cast<std::size_t>(j)]);
    }
}

template <typename T>
PredictionOutput predict(Forecaster<T>& model, const WindowSample& window) {
    const ModelConfig& cfg = model.config();
    Tensor<T> x({1, cfg.in_channels(), cfg.window_len});
    fill_input(x, 0, window, cfg);
    Tensor<T> y = model.forward(x, false);
    PredictionOutput out;
    out.deltas = Tensor<float>({cfg.pi_samples, 2});
    for (std::int64_t i = 0; i < y.numel(); ++i)
        out.deltas[i] = static_cast<float>(y[i]);
    if (model.has_class_logits()) {
        const Tensor<T>& lg = model.class_logits();
        out.class_logits = Tensor<float>({cfg.pi_samples, cfg.n_classes});
        for (std::int64_t i = 0; i < lg.numel(); ++i)
            out.class_logits[i] = static_cast<float>(lg[i]);
        out.has_class_logits = true;
    }
    return out;
}

} // namespace gazepred
