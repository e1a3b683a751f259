#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "gazepred/nn/core.hpp"

namespace gazepred {
namespace nn {

// ---------------------------------------------------------------- Linear

// Affine map on the last dimension: [*, in] -> [*, out].
template <typename T>
class Linear {
public:
    Linear() = default;

    Linear(const std::string& prefix, std::int64_t in, std::int64_t out, Rng& rng)
        : weight(prefix + ".weight", {out, in}), bias(prefix + ".bias", {out}),
          in_(in), out_(out) {
        init_uniform_fanin(weight.value, in, rng);
    }

    Tensor<T> forward(const Tensor<T>& x, bool training) {
        if (x.rank() < 1 || x.shape().back() != in_)
            throw ShapeError("linear " + weight.name + ": input " + shape_str(x.shape()) +
                             " vs weight " + shape_str(weight.value.shape()));
        const std::int64_t n = x.numel() / in_;
        std::vector<std::int64_t> out_shape = x.shape();
        out_shape.back() = out_;
        Tensor<T> y(out_shape);
        y.mat(n, out_).noalias() = x.mat(n, in_) * weight.value.mat(out_, in_).transpose();
        y.mat(n, out_).rowwise() += bias.value.vec().transpose();
        if (training)
            x_cache_ = x;
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy) {
        if (dy.shape().back() != out_)
            throw ShapeError("linear " + weight.name + ": grad " + shape_str(dy.shape()) +
                             " vs weight " + shape_str(weight.value.shape()));
        const std::int64_t n = dy.numel() / out_;
        auto dym = dy.mat(n, out_);
        weight.value.grad_mat(out_, in_).noalias() += dym.transpose() * x_cache_.mat(n, in_);
        bias.value.grad_vec() += dym.colwise().sum().transpose();
        Tensor<T> dx(x_cache_.shape());
        dx.mat(n, in_).noalias() = dym * weight.value.mat(out_, in_);
        return dx;
    }

    void collect(std::vector<Parameter<T>*>& out) {
        out.push_back(&weight);
        out.push_back(&bias);
    }

    std::int64_t in_features() const { return in_; }
    std::int64_t out_features() const { return out_; }

    Parameter<T> weight;
    Parameter<T> bias;

private:
    std::int64_t in_ = 0, out_ = 0;
    Tensor<T> x_cache_;
};

// ---------------------------------------------------------------- ReLU

template <typename T>
class Relu {
public:
    Tensor<T> forward(const Tensor<T>& x, bool training) {
        Tensor<T> y(x.shape());
        if (training)
            mask_.assign(static_cast<std::size_t>(x.numel()), 0);
        for (std::int64_t i = 0; i < x.numel(); ++i) {
            bool on = x[i] > T(0);
            y[i] = on ? x[i] : T(0);
            if (training)
                mask_[static_cast<std::size_t>(i)] = on;
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy) {
        Tensor<T> dx(dy.shape());
        for (std::int64_t i = 0; i < dy.numel(); ++i)
            dx[i] = mask_[static_cast<std::size_t>(i)] ? dy[i] : T(0);
        return dx;
    }

private:
    std::vector<unsigned char> mask_;
};

// ---------------------------------------------------------------- Dropout

// Inverted dropout: survivors are scaled by 1/(1-p) so eval mode is identity.
template <typename T>
class Dropout {
public:
    explicit Dropout(double rate = 0.0) : rate_(rate) {}

    Tensor<T> forward(const Tensor<T>& x, bool training, Rng& rng) {
        if (!training || rate_ <= 0.0) {
            active_ = false;
            return x;
        }
        active_ = true;
        mask_ = Tensor<T>(x.shape());
        Tensor<T> y(x.shape());
        const T keep = static_cast<T>(1.0 / (1.0 - rate_));
        for (std::int64_t i = 0; i < x.numel(); ++i) {
            T m = rng.uniform() >= rate_ ? keep : T(0);
            mask_[i] = m;
            y[i] = x[i] * m;
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy) {
        if (!active_)
            return dy;
        Tensor<T> dx(dy.shape());
        for (std::int64_t i = 0; i < dy.numel(); ++i)
            dx[i] = dy[i] * mask_[i];
        return dx;
    }

    double rate() const { return rate_; }

private:
    double rate_ = 0.0;
    bool active_ = false;
    Tensor<T> mask_;
};

// ---------------------------------------------------------------- LayerNorm

// Normalizes the last dimension to zero mean / unit variance, then applies
// a learned affine.
template <typename T>
class LayerNorm {
public:
    LayerNorm() = default;

    LayerNorm(const std::string& prefix, std::int64_t dim)
        : gamma(prefix + ".gamma", {dim}), beta(prefix + ".beta", {dim}), dim_(dim) {
        gamma.value.fill(T(1));
    }

    Tensor<T> forward(const Tensor<T>& x, bool training) {
        if (x.shape().back() != dim_)
            throw ShapeError("layer_norm " + gamma.name + ": input " + shape_str(x.shape()));
        const std::int64_t n = x.numel() / dim_;
        Tensor<T> y(x.shape());
        xhat_ = Tensor<T>(x.shape());
        inv_std_.assign(static_cast<std::size_t>(n), T(0));
        auto xm = x.mat(n, dim_);
        auto ym = y.mat(n, dim_);
        auto hm = xhat_.mat(n, dim_);
        for (std::int64_t r = 0; r < n; ++r) {
            T mu = xm.row(r).mean();
            T var = (xm.row(r).array() - mu).square().mean();
            T inv = T(1) / std::sqrt(var + static_cast<T>(kEps));
            inv_std_[static_cast<std::size_t>(r)] = inv;
            hm.row(r) = ((xm.row(r).array() - mu) * inv).matrix();
            ym.row(r) = (hm.row(r).array() * gamma.value.vec().transpose().array() +
                         beta.value.vec().transpose().array()).matrix();
        }
        (void)training;
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy) {
        const std::int64_t n = dy.numel() / dim_;
        Tensor<T> dx(dy.shape());
        auto dym = dy.mat(n, dim_);
        auto hm = xhat_.mat(n, dim_);
        auto dxm = dx.mat(n, dim_);
        gamma.value.ensure_grad();
        beta.value.ensure_grad();
        auto gg = gamma.value.grad_vec();
        auto gb = beta.value.grad_vec();
        const T invd = T(1) / static_cast<T>(dim_);
        for (std::int64_t r = 0; r < n; ++r) {
            gg += (dym.row(r).array() * hm.row(r).array()).matrix().transpose();
            gb += dym.row(r).transpose();
            auto dxhat = (dym.row(r).array() * gamma.value.vec().transpose().array()).eval();
            T sum_dxhat = dxhat.sum();
            T sum_dxhat_h = (dxhat * hm.row(r).array()).sum();
            dxm.row(r) = ((inv_std_[static_cast<std::size_t>(r)] * invd) *
                          (static_cast<T>(dim_) * dxhat - sum_dxhat -
                           hm.row(r).array() * sum_dxhat_h)).matrix();
        }
        return dx;
    }

    void collect(std::vector<Parameter<T>*>& out) {
        out.push_back(&gamma);
        out.push_back(&beta);
    }

    static constexpr double kEps = 1e-5;

    Parameter<T> gamma;
    Parameter<T> beta;

private:
    std::int64_t dim_ = 0;
    Tensor<T> xhat_;
    std::vector<T> inv_std_;
};

// ---------------------------------------------------------------- LSTM

// One LSTM layer over a batch of sequences, gates ordered [i, f, g, o],
// single bias vector per gate block. Forget-gate bias starts at +1.
template <typename T>
class LstmLayer {
public:
    LstmLayer() = default;

    LstmLayer(const std::string& prefix, std::int64_t in, std::int64_t hidden, Rng& rng,
              double forget_bias = 1.0)
        : w_input(prefix + ".w_input", {4 * hidden, in}),
          w_recur(prefix + ".w_recur", {4 * hidden, hidden}),
          bias(prefix + ".bias", {4 * hidden}), in_(in), hidden_(hidden) {
        init_uniform_fanin(w_input.value, in, rng);
        init_uniform_fanin(w_recur.value, hidden, rng);
        for (std::int64_t j = hidden; j < 2 * hidden; ++j)
            bias.value[j] = static_cast<T>(forget_bias);
    }

    // x: [batch, seq, in] -> hidden sequence [batch, seq, hidden]
    Tensor<T> forward(const Tensor<T>& x, bool training) {
        if (x.rank() != 3 || x.dim(2) != in_)
            throw ShapeError("lstm " + w_input.name + ": input " + shape_str(x.shape()) +
                             " vs weight " + shape_str(w_input.value.shape()));
        batch_ = x.dim(0);
        seq_ = x.dim(1);
        const std::int64_t B = batch_, S = seq_, H = hidden_;

        // time-major copy so each step is one contiguous [B, in] block
        x_tm_ = Tensor<T>({S, B, in_});
        for (std::int64_t b = 0; b < B; ++b)
            for (std::int64_t s = 0; s < S; ++s)
                for (std::int64_t i = 0; i < in_; ++i)
                    x_tm_[(s * B + b) * in_ + i] = x[(b * S + s) * in_ + i];

        gates_ = Tensor<T>({S, B, 4 * H});
        c_ = Tensor<T>({S, B, H});
        tanh_c_ = Tensor<T>({S, B, H});
        h_ = Tensor<T>({S, B, H});

        // input contribution for all steps in one product
        gates_.mat(S * B, 4 * H).noalias() =
            x_tm_.mat(S * B, in_) * w_input.value.mat(4 * H, in_).transpose();
        gates_.mat(S * B, 4 * H).rowwise() += bias.value.vec().transpose();

        for (std::int64_t s = 0; s < S; ++s) {
            MatMap<T> g(gates_.data() + s * B * 4 * H, B, 4 * H);
            if (s > 0) {
                ConstMatMap<T> hprev(h_.data() + (s - 1) * B * H, B, H);
                g.noalias() += hprev * w_recur.value.mat(4 * H, H).transpose();
            }
            MatMap<T> ct(c_.data() + s * B * H, B, H);
            MatMap<T> tct(tanh_c_.data() + s * B * H, B, H);
            MatMap<T> ht(h_.data() + s * B * H, B, H);
            auto gi = g.block(0, 0, B, H).array();
            auto gf = g.block(0, H, B, H).array();
            auto gg = g.block(0, 2 * H, B, H).array();
            auto go = g.block(0, 3 * H, B, H).array();
            gi = (T(1) + (-gi).exp()).inverse();
            gf = (T(1) + (-gf).exp()).inverse();
            gg = gg.tanh();
            go = (T(1) + (-go).exp()).inverse();
            if (s > 0) {
                ConstMatMap<T> cprev(c_.data() + (s - 1) * B * H, B, H);
                ct.array() = gf * cprev.array() + gi * gg;
            } else {
                ct.array() = gi * gg;
            }
            tct.array() = ct.array().tanh();
            ht.array() = go * tct.array();
        }
        (void)training;

        Tensor<T> y({B, S, H});
        for (std::int64_t b = 0; b < B; ++b)
            for (std::int64_t s = 0; s < S; ++s)
                for (std::int64_t j = 0; j < H; ++j)
                    y[(b * S + s) * H + j] = h_[(s * B + b) * H + j];
        return y;
    }

    // dy: [batch, seq, hidden] -> dx [batch, seq, in]
    Tensor<T> backward(const Tensor<T>& dy) {
        const std::int64_t B = batch_, S = seq_, H = hidden_;
        dy.require_shape({B, S, H}, "lstm backward");

        Tensor<T> dgates({S, B, 4 * H});
        RowMat<T> dh_carry = RowMat<T>::Zero(B, H);
        RowMat<T> dc_carry = RowMat<T>::Zero(B, H);

        for (std::int64_t s = S - 1; s >= 0; --s) {
            RowMat<T> dh = dh_carry;
            for (std::int64_t b = 0; b < B; ++b)
                for (std::int64_t j = 0; j < H; ++j)
                    dh(b, j) += dy[(b * S + s) * H + j];

            ConstMatMap<T> g(gates_.data() + s * B * 4 * H, B, 4 * H);
            ConstMatMap<T> tct(tanh_c_.data() + s * B * H, B, H);
            auto gi = g.block(0, 0, B, H).array();
            auto gf = g.block(0, H, B, H).array();
            auto gg = g.block(0, 2 * H, B, H).array();
            auto go = g.block(0, 3 * H, B, H).array();

            RowMat<T> dc = dc_carry;
            dc.array() += dh.array() * go * (T(1) - tct.array().square());

            MatMap<T> dg(dgates.data() + s * B * 4 * H, B, 4 * H);
            auto di = dg.block(0, 0, B, H);
            auto df = dg.block(0, H, B, H);
            auto dgc = dg.block(0, 2 * H, B, H);
            auto dout = dg.block(0, 3 * H, B, H);

            di.array() = dc.array() * gg * gi * (T(1) - gi);
            dgc.array() = dc.array() * gi * (T(1) - gg.square());
            dout.array() = dh.array() * tct.array() * go * (T(1) - go);
            if (s > 0) {
                ConstMatMap<T> cprev(c_.data() + (s - 1) * B * H, B, H);
                df.array() = dc.array() * cprev.array() * gf * (T(1) - gf);
                dc_carry.array() = dc.array() * gf;
            } else {
                df.setZero();
                dc_carry.setZero();
            }
            dh_carry.noalias() = dg * w_recur.value.mat(4 * H, H);
        }

        w_input.value.grad_mat(4 * H, in_).noalias() +=
            dgates.mat(S * B, 4 * H).transpose() * x_tm_.mat(S * B, in_);
        bias.value.grad_vec() += dgates.mat(S * B, 4 * H).colwise().sum().transpose();
        if (S > 1) {
            ConstMatMap<T> dg_tail(dgates.data() + B * 4 * H, (S - 1) * B, 4 * H);
            ConstMatMap<T> h_head(h_.data(), (S - 1) * B, H);
            w_recur.value.grad_mat(4 * H, H).noalias() += dg_tail.transpose() * h_head;
        } else {
            w_recur.value.ensure_grad();
        }

        Tensor<T> dx_tm({S, B, in_});
        dx_tm.mat(S * B, in_).noalias() = dgates.mat(S * B, 4 * H) * w_input.value.mat(4 * H, in_);
        Tensor<T> dx({B, S, in_});
        for (std::int64_t b = 0; b < B; ++b)
            for (std::int64_t s = 0; s < S; ++s)
                for (std::int64_t i = 0; i < in_; ++i)
                    dx[(b * S + s) * in_ + i] = dx_tm[(s * B + b) * in_ + i];
        return dx;
    }

    // final hidden / cell state of the last forward call, [batch, hidden]
    Tensor<T> final_hidden() const { return state_slice(h_); }
    Tensor<T> final_cell() const { return state_slice(c_); }

    void collect(std::vector<Parameter<T>*>& out) {
        out.push_back(&w_input);
        out.push_back(&w_recur);
        out.push_back(&bias);
    }

    std::int64_t hidden_size() const { return hidden_; }
    std::int64_t in_features() const { return in_; }

    Parameter<T> w_input; // [4h, in]
    Parameter<T> w_recur; // [4h, h]
    Parameter<T> bias;    // [4h]

private:
    Tensor<T> state_slice(const Tensor<T>& buf) const {
        Tensor<T> out({batch_, hidden_});
        const T* src = buf.data() + (seq_ - 1) * batch_ * hidden_;
        std::copy(src, src + batch_ * hidden_, out.data());
        return out;
    }

    std::int64_t in_ = 0, hidden_ = 0;
    std::int64_t batch_ = 0, seq_ = 0;
    Tensor<T> x_tm_, gates_, c_, tanh_c_, h_;
};

// ---------------------------------------------------------------- Attention

// Scaled dot-product self-attention with n_heads heads over [batch, seq, d].
template <typename T>
class MultiHeadAttention {
public:
    MultiHeadAttention() = default;

    MultiHeadAttention(const std::string& prefix, std::int64_t d_model, int n_heads, Rng& rng)
        : d_model_(d_model), n_heads_(n_heads) {
        if (n_heads <= 0 || d_model % n_heads != 0)
            throw ConfigError("d_model " + std::to_string(d_model) +
                              " not divisible by n_heads " + std::to_string(n_heads));
        d_head_ = d_model / n_heads;
        q_proj = Linear<T>(prefix + ".q", d_model, d_model, rng);
        k_proj = Linear<T>(prefix + ".k", d_model, d_model, rng);
        v_proj = Linear<T>(prefix + ".v", d_model, d_model, rng);
        out_proj = Linear<T>(prefix + ".out", d_model, d_model, rng);
    }

    Tensor<T> forward(const Tensor<T>& x, bool training) {
        if (x.rank() != 3 || x.dim(2) != d_model_)
            throw ShapeError("mha: input " + shape_str(x.shape()) + " vs d_model " +
                             std::to_string(d_model_));
        const std::int64_t B = x.dim(0), S = x.dim(1);
        batch_ = B;
        seq_ = S;
        q_ = q_proj.forward(x, training);
        k_ = k_proj.forward(x, training);
        v_ = v_proj.forward(x, training);
        attn_ = Tensor<T>({B, static_cast<std::int64_t>(n_heads_), S, S});
        Tensor<T> ctx({B, S, d_model_});
        const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(d_head_)));
        for (std::int64_t b = 0; b < B; ++b) {
            ConstMatMap<T> qb(q_.data() + b * S * d_model_, S, d_model_);
            ConstMatMap<T> kb(k_.data() + b * S * d_model_, S, d_model_);
            ConstMatMap<T> vb(v_.data() + b * S * d_model_, S, d_model_);
            MatMap<T> cb(ctx.data() + b * S * d_model_, S, d_model_);
            for (int h = 0; h < n_heads_; ++h) {
                const std::int64_t off = h * d_head_;
                MatMap<T> a(attn_.data() + (b * n_heads_ + h) * S * S, S, S);
                a.noalias() = qb.block(0, off, S, d_head_) *
                              kb.block(0, off, S, d_head_).transpose();
                a *= scale;
                softmax_rows_inplace<T>(a);
                cb.block(0, off, S, d_head_).noalias() = a * vb.block(0, off, S, d_head_);
            }
        }
        return out_proj.forward(ctx, training);
    }

    Tensor<T> backward(const Tensor<T>& dy) {
        const std::int64_t B = batch_, S = seq_;
        Tensor<T> dctx = out_proj.backward(dy);
        Tensor<T> dq({B, S, d_model_}), dk({B, S, d_model_}), dv({B, S, d_model_});
        const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(d_head_)));
        for (std::int64_t b = 0; b < B; ++b) {
            ConstMatMap<T> qb(q_.data() + b * S * d_model_, S, d_model_);
            ConstMatMap<T> kb(k_.data() + b * S * d_model_, S, d_model_);
            ConstMatMap<T> vb(v_.data() + b * S * d_model_, S, d_model_);
            ConstMatMap<T> dcb(dctx.data() + b * S * d_model_, S, d_model_);
            MatMap<T> dqb(dq.data() + b * S * d_model_, S, d_model_);
            MatMap<T> dkb(dk.data() + b * S * d_model_, S, d_model_);
            MatMap<T> dvb(dv.data() + b * S * d_model_, S, d_model_);
            for (int h = 0; h < n_heads_; ++h) {
                const std::int64_t off = h * d_head_;
                ConstMatMap<T> a(attn_.data() + (b * n_heads_ + h) * S * S, S, S);
                RowMat<T> da(S, S);
                da.noalias() = dcb.block(0, off, S, d_head_) *
                               vb.block(0, off, S, d_head_).transpose();
                dvb.block(0, off, S, d_head_).noalias() =
                    a.transpose() * dcb.block(0, off, S, d_head_);
                MatMap<T> dam(da.data(), S, S);
                softmax_backward_rows_inplace<T>(a, dam);
                dqb.block(0, off, S, d_head_).noalias() =
                    scale * (da * kb.block(0, off, S, d_head_));
                dkb.block(0, off, S, d_head_).noalias() =
                    scale * (da.transpose() * qb.block(0, off, S, d_head_));
            }
        }
        Tensor<T> dx = q_proj.backward(dq);
        Tensor<T> dxk = k_proj.backward(dk);
        Tensor<T> dxv = v_proj.backward(dv);
        dx.vec() += dxk.vec();
        dx.vec() += dxv.vec();
        return dx;
    }

    // attention weights of the last forward call: [batch, heads, seq, seq]
    const Tensor<T>& attention() const { return attn_; }

    void collect(std::vector<Parameter<T>*>& out) {
        q_proj.collect(out);
        k_proj.collect(out);
        v_proj.collect(out);
        out_proj.collect(out);
    }

    Linear<T> q_proj, k_proj, v_proj, out_proj;

private:
    std::int64_t d_model_ = 0, d_head_ = 0;
    int n_heads_ = 0;
    std::int64_t batch_ = 0, seq_ = 0;
    Tensor<T> q_, k_, v_, attn_;
};

// Sinusoidal positional table, [seq, d].
template <typename T>
Tensor<T> sinusoidal_positions(std::int64_t seq, std::int64_t d) {
    Tensor<T> pe({seq, d});
    for (std::int64_t t = 0; t < seq; ++t) {
        for (std::int64_t i = 0; i < d; i += 2) {
            double freq = std::pow(10000.0, -static_cast<double>(i) / static_cast<double>(d));
            pe[t * d + i] = static_cast<T>(std::sin(static_cast<double>(t) * freq));
            if (i + 1 < d)
                pe[t * d + i + 1] = static_cast<T>(std::cos(static_cast<double>(t) * freq));
        }
    }
    return pe;
}

// ---------------------------------------------------------------- Additive attention pooling

// Collapses [batch, seq, h] to [batch, h] with learned additive scores.
template <typename T>
class AttentionPool {
public:
    AttentionPool() = default;

    AttentionPool(const std::string& prefix, std::int64_t hidden, std::int64_t attn_dim, Rng& rng)
        : proj(prefix + ".score", hidden, attn_dim, rng), v(prefix + ".v", {attn_dim}),
          hidden_(hidden), attn_dim_(attn_dim) {
        init_uniform_fanin(v.value, attn_dim, rng);
    }

    Tensor<T> forward(const Tensor<T>& x, bool training) {
        if (x.rank() != 3 || x.dim(2) != hidden_)
            throw ShapeError("attention_pool: input " + shape_str(x.shape()));
        const std::int64_t B = x.dim(0), S = x.dim(1);
        batch_ = B;
        seq_ = S;
        x_ = x;
        z_ = proj.forward(x, training);
        for (std::int64_t i = 0; i < z_.numel(); ++i)
            z_[i] = std::tanh(z_[i]);
        weights_ = Tensor<T>({B, S});
        weights_.vec().noalias() = z_.mat(B * S, attn_dim_) * v.value.vec();
        softmax_rows_inplace<T>(weights_.mat(B, S));
        Tensor<T> y({B, hidden_});
        for (std::int64_t b = 0; b < B; ++b) {
            ConstMatMap<T> xb(x.data() + b * S * hidden_, S, hidden_);
            y.mat(B, hidden_).row(b).noalias() =
                weights_.mat(B, S).row(b) * xb;
        }
        (void)training;
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy) {
        const std::int64_t B = batch_, S = seq_;
        dy.require_shape({B, hidden_}, "attention_pool backward");
        Tensor<T> dx({B, S, hidden_});
        Tensor<T> dw({B, S});
        for (std::int64_t b = 0; b < B; ++b) {
            ConstMatMap<T> xb(x_.data() + b * S * hidden_, S, hidden_);
            MatMap<T> dxb(dx.data() + b * S * hidden_, S, hidden_);
            auto dyb = dy.mat(B, hidden_).row(b);
            dw.mat(B, S).row(b).noalias() = (xb * dyb.transpose()).transpose();
            dxb.noalias() = weights_.mat(B, S).row(b).transpose() * dyb;
        }
        ConstMatMap<T> wmap(weights_.data(), B, S);
        MatMap<T> dwmap(dw.data(), B, S);
        softmax_backward_rows_inplace<T>(wmap, dwmap);
        // scores s = z . v
        v.value.ensure_grad();
        Tensor<T> dz({B, S, attn_dim_});
        for (std::int64_t b = 0; b < B; ++b)
            for (std::int64_t s = 0; s < S; ++s) {
                const T ds = dw[b * S + s];
                const T* zrow = z_.data() + (b * S + s) * attn_dim_;
                T* dzrow = dz.data() + (b * S + s) * attn_dim_;
                for (std::int64_t a = 0; a < attn_dim_; ++a) {
                    v.value.grad()[a] += ds * zrow[a];
                    dzrow[a] = ds * v.value[a] * (T(1) - zrow[a] * zrow[a]);
                }
            }
        Tensor<T> dx2 = proj.backward(dz);
        dx.vec() += dx2.vec();
        return dx;
    }

    const Tensor<T>& pool_weights() const { return weights_; }

    void collect(std::vector<Parameter<T>*>& out) {
        proj.collect(out);
        out.push_back(&v);
    }

    Linear<T> proj;
    Parameter<T> v;

private:
    std::int64_t hidden_ = 0, attn_dim_ = 0;
    std::int64_t batch_ = 0, seq_ = 0;
    Tensor<T> x_, z_, weights_;
};

// ---------------------------------------------------------------- Causal conv / TCN

// Dilated causal 1-D convolution over [batch, channels, seq]. Weight layout
// is tap-major [k, c_out, c_in] so each tap is one contiguous GEMM operand.
template <typename T>
class CausalConv1d {
public:
    CausalConv1d() = default;

    CausalConv1d(const std::string& prefix, std::int64_t c_in, std::int64_t c_out, int kernel,
                 int dilation, Rng& rng)
        : weight(prefix + ".weight", {kernel, c_out, c_in}), bias(prefix + ".bias", {c_out}),
          c_in_(c_in), c_out_(c_out), kernel_(kernel), dilation_(dilation) {
        init_uniform_fanin(weight.value, c_in * kernel, rng);
    }

    Tensor<T> forward(const Tensor<T>& x, bool training) {
        if (x.rank() != 3 || x.dim(1) != c_in_)
            throw ShapeError("causal_conv " + weight.name + ": input " + shape_str(x.shape()));
        const std::int64_t B = x.dim(0), S = x.dim(2);
        batch_ = B;
        seq_ = S;
        if (training)
            x_cache_ = x;
        Tensor<T> y({B, c_out_, S});
        for (std::int64_t b = 0; b < B; ++b) {
            ConstMatMap<T> xb(x.data() + b * c_in_ * S, c_in_, S);
            MatMap<T> yb(y.data() + b * c_out_ * S, c_out_, S);
            yb.colwise() = bias.value.vec();
            for (int j = 0; j < kernel_; ++j) {
                const std::int64_t shift = static_cast<std::int64_t>(j) * dilation_;
                if (shift >= S)
                    continue;
                ConstMatMap<T> wj(weight.value.data() + j * c_out_ * c_in_, c_out_, c_in_);
                yb.block(0, shift, c_out_, S - shift).noalias() +=
                    wj * xb.block(0, 0, c_in_, S - shift);
            }
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy) {
        const std::int64_t B = batch_, S = seq_;
        dy.require_shape({B, c_out_, S}, "causal_conv backward");
        weight.value.ensure_grad();
        bias.value.ensure_grad();
        Tensor<T> dx({B, c_in_, S});
        for (std::int64_t b = 0; b < B; ++b) {
            ConstMatMap<T> xb(x_cache_.data() + b * c_in_ * S, c_in_, S);
            ConstMatMap<T> dyb(dy.data() + b * c_out_ * S, c_out_, S);
            MatMap<T> dxb(dx.data() + b * c_in_ * S, c_in_, S);
            bias.value.grad_vec() += dyb.rowwise().sum();
            for (int j = 0; j < kernel_; ++j) {
                const std::int64_t shift = static_cast<std::int64_t>(j) * dilation_;
                if (shift >= S)
                    continue;
                ConstMatMap<T> wj(weight.value.data() + j * c_out_ * c_in_, c_out_, c_in_);
                MatMap<T> dwj(weight.value.grad() + j * c_out_ * c_in_, c_out_, c_in_);
                dxb.block(0, 0, c_in_, S - shift).noalias() +=
                    wj.transpose() * dyb.block(0, shift, c_out_, S - shift);
                dwj.noalias() += dyb.block(0, shift, c_out_, S - shift) *
                                 xb.block(0, 0, c_in_, S - shift).transpose();
            }
        }
        return dx;
    }

    void collect(std::vector<Parameter<T>*>& out) {
        out.push_back(&weight);
        out.push_back(&bias);
    }

    int kernel() const { return kernel_; }
    int dilation() const { return dilation_; }
    std::int64_t in_channels() const { return c_in_; }
    std::int64_t out_channels() const { return c_out_; }

    Parameter<T> weight; // [k, c_out, c_in]
    Parameter<T> bias;   // [c_out]

private:
    std::int64_t c_in_ = 0, c_out_ = 0;
    int kernel_ = 1, dilation_ = 1;
    std::int64_t batch_ = 0, seq_ = 0;
    Tensor<T> x_cache_;
};

// Residual block: relu(conv2(relu(conv1(x))) + shortcut(x)). The shortcut is
// a 1x1 conv when channel counts differ, identity otherwise.
template <typename T>
class TcnBlock {
public:
    TcnBlock() = default;

    TcnBlock(const std::string& prefix, std::int64_t c_in, std::int64_t c_out, int kernel,
             int dilation, Rng& rng)
        : conv1(prefix + ".conv1", c_in, c_out, kernel, dilation, rng),
          conv2(prefix + ".conv2", c_out, c_out, kernel, dilation, rng),
          has_down_(c_in != c_out) {
        if (has_down_)
            down = CausalConv1d<T>(prefix + ".down", c_in, c_out, 1, 1, rng);
    }

    Tensor<T> forward(const Tensor<T>& x, bool training) {
        Tensor<T> h = relu1_.forward(conv1.forward(x, training), training);
        Tensor<T> h2 = conv2.forward(h, training);
        Tensor<T> r = has_down_ ? down.forward(x, training) : x;
        h2.vec() += r.vec();
        return relu_out_.forward(h2, training);
    }

    Tensor<T> backward(const Tensor<T>& dy) {
        Tensor<T> d = relu_out_.backward(dy);
        Tensor<T> dx = conv1.backward(relu1_.backward(conv2.backward(d)));
        if (has_down_) {
            Tensor<T> dr = down.backward(d);
            dx.vec() += dr.vec();
        } else {
            dx.vec() += d.vec();
        }
        return dx;
    }

    void collect(std::vector<Parameter<T>*>& out) {
        conv1.collect(out);
        conv2.collect(out);
        if (has_down_)
            down.collect(out);
    }

    bool has_down() const { return has_down_; }

    CausalConv1d<T> conv1, conv2, down;

private:
    bool has_down_ = false;
    Relu<T> relu1_, relu_out_;
};

// Stack of residual blocks, one per dilation entry.
template <typename T>
class TcnEncoder {
public:
    TcnEncoder() = default;

    TcnEncoder(const std::string& prefix, std::int64_t c_in, std::int64_t channels, int kernel,
               const std::vector<int>& dilations, Rng& rng) {
        std::int64_t c = c_in;
        for (std::size_t i = 0; i < dilations.size(); ++i) {
            blocks.emplace_back(prefix + ".block" + std::to_string(i), c, channels, kernel,
                                dilations[i], rng);
            c = channels;
        }
    }

    Tensor<T> forward(const Tensor<T>& x, bool training) {
        Tensor<T> h = x;
        for (auto& b : blocks)
            h = b.forward(h, training);
        return h;
    }

    Tensor<T> backward(const Tensor<T>& dy) {
        Tensor<T> d = dy;
        for (auto it = blocks.rbegin(); it != blocks.rend(); ++it)
            d = it->backward(d);
        return d;
    }

    void collect(std::vector<Parameter<T>*>& out) {
        for (auto& b : blocks)
            b.collect(out);
    }

    std::vector<TcnBlock<T>> blocks;
};

} // namespace nn
} // namespace gazepred
