#pragma once

#include <cmath>
#include <vector>

#include "gazepred/error.hpp"
#include "gazepred/nn/core.hpp"

namespace gazepred {
namespace nn {

template <typename T>
struct AdamState {
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::int64_t step_count = 0;
    std::vector<Tensor<T>> moment1;
    std::vector<Tensor<T>> moment2;

    void init(const std::vector<Parameter<T>*>& params) {
        moment1.clear();
        moment2.clear();
        for (const auto* p : params) {
            moment1.emplace_back(p->value.shape());
            moment2.emplace_back(p->value.shape());
        }
        step_count = 0;
    }
};

// One bias-corrected Adam update. Parameters without a gradient buffer are
// treated as having zero gradient.
template <typename T>
void adam_step(std::vector<Parameter<T>*>& params, AdamState<T>& st) {
    if (st.moment1.size() != params.size())
        throw ConfigError("adam state holds " + std::to_string(st.moment1.size()) +
                          " buffers for " + std::to_string(params.size()) + " parameters");
    ++st.step_count;
    const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step_count));
    const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step_count));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Parameter<T>& p = *params[i];
        if (!p.trainable)
            continue;
        st.moment1[i].require_shape(p.value.shape(), "adam moment");
        T* w = p.value.data();
        const T* g = p.value.has_grad() ? p.value.grad() : nullptr;
        T* m = st.moment1[i].data();
        T* v = st.moment2[i].data();
        for (std::int64_t k = 0; k < p.value.numel(); ++k) {
            const double gk = g ? static_cast<double>(g[k]) : 0.0;
            const double mk = st.beta1 * static_cast<double>(m[k]) + (1.0 - st.beta1) * gk;
            const double vk = st.beta2 * static_cast<double>(v[k]) + (1.0 - st.beta2) * gk * gk;
            m[k] = static_cast<T>(mk);
            v[k] = static_cast<T>(vk);
            const double mhat = mk / bc1;
            const double vhat = vk / bc2;
            w[k] = static_cast<T>(static_cast<double>(w[k]) -
                                  st.lr * mhat / (std::sqrt(vhat) + st.eps));
        }
    }
}

} // namespace nn
} // namespace gazepred
