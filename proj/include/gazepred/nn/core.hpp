#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "gazepred/rng.hpp"
#include "gazepred/tensor.hpp"

namespace gazepred {
namespace nn {

// Named trainable tensor. Names are unique within a model; the checkpoint
// container and the optimizer both key off them.
template <typename T>
struct Parameter {
    std::string name;
    Tensor<T> value;
    bool trainable = true;

    Parameter() = default;
    Parameter(std::string n, std::vector<std::int64_t> shape)
        : name(std::move(n)), value(std::move(shape)) {}
};

// Uniform in +/- 1/sqrt(fan_in); biases start at zero elsewhere.
template <typename T>
void init_uniform_fanin(Tensor<T>& t, std::int64_t fan_in, Rng& rng) {
    double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (std::int64_t i = 0; i < t.numel(); ++i)
        t[i] = static_cast<T>(rng.uniform(-bound, bound));
}

// Row-wise softmax with max subtraction. Rows sum to 1.
template <typename T>
void softmax_rows_inplace(MatMap<T> m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        auto row = m.row(r);
        T mx = row.maxCoeff();
        row = (row.array() - mx).exp();
        row /= row.sum();
    }
}

// Given y = softmax(x) row-wise and dL/dy, returns dL/dx in place of dy.
template <typename T>
void softmax_backward_rows_inplace(ConstMatMap<T> y, MatMap<T> dy) {
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
        T dot = (dy.row(r).array() * y.row(r).array()).sum();
        dy.row(r) = (dy.row(r).array() - dot) * y.row(r).array();
    }
}

template <typename T>
inline T sigmoid(T x) {
    return T(1) / (T(1) + std::exp(-x));
}

} // namespace nn
} // namespace gazepred
