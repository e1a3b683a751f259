#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "gazepred/error.hpp"
#include "gazepred/tensor.hpp"

namespace gazepred {
namespace nn {

// Added squared under the root so the gradient stays finite at exact matches.
constexpr double kEuclidStabilizer = 1e-12;

// pred, target: [batch, steps, 2]. Returns the mean over batch*steps of
// sqrt(dx^2 + dy^2 + eps^2). dpred, when given, receives dLoss/dpred.
template <typename T>
double euclidean_loss(const Tensor<T>& pred, const Tensor<T>& target,
                      Tensor<T>* dpred = nullptr) {
    if (pred.shape() != target.shape())
        throw ShapeError("euclidean_loss: pred " + shape_str(pred.shape()) + " vs target " +
                         shape_str(target.shape()));
    if (pred.rank() < 1 || pred.shape().back() != 2)
        throw ShapeError("euclidean_loss: last dim must be 2, got " + shape_str(pred.shape()));
    const std::int64_t n = pred.numel() / 2;
    if (dpred)
        *dpred = Tensor<T>(pred.shape());
    double total = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
        const double dx = static_cast<double>(pred[2 * i]) - static_cast<double>(target[2 * i]);
        const double dy =
            static_cast<double>(pred[2 * i + 1]) - static_cast<double>(target[2 * i + 1]);
        const double e = std::sqrt(dx * dx + dy * dy + kEuclidStabilizer * kEuclidStabilizer);
        total += e;
        if (dpred) {
            const double scale = 1.0 / (e * static_cast<double>(n));
            (*dpred)[2 * i] = static_cast<T>(dx * scale);
            (*dpred)[2 * i + 1] = static_cast<T>(dy * scale);
        }
    }
    return total / static_cast<double>(n);
}

// logits: [batch, steps, n_classes]; labels: flat batch*steps class ids.
// Steps labeled `ignore_label` are masked out of the mean; if every step is
// masked the loss is 0 with zero gradients. dlogits, when given, receives
// dLoss/dlogits.
template <typename T>
double cross_entropy_loss(const Tensor<T>& logits, const std::vector<int>& labels,
                          Tensor<T>* dlogits = nullptr, int ignore_label = 3) {
    if (logits.rank() < 2)
        throw ShapeError("cross_entropy_loss: logits " + shape_str(logits.shape()));
    const std::int64_t c = logits.shape().back();
    const std::int64_t n = logits.numel() / c;
    if (static_cast<std::int64_t>(labels.size()) != n)
        throw ShapeError("cross_entropy_loss: " + std::to_string(labels.size()) +
                         " labels for " + std::to_string(n) + " logit rows");
    if (dlogits)
        *dlogits = Tensor<T>(logits.shape());
    std::int64_t kept = 0;
    for (int l : labels) {
        if (l == ignore_label)
            continue;
        if (l < 0 || l >= c)
            throw DataError("class label " + std::to_string(l) + " out of range [0, " +
                            std::to_string(c) + ")");
        ++kept;
    }
    if (kept == 0)
        return 0.0;
    double total = 0.0;
    for (std::int64_t r = 0; r < n; ++r) {
        const int l = labels[static_cast<std::size_t>(r)];
        if (l == ignore_label)
            continue;
        const T* row = logits.data() + r * c;
        double mx = static_cast<double>(row[0]);
        for (std::int64_t j = 1; j < c; ++j)
            mx = std::max(mx, static_cast<double>(row[j]));
        double z = 0.0;
        for (std::int64_t j = 0; j < c; ++j)
            z += std::exp(static_cast<double>(row[j]) - mx);
        total += std::log(z) + mx - static_cast<double>(row[l]);
        if (dlogits) {
            for (std::int64_t j = 0; j < c; ++j) {
                const double p = std::exp(static_cast<double>(row[j]) - mx) / z;
                (*dlogits)[r * c + j] =
                    static_cast<T>((p - (j == l ? 1.0 : 0.0)) / static_cast<double>(kept));
            }
        }
    }
    return total / static_cast<double>(kept);
}

} // namespace nn
} // namespace gazepred
