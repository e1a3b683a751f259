#pragma once

#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gazepred/error.hpp"

namespace gazepred {

// Buffers are packet-aligned so Eigen's vectorized kernels split scalar and
// SIMD work identically on every run; reduction order, and therefore the
// bit pattern of every result, must not depend on where the heap put us.
template <typename T>
using AlignedVec = std::vector<T, Eigen::aligned_allocator<T>>;

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;
template <typename T>
using VecMap = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>>;
template <typename T>
using ConstVecMap = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>>;

inline std::string shape_str(const std::vector<std::int64_t>& s) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < s.size(); ++i)
        os << (i ? ", " : "") << s[i];
    os << ")";
    return os.str();
}

// Dense row-major tensor with an optional same-shape gradient buffer.
template <typename T>
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<std::int64_t> shape) : shape_(std::move(shape)) {
        data_.assign(static_cast<std::size_t>(numel_of(shape_)), T(0));
    }

    Tensor(std::initializer_list<std::int64_t> shape)
        : Tensor(std::vector<std::int64_t>(shape)) {}

    static std::int64_t numel_of(const std::vector<std::int64_t>& shape) {
        std::int64_t n = 1;
        for (auto d : shape) {
            if (d < 0)
                throw ShapeError("negative dimension in shape " + shape_str(shape));
            n *= d;
        }
        return n;
    }

    bool empty() const { return data_.empty(); }
    std::int64_t numel() const { return static_cast<std::int64_t>(data_.size()); }
    int rank() const { return static_cast<int>(shape_.size()); }
    const std::vector<std::int64_t>& shape() const { return shape_; }
    std::int64_t dim(int i) const { return shape_.at(static_cast<std::size_t>(i)); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    AlignedVec<T>& values() { return data_; }
    const AlignedVec<T>& values() const { return data_; }

    T& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
    const T& operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

    T& at(std::initializer_list<std::int64_t> idx) { return data_[flat_index(idx)]; }
    const T& at(std::initializer_list<std::int64_t> idx) const { return data_[flat_index(idx)]; }

    bool has_grad() const { return !grad_.empty(); }

    void ensure_grad() {
        if (grad_.size() != data_.size())
            grad_.assign(data_.size(), T(0));
    }

    void zero_grad() {
        if (!grad_.empty())
            std::fill(grad_.begin(), grad_.end(), T(0));
    }

    void drop_grad() { grad_.clear(); }

    T* grad() { return grad_.data(); }
    const T* grad() const { return grad_.data(); }
    AlignedVec<T>& grad_values() { return grad_; }
    const AlignedVec<T>& grad_values() const { return grad_; }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

    // Same data, new shape; element count must match.
    void reshape(std::vector<std::int64_t> new_shape) {
        if (numel_of(new_shape) != numel())
            throw ShapeError("cannot reshape tensor " + shape_str(shape_) + " to " +
                             shape_str(new_shape));
        shape_ = std::move(new_shape);
    }

    void require_shape(const std::vector<std::int64_t>& expected, const char* what) const {
        if (shape_ != expected)
            throw ShapeError(std::string(what) + ": expected shape " + shape_str(expected) +
                             ", got " + shape_str(shape_));
    }

    // 2-D view over the contiguous storage; rows*cols must cover it exactly.
    MatMap<T> mat(std::int64_t rows, std::int64_t cols) {
        check_view(rows, cols);
        return MatMap<T>(data_.data(), rows, cols);
    }
    ConstMatMap<T> mat(std::int64_t rows, std::int64_t cols) const {
        check_view(rows, cols);
        return ConstMatMap<T>(data_.data(), rows, cols);
    }
    MatMap<T> grad_mat(std::int64_t rows, std::int64_t cols) {
        check_view(rows, cols);
        ensure_grad();
        return MatMap<T>(grad_.data(), rows, cols);
    }
    VecMap<T> vec() { return VecMap<T>(data_.data(), numel()); }
    ConstVecMap<T> vec() const { return ConstVecMap<T>(data_.data(), numel()); }
    VecMap<T> grad_vec() {
        ensure_grad();
        return VecMap<T>(grad_.data(), numel());
    }

private:
    std::size_t flat_index(std::initializer_list<std::int64_t> idx) const {
        if (static_cast<int>(idx.size()) != rank())
            throw ShapeError("index rank mismatch for shape " + shape_str(shape_));
        std::int64_t flat = 0;
        int i = 0;
        for (auto v : idx) {
            flat = flat * shape_[static_cast<std::size_t>(i)] + v;
            ++i;
        }
        return static_cast<std::size_t>(flat);
    }

    void check_view(std::int64_t rows, std::int64_t cols) const {
        if (rows * cols != numel())
            throw ShapeError("cannot view tensor " + shape_str(shape_) + " as " +
                             std::to_string(rows) + "x" + std::to_string(cols));
    }

    std::vector<std::int64_t> shape_;
    AlignedVec<T> data_;
    AlignedVec<T> grad_;
};

} // namespace gazepred
