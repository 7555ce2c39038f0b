#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "cse/common.hpp"

namespace cse {

// Dense row-major tensor. float for training/checkpoints, double for the
// gradient-check mode.
template <typename T>
class TensorT {
  public:
    TensorT() = default;
    explicit TensorT(std::vector<size_t> shape, T fill = T(0))
        : shape_(std::move(shape)), data_(count(shape_), fill) {}

    static size_t count(const std::vector<size_t>& shape) {
        size_t n = 1;
        for (size_t d : shape) n *= d;
        return n;
    }

    const std::vector<size_t>& shape() const { return shape_; }
    size_t size() const { return data_.size(); }
    size_t rows() const { return shape_.empty() ? 0 : shape_[0]; }
    size_t cols() const { return shape_.size() < 2 ? 1 : shape_[1]; }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    T& operator[](size_t i) { return data_[i]; }
    T operator[](size_t i) const { return data_[i]; }

    T& at(size_t r, size_t c) { return data_[r * cols() + c]; }
    T at(size_t r, size_t c) const { return data_[r * cols() + c]; }

    std::span<T> row(size_t r) { return {data_.data() + r * cols(), cols()}; }
    std::span<const T> row(size_t r) const { return {data_.data() + r * cols(), cols()}; }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

    bool same_shape(const TensorT& o) const { return shape_ == o.shape_; }

    void require_shape(const TensorT& o, const char* what) const {
        if (!same_shape(o)) throw ShapeError(std::string(what) + ": shape mismatch");
    }

    TensorT& operator+=(const TensorT& o) {
        require_shape(o, "tensor add");
        for (size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
        return *this;
    }

    TensorT& operator-=(const TensorT& o) {
        require_shape(o, "tensor sub");
        for (size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
        return *this;
    }

    TensorT& scale(T a) {
        for (T& v : data_) v *= a;
        return *this;
    }

    bool all_finite() const {
        for (T v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

  private:
    std::vector<size_t> shape_;
    std::vector<T> data_;
};

using Tensor = TensorT<float>;
using Tensor64 = TensorT<double>;

// Span kernels the encoders are built from.

template <typename T>
T dot(std::span<const T> a, std::span<const T> b) {
    if (a.size() != b.size()) throw ShapeError("dot: length mismatch");
    T s = 0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

template <typename T>
void axpy(T a, std::span<const T> x, std::span<T> y) {
    if (x.size() != y.size()) throw ShapeError("axpy: length mismatch");
    for (size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

// y += W x  with W row-major [out x in].
template <typename T>
void matvec_acc(const TensorT<T>& W, std::span<const T> x, std::span<T> y) {
    if (W.cols() != x.size() || W.rows() != y.size())
        throw ShapeError("matvec: shape mismatch");
    for (size_t r = 0; r < W.rows(); ++r) y[r] += dot(W.row(r), x);
}

// y += W^T x.
template <typename T>
void matvec_t_acc(const TensorT<T>& W, std::span<const T> x, std::span<T> y) {
    if (W.rows() != x.size() || W.cols() != y.size())
        throw ShapeError("matvec_t: shape mismatch");
    for (size_t r = 0; r < W.rows(); ++r) axpy(x[r], W.row(r), y);
}

// G += a b^T (outer product accumulate into a gradient matrix).
template <typename T>
void outer_acc(TensorT<T>& G, std::span<const T> a, std::span<const T> b) {
    if (G.rows() != a.size() || G.cols() != b.size())
        throw ShapeError("outer: shape mismatch");
    for (size_t r = 0; r < a.size(); ++r) axpy(a[r], b, G.row(r));
}

// Numerically stable softmax; max subtraction keeps the exponentials bounded.
template <typename T>
std::vector<T> softmax(std::span<const T> v) {
    if (v.empty()) throw Error("softmax: empty vector");
    T mx = v[0];
    for (T x : v) mx = std::max(mx, x);
    std::vector<T> out(v.size());
    T sum = 0;
    for (size_t i = 0; i < v.size(); ++i) {
        out[i] = std::exp(v[i] - mx);
        sum += out[i];
    }
    for (T& x : out) x /= sum;
    return out;
}

template <typename T>
std::vector<T> softmax(const std::vector<T>& v) {
    return softmax(std::span<const T>(v));
}

template <typename T>
T log_sum_exp(std::span<const T> v) {
    if (v.empty()) throw Error("log_sum_exp: empty vector");
    T mx = v[0];
    for (T x : v) mx = std::max(mx, x);
    T s = 0;
    for (T x : v) s += std::exp(x - mx);
    return mx + std::log(s);
}

}  // namespace cse
