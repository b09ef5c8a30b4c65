#pragma once

#include <algorithm>
#include <cassert>
#include <cstdint>
#include <cstring>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "hsn/errors.hpp"

namespace hsn {

/// Dense row-major tensor of rank 1..5. Owns its storage.
template <typename T>
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
        check_shape();
        data_.assign(static_cast<std::size_t>(compute_numel()), T(0));
    }

    Tensor(std::initializer_list<int> shape) : Tensor(std::vector<int>(shape)) {}

    static Tensor full(std::vector<int> shape, T v) {
        Tensor t(std::move(shape));
        t.fill(v);
        return t;
    }

    int rank() const { return static_cast<int>(shape_.size()); }
    const std::vector<int>& shape() const { return shape_; }

    int size(int axis) const {
        assert(axis >= 0 && axis < rank());
        return shape_[static_cast<std::size_t>(axis)];
    }

    std::int64_t numel() const { return static_cast<std::int64_t>(data_.size()); }
    bool empty() const { return data_.empty(); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    T& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
    const T& operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

    T& operator()(int i) { return data_[idx1(i)]; }
    const T& operator()(int i) const { return data_[idx1(i)]; }

    T& operator()(int i, int j) { return data_[idx2(i, j)]; }
    const T& operator()(int i, int j) const { return data_[idx2(i, j)]; }

    T& operator()(int i, int j, int k) { return data_[idx3(i, j, k)]; }
    const T& operator()(int i, int j, int k) const { return data_[idx3(i, j, k)]; }

    T& operator()(int i, int j, int k, int l) { return data_[idx4(i, j, k, l)]; }
    const T& operator()(int i, int j, int k, int l) const { return data_[idx4(i, j, k, l)]; }

    T& operator()(int i, int j, int k, int l, int m) { return data_[idx5(i, j, k, l, m)]; }
    const T& operator()(int i, int j, int k, int l, int m) const { return data_[idx5(i, j, k, l, m)]; }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }
    void zero() { fill(T(0)); }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    /// Returns a copy carrying a new shape with identical element count.
    Tensor reshaped(std::vector<int> new_shape) const {
        Tensor out;
        out.shape_ = std::move(new_shape);
        out.check_shape();
        if (out.compute_numel() != numel())
            throw ArgumentError("reshape: element count mismatch");
        out.data_ = data_;
        return out;
    }

    /// In-place reshape, no data movement.
    void reshape(std::vector<int> new_shape) {
        std::int64_t n = 1;
        for (int d : new_shape) n *= d;
        if (n != numel()) throw ArgumentError("reshape: element count mismatch");
        shape_ = std::move(new_shape);
    }

    void add_(const Tensor& o) {
        assert(same_shape(o));
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    }

    void scale_(T s) {
        for (auto& v : data_) v *= s;
    }

    bool all_finite() const {
        for (const auto& v : data_)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

private:
    void check_shape() const {
        if (shape_.empty() || shape_.size() > 5)
            throw ArgumentError("tensor rank must be 1..5");
        for (int d : shape_)
            if (d < 1) throw ArgumentError("tensor dims must be >= 1");
    }

    std::int64_t compute_numel() const {
        std::int64_t n = 1;
        for (int d : shape_) n *= d;
        return n;
    }

    std::size_t idx1(int i) const {
        assert(rank() == 1);
        return static_cast<std::size_t>(i);
    }
    std::size_t idx2(int i, int j) const {
        assert(rank() == 2);
        return static_cast<std::size_t>(i) * shape_[1] + j;
    }
    std::size_t idx3(int i, int j, int k) const {
        assert(rank() == 3);
        return (static_cast<std::size_t>(i) * shape_[1] + j) * shape_[2] + k;
    }
    std::size_t idx4(int i, int j, int k, int l) const {
        assert(rank() == 4);
        return ((static_cast<std::size_t>(i) * shape_[1] + j) * shape_[2] + k) * shape_[3] + l;
    }
    std::size_t idx5(int i, int j, int k, int l, int m) const {
        assert(rank() == 5);
        return (((static_cast<std::size_t>(i) * shape_[1] + j) * shape_[2] + k) * shape_[3] + l) * shape_[4] + m;
    }

    std::vector<int> shape_;
    std::vector<T> data_;
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

}  // namespace hsn
