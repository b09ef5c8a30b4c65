#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "hsn/rng.hpp"
#include "hsn/tensor.hpp"

namespace hsn::nn {

/// Granularity used by filter-wise direction normalization:
/// conv kernels normalize per output channel, projection matrices per row,
/// everything else (biases, norm affines, bias tables) as a single block.
enum class FilterKind { ConvOut, MatrixRow, Whole };

/// Trainable tensor. Copying a Parameter shares value and gradient storage,
/// which is how Siamese branches share weights.
template <typename T>
struct Parameter {
    std::shared_ptr<Tensor<T>> value;
    std::shared_ptr<Tensor<T>> grad;
    FilterKind filter = FilterKind::Whole;
    bool decay = true;

    Parameter() = default;

    Parameter(std::vector<int> shape, FilterKind kind, bool apply_decay)
        : value(std::make_shared<Tensor<T>>(shape)),
          grad(std::make_shared<Tensor<T>>(shape)),
          filter(kind),
          decay(apply_decay) {}

    Tensor<T>& v() { return *value; }
    const Tensor<T>& v() const { return *value; }
    Tensor<T>& g() { return *grad; }
    const Tensor<T>& g() const { return *grad; }

    std::int64_t numel() const { return value ? value->numel() : 0; }

    /// Number of filters under this parameter's normalization granularity.
    int filter_count() const {
        switch (filter) {
            case FilterKind::ConvOut: return value->size(0);
            case FilterKind::MatrixRow: return value->size(0);
            case FilterKind::Whole: return 1;
        }
        return 1;
    }

    std::int64_t filter_stride() const { return numel() / filter_count(); }
};

template <typename T>
struct NamedParam {
    std::string name;
    Parameter<T> param;
};

/// Flat, ordered view of a model's parameters. Order is construction order and
/// defines the layout of flattened snapshot vectors.
template <typename T>
class ParamRegistry {
public:
    void add(std::string name, const Parameter<T>& p) {
        entries_.push_back({std::move(name), p});
    }

    std::size_t size() const { return entries_.size(); }
    const NamedParam<T>& operator[](std::size_t i) const { return entries_[i]; }
    NamedParam<T>& operator[](std::size_t i) { return entries_[i]; }

    auto begin() { return entries_.begin(); }
    auto end() { return entries_.end(); }
    auto begin() const { return entries_.begin(); }
    auto end() const { return entries_.end(); }

    std::int64_t total_count() const {
        std::int64_t n = 0;
        for (const auto& e : entries_) n += e.param.numel();
        return n;
    }

    void zero_grad() {
        for (auto& e : entries_) e.param.g().zero();
    }

    std::vector<T> flatten_values() const {
        std::vector<T> out;
        out.reserve(static_cast<std::size_t>(total_count()));
        for (const auto& e : entries_) {
            const Tensor<T>& v = e.param.v();
            out.insert(out.end(), v.data(), v.data() + v.numel());
        }
        return out;
    }

    void load_flat(const std::vector<T>& flat) {
        if (static_cast<std::int64_t>(flat.size()) != total_count())
            throw ArgumentError("load_flat: length mismatch");
        std::size_t off = 0;
        for (auto& e : entries_) {
            Tensor<T>& v = e.param.v();
            std::copy(flat.begin() + off, flat.begin() + off + v.numel(), v.data());
            off += static_cast<std::size_t>(v.numel());
        }
    }

private:
    std::vector<NamedParam<T>> entries_;
};

// Weight init conventions: truncated normal (0.02) for transformer projections,
// fan-in Kaiming for conv kernels, zeros for biases and bias tables.

template <typename T>
void init_trunc_normal(Tensor<T>& w, Rng& rng, double stddev = 0.02) {
    for (std::int64_t i = 0; i < w.numel(); ++i)
        w[i] = static_cast<T>(rng.trunc_normal(stddev));
}

template <typename T>
void init_kaiming(Tensor<T>& w, Rng& rng, std::int64_t fan_in) {
    const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (std::int64_t i = 0; i < w.numel(); ++i)
        w[i] = static_cast<T>(rng.normal(0.0, stddev));
}

}  // namespace hsn::nn
