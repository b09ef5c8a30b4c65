#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "hsn/errors.hpp"
#include "hsn/tensor.hpp"

namespace hsn {

/// Smooth-L1 over valid pixels: mean of 0.5 e^2 (|e| < 1) else |e| - 0.5.
/// Returns the scalar loss; backward() yields d(loss)/d(pred).
template <typename T>
class SmoothL1 {
public:
    T forward(const Tensor<T>& pred, const Tensor<T>& gt, const std::vector<std::uint8_t>& mask) {
        if (!pred.same_shape(gt) || static_cast<std::int64_t>(mask.size()) != pred.numel())
            throw ArgumentError("smooth_l1: shape mismatch");
        pred_ = pred;
        gt_ = gt;
        mask_ = mask;
        n_valid_ = 0;
        double sum = 0.0;
        for (std::int64_t i = 0; i < pred.numel(); ++i) {
            if (!mask[static_cast<std::size_t>(i)]) continue;
            ++n_valid_;
            const double e = static_cast<double>(pred[i]) - static_cast<double>(gt[i]);
            const double a = std::abs(e);
            sum += (a < 1.0) ? 0.5 * e * e : a - 0.5;
        }
        if (n_valid_ == 0) return T(0);
        return static_cast<T>(sum / n_valid_);
    }

    Tensor<T> backward(T gloss = T(1)) {
        Tensor<T> g(pred_.shape());
        if (n_valid_ == 0) return g;
        const T inv_n = gloss / static_cast<T>(n_valid_);
        for (std::int64_t i = 0; i < pred_.numel(); ++i) {
            if (!mask_[static_cast<std::size_t>(i)]) continue;
            const T e = pred_[i] - gt_[i];
            g[i] = inv_n * (std::abs(e) < T(1) ? e : (e > T(0) ? T(1) : T(-1)));
        }
        return g;
    }

    std::int64_t valid_count() const { return n_valid_; }

private:
    Tensor<T> pred_, gt_;
    std::vector<std::uint8_t> mask_;
    std::int64_t n_valid_ = 0;
};

}  // namespace hsn
