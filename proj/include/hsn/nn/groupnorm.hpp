#pragma once

#include <cmath>

#include "hsn/nn/param.hpp"

namespace hsn::nn {

/// Single-group normalization over [C, spatial...]: one mean/var across the
/// whole tensor, per-channel affine. Batch-free, so train == eval.
template <typename T>
class GroupNorm1 {
public:
    GroupNorm1() = default;

    explicit GroupNorm1(int channels, T eps = T(1e-5)) : ch_(channels), eps_(eps) {
        gamma = Parameter<T>({channels}, FilterKind::Whole, false);
        beta = Parameter<T>({channels}, FilterKind::Whole, false);
        gamma.v().fill(T(1));
    }

    Tensor<T> forward(const Tensor<T>& x) {
        const std::int64_t n = x.numel();
        spatial_ = n / ch_;
        T mean = 0;
        for (std::int64_t i = 0; i < n; ++i) mean += x[i];
        mean /= static_cast<T>(n);
        T var = 0;
        for (std::int64_t i = 0; i < n; ++i) {
            const T d = x[i] - mean;
            var += d * d;
        }
        var /= static_cast<T>(n);
        inv_std_ = T(1) / std::sqrt(var + eps_);

        xhat_ = x;
        Tensor<T> y = x;
        for (int c = 0; c < ch_; ++c) {
            const T g = gamma.v()(c), bb = beta.v()(c);
            T* hp = xhat_.data() + static_cast<std::int64_t>(c) * spatial_;
            T* yp = y.data() + static_cast<std::int64_t>(c) * spatial_;
            for (std::int64_t i = 0; i < spatial_; ++i) {
                hp[i] = (hp[i] - mean) * inv_std_;
                yp[i] = hp[i] * g + bb;
            }
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gy) {
        const std::int64_t n = gy.numel();
        Tensor<T> gx = gy;
        T sum_g = 0, sum_gh = 0;
        for (int c = 0; c < ch_; ++c) {
            const T g = gamma.v()(c);
            const T* gp = gy.data() + static_cast<std::int64_t>(c) * spatial_;
            const T* hp = xhat_.data() + static_cast<std::int64_t>(c) * spatial_;
            T gg = 0, gb = 0;
            for (std::int64_t i = 0; i < spatial_; ++i) {
                const T gh = gp[i] * g;
                sum_g += gh;
                sum_gh += gh * hp[i];
                gg += gp[i] * hp[i];
                gb += gp[i];
            }
            gamma.g()(c) += gg;
            beta.g()(c) += gb;
        }
        const T inv_n = T(1) / static_cast<T>(n);
        for (int c = 0; c < ch_; ++c) {
            const T g = gamma.v()(c);
            const T* gp = gy.data() + static_cast<std::int64_t>(c) * spatial_;
            const T* hp = xhat_.data() + static_cast<std::int64_t>(c) * spatial_;
            T* xp = gx.data() + static_cast<std::int64_t>(c) * spatial_;
            for (std::int64_t i = 0; i < spatial_; ++i) {
                const T gh = gp[i] * g;
                xp[i] = inv_std_ * (gh - inv_n * sum_g - hp[i] * inv_n * sum_gh);
            }
        }
        return gx;
    }

    void collect(ParamRegistry<T>& reg, const std::string& prefix) const {
        reg.add(prefix + ".gamma", gamma);
        reg.add(prefix + ".beta", beta);
    }

    Parameter<T> gamma;
    Parameter<T> beta;

private:
    int ch_ = 0;
    T eps_ = T(1e-5);
    std::int64_t spatial_ = 0;
    T inv_std_ = T(1);
    Tensor<T> xhat_;
};

}  // namespace hsn::nn
