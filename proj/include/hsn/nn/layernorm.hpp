#pragma once

#include <cmath>

#include "hsn/nn/param.hpp"

namespace hsn::nn {

/// LayerNorm over the last axis (channels-last token layout).
template <typename T>
class LayerNorm {
public:
    LayerNorm() = default;

    LayerNorm(int features, T eps = T(1e-5)) : features_(features), eps_(eps) {
        gamma = Parameter<T>({features}, FilterKind::Whole, false);
        beta = Parameter<T>({features}, FilterKind::Whole, false);
        gamma.v().fill(T(1));
    }

    Tensor<T> forward(const Tensor<T>& x) {
        const int rows = static_cast<int>(x.numel() / features_);
        xhat_ = Tensor<T>({rows, features_});
        inv_std_.assign(rows, T(0));
        Tensor<T> y = x;
        for (int r = 0; r < rows; ++r) {
            const T* xr = x.data() + static_cast<std::int64_t>(r) * features_;
            T mean = 0;
            for (int c = 0; c < features_; ++c) mean += xr[c];
            mean /= features_;
            T var = 0;
            for (int c = 0; c < features_; ++c) {
                const T d = xr[c] - mean;
                var += d * d;
            }
            var /= features_;
            const T inv = T(1) / std::sqrt(var + eps_);
            inv_std_[r] = inv;
            T* yr = y.data() + static_cast<std::int64_t>(r) * features_;
            T* hr = xhat_.data() + static_cast<std::int64_t>(r) * features_;
            for (int c = 0; c < features_; ++c) {
                hr[c] = (xr[c] - mean) * inv;
                yr[c] = hr[c] * gamma.v()(c) + beta.v()(c);
            }
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gy) {
        const int rows = static_cast<int>(gy.numel() / features_);
        Tensor<T> gx = gy;
        for (int r = 0; r < rows; ++r) {
            const T* gr = gy.data() + static_cast<std::int64_t>(r) * features_;
            const T* hr = xhat_.data() + static_cast<std::int64_t>(r) * features_;
            T* xr = gx.data() + static_cast<std::int64_t>(r) * features_;
            T sum_g = 0, sum_gh = 0;
            for (int c = 0; c < features_; ++c) {
                const T gh = gr[c] * gamma.v()(c);
                sum_g += gh;
                sum_gh += gh * hr[c];
                gamma.g()(c) += gr[c] * hr[c];
                beta.g()(c) += gr[c];
            }
            const T inv_n = T(1) / features_;
            for (int c = 0; c < features_; ++c) {
                const T gh = gr[c] * gamma.v()(c);
                xr[c] = inv_std_[r] * (gh - inv_n * sum_g - hr[c] * inv_n * sum_gh);
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
    int features_ = 0;
    T eps_ = T(1e-5);
    Tensor<T> xhat_;
    std::vector<T> inv_std_;
};

}  // namespace hsn::nn
