#pragma once

#include <cmath>

#include "hsn/tensor.hpp"

namespace hsn::nn {

/// Exact GELU: 0.5 x (1 + erf(x / sqrt(2))).
template <typename T>
class Gelu {
public:
    Tensor<T> forward(const Tensor<T>& x) {
        x_cache_ = x;
        Tensor<T> y = x;
        for (std::int64_t i = 0; i < y.numel(); ++i) {
            const double v = static_cast<double>(x[i]);
            y[i] = static_cast<T>(0.5 * v * (1.0 + std::erf(v * M_SQRT1_2)));
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gy) {
        Tensor<T> gx = gy;
        for (std::int64_t i = 0; i < gx.numel(); ++i) {
            const double v = static_cast<double>(x_cache_[i]);
            const double cdf = 0.5 * (1.0 + std::erf(v * M_SQRT1_2));
            const double pdf = std::exp(-0.5 * v * v) / std::sqrt(2.0 * M_PI);
            gx[i] = static_cast<T>(static_cast<double>(gy[i]) * (cdf + v * pdf));
        }
        return gx;
    }

private:
    Tensor<T> x_cache_;
};

template <typename T>
class Relu {
public:
    Tensor<T> forward(const Tensor<T>& x) {
        mask_.assign(static_cast<std::size_t>(x.numel()), 0);
        Tensor<T> y = x;
        for (std::int64_t i = 0; i < y.numel(); ++i) {
            if (x[i] > T(0))
                mask_[static_cast<std::size_t>(i)] = 1;
            else
                y[i] = T(0);
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gy) {
        Tensor<T> gx = gy;
        for (std::int64_t i = 0; i < gx.numel(); ++i)
            if (!mask_[static_cast<std::size_t>(i)]) gx[i] = T(0);
        return gx;
    }

private:
    std::vector<std::uint8_t> mask_;
};

}  // namespace hsn::nn
