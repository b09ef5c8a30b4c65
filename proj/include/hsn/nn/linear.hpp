#pragma once

#include "hsn/nn/gemm.hpp"
#include "hsn/nn/param.hpp"

namespace hsn::nn {

/// y = x W^T + b over the last axis. x is treated as [rows, in_features].
template <typename T>
class Linear {
public:
    Linear() = default;

    Linear(int in_features, int out_features, bool bias, Rng& rng)
        : in_(in_features), out_(out_features), has_bias_(bias) {
        weight = Parameter<T>({out_features, in_features}, FilterKind::MatrixRow, true);
        init_trunc_normal(weight.v(), rng);
        if (bias) b = Parameter<T>({out_features}, FilterKind::Whole, false);
    }

    Tensor<T> forward(const Tensor<T>& x) {
        const int rows = static_cast<int>(x.numel() / in_);
        x_cache_ = x;
        Tensor<T> y({rows, out_});
        gemm(x.data(), weight.v().data(), y.data(), rows, in_, out_, false, true);
        if (has_bias_) {
            for (int r = 0; r < rows; ++r)
                for (int o = 0; o < out_; ++o) y(r, o) += b.v()(o);
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gy) {
        const int rows = static_cast<int>(gy.numel() / out_);
        // gW += gy^T x ; gx = gy W
        gemm(gy.data(), x_cache_.data(), weight.g().data(), out_, rows, in_, true, false, true);
        if (has_bias_) {
            for (int r = 0; r < rows; ++r)
                for (int o = 0; o < out_; ++o) b.g()(o) += gy[static_cast<std::int64_t>(r) * out_ + o];
        }
        Tensor<T> gx({rows, in_});
        gemm(gy.data(), weight.v().data(), gx.data(), rows, out_, in_, false, false);
        return gx;
    }

    void collect(ParamRegistry<T>& reg, const std::string& prefix) const {
        reg.add(prefix + ".weight", weight);
        if (has_bias_) reg.add(prefix + ".bias", b);
    }

    int in_features() const { return in_; }
    int out_features() const { return out_; }

    Parameter<T> weight;
    Parameter<T> b;

private:
    int in_ = 0, out_ = 0;
    bool has_bias_ = false;
    Tensor<T> x_cache_;
};

}  // namespace hsn::nn
