#pragma once

#include "hsn/nn/activations.hpp"
#include "hsn/nn/attention.hpp"
#include "hsn/nn/layernorm.hpp"
#include "hsn/nn/linear.hpp"
#include "hsn/nn/windows.hpp"

namespace hsn::nn {

/// Block hyperparameters. Shift entries are 0 or floor(window/2).
struct BlockConfig {
    Dims3 window{1, 7, 7};
    Dims3 shift{0, 0, 0};
    int mlp_ratio = 4;
    int heads = 1;
    double norm_eps = 1e-5;

    void validate() const {
        if (window.d < 1 || window.h < 1 || window.w < 1)
            throw ConfigError("BlockConfig: window size must be >= 1");
        if (shift.d >= window.d || shift.h >= window.h || shift.w >= window.w)
            throw ConfigError("BlockConfig: shift must be < window size");
        if (mlp_ratio < 1 || heads < 1) throw ConfigError("BlockConfig: bad ratio/heads");
    }
};

template <typename T>
class Mlp {
public:
    Mlp() = default;

    Mlp(int channels, int ratio, Rng& rng)
        : fc1(channels, channels * ratio, true, rng), fc2(channels * ratio, channels, true, rng) {}

    Tensor<T> forward(const Tensor<T>& x) { return fc2.forward(act_.forward(fc1.forward(x))); }
    Tensor<T> backward(const Tensor<T>& gy) { return fc1.backward(act_.backward(fc2.backward(gy))); }

    void collect(ParamRegistry<T>& reg, const std::string& prefix) const {
        fc1.collect(reg, prefix + ".fc1");
        fc2.collect(reg, prefix + ".fc2");
    }

    Linear<T> fc1, fc2;

private:
    Gelu<T> act_;
};

/// Pre-norm windowed transformer block over a [d,h,w,c] token grid:
/// x + WMSA(LN(x)), then + MLP(LN(.)). Shifted variants roll the grid and
/// mask attention across wrapped regions. Used for both 2D (d = 1) and 3D grids.
template <typename T>
class TransformerBlock {
public:
    TransformerBlock() = default;

    TransformerBlock(int channels, const BlockConfig& cfg, Rng& rng) : cfg_(cfg) {
        cfg_.validate();
        norm1 = LayerNorm<T>(channels, static_cast<T>(cfg.norm_eps));
        attn = WindowMSA<T>(channels, cfg.heads, cfg.window, rng);
        norm2 = LayerNorm<T>(channels, static_cast<T>(cfg.norm_eps));
        mlp = Mlp<T>(channels, cfg.mlp_ratio, rng);
    }

    Tensor<T> forward(const Tensor<T>& grid) {
        dims_ = grid_dims(grid);
        const int c = grid.size(3);
        const bool shifted = cfg_.shift.d || cfg_.shift.h || cfg_.shift.w;

        Tensor<T> t = norm1.forward(grid);
        t.reshape({dims_.d, dims_.h, dims_.w, c});
        Tensor<T> padded = pad_grid(t, cfg_.window);
        padded_dims_ = grid_dims(padded);
        if (shifted) {
            padded = roll_grid(padded, cfg_.shift.d, cfg_.shift.h, cfg_.shift.w);
            mask_ = shifted_mask<T>(padded_dims_, cfg_.window, cfg_.shift);
        }
        Tensor<T> wins = window_partition(padded, cfg_.window);
        Tensor<T> att = attn.forward(wins, shifted ? &mask_ : nullptr);
        att.reshape(wins.shape());
        Tensor<T> rev = window_reverse(att, cfg_.window, padded_dims_);
        if (shifted) rev = roll_grid(rev, -cfg_.shift.d, -cfg_.shift.h, -cfg_.shift.w);
        Tensor<T> branch = crop_grid(rev, dims_);

        Tensor<T> x1 = grid;
        x1.add_(branch);

        Tensor<T> t2 = norm2.forward(x1);
        Tensor<T> m = mlp.forward(t2);
        m.reshape({dims_.d, dims_.h, dims_.w, c});
        Tensor<T> y = x1;
        y.add_(m);
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gy) {
        const int c = gy.size(3);
        const bool shifted = cfg_.shift.d || cfg_.shift.h || cfg_.shift.w;

        Tensor<T> gm = mlp.backward(gy);
        Tensor<T> gx1 = norm2.backward(gm);
        gx1.reshape({dims_.d, dims_.h, dims_.w, c});
        gx1.add_(gy);

        Tensor<T> gbranch = crop_grid_backward(gx1, padded_dims_);
        if (shifted) gbranch = roll_grid(gbranch, cfg_.shift.d, cfg_.shift.h, cfg_.shift.w);
        Tensor<T> gwins = window_partition(gbranch, cfg_.window);
        Tensor<T> gatt = attn.backward(gwins);
        gatt.reshape(gwins.shape());
        Tensor<T> grev = window_reverse(gatt, cfg_.window, padded_dims_);
        if (shifted) grev = roll_grid(grev, -cfg_.shift.d, -cfg_.shift.h, -cfg_.shift.w);
        Tensor<T> gt = pad_grid_backward(grev, dims_);
        Tensor<T> gx = norm1.backward(gt);
        gx.reshape({dims_.d, dims_.h, dims_.w, c});
        gx.add_(gx1);
        return gx;
    }

    void collect(ParamRegistry<T>& reg, const std::string& prefix) const {
        norm1.collect(reg, prefix + ".norm1");
        attn.collect(reg, prefix + ".attn");
        norm2.collect(reg, prefix + ".norm2");
        mlp.collect(reg, prefix + ".mlp");
    }

    const BlockConfig& config() const { return cfg_; }

    LayerNorm<T> norm1, norm2;
    WindowMSA<T> attn;
    Mlp<T> mlp;

private:
    BlockConfig cfg_;
    Dims3 dims_, padded_dims_;
    Tensor<T> mask_;
};

}  // namespace hsn::nn
