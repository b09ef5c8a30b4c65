#pragma once

#include "hsn/nn/linear.hpp"
#include "hsn/nn/windows.hpp"

namespace hsn::nn {

/// [c, h, w] -> [1, h, w, c] token layout and back.
template <typename T>
Tensor<T> chw_to_grid(const Tensor<T>& x) {
    const int c = x.size(0), h = x.size(1), w = x.size(2);
    Tensor<T> g({1, h, w, c});
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < h; ++y)
            for (int xx = 0; xx < w; ++xx) g(0, y, xx, ch) = x(ch, y, xx);
    return g;
}

template <typename T>
Tensor<T> grid_to_chw(const Tensor<T>& g) {
    const int h = g.size(1), w = g.size(2), c = g.size(3);
    Tensor<T> x({c, h, w});
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < h; ++y)
            for (int xx = 0; xx < w; ++xx) x(ch, y, xx) = g(0, y, xx, ch);
    return x;
}

/// [c, d, h, w] -> [d, h, w, c] and back.
template <typename T>
Tensor<T> cdhw_to_grid(const Tensor<T>& x) {
    const int c = x.size(0), d = x.size(1), h = x.size(2), w = x.size(3);
    Tensor<T> g({d, h, w, c});
    for (int ch = 0; ch < c; ++ch)
        for (int z = 0; z < d; ++z)
            for (int y = 0; y < h; ++y)
                for (int xx = 0; xx < w; ++xx) g(z, y, xx, ch) = x(ch, z, y, xx);
    return g;
}

template <typename T>
Tensor<T> grid_to_cdhw(const Tensor<T>& g) {
    const int d = g.size(0), h = g.size(1), w = g.size(2), c = g.size(3);
    Tensor<T> x({c, d, h, w});
    for (int ch = 0; ch < c; ++ch)
        for (int z = 0; z < d; ++z)
            for (int y = 0; y < h; ++y)
                for (int xx = 0; xx < w; ++xx) x(ch, z, y, xx) = g(z, y, xx, ch);
    return x;
}

/// Splits an image into non-overlapping p x p patches and embeds each flattened
/// patch (channel-major order: c, dy, dx) into embed_dim tokens.
/// Inputs not divisible by the patch size are reflect-padded and the token grid
/// covers the padded extent.
template <typename T>
class PatchEmbed2D {
public:
    PatchEmbed2D() = default;

    PatchEmbed2D(int in_ch, int patch, int embed_dim, Rng& rng)
        : proj(in_ch * patch * patch, embed_dim, true, rng), in_ch_(in_ch), patch_(patch) {}

    /// x: [c, h, w] -> tokens [1, h/p, w/p, embed].
    Tensor<T> forward(const Tensor<T>& x) {
        h_ = x.size(1);
        w_ = x.size(2);
        ph_ = round_up(h_, patch_);
        pw_ = round_up(w_, patch_);
        Tensor<T> xp = reflect_pad(x);

        const int th = ph_ / patch_, tw = pw_ / patch_;
        const int n = th * tw;
        const int flat = in_ch_ * patch_ * patch_;
        Tensor<T> patches({n, flat});
        for (int ty = 0; ty < th; ++ty)
            for (int tx = 0; tx < tw; ++tx) {
                T* row = patches.data() + (static_cast<std::int64_t>(ty) * tw + tx) * flat;
                int k = 0;
                for (int c = 0; c < in_ch_; ++c)
                    for (int dy = 0; dy < patch_; ++dy)
                        for (int dx = 0; dx < patch_; ++dx, ++k)
                            row[k] = xp(c, ty * patch_ + dy, tx * patch_ + dx);
            }
        Tensor<T> tokens = proj.forward(patches);
        tokens.reshape({1, th, tw, proj.out_features()});
        return tokens;
    }

    Tensor<T> backward(const Tensor<T>& gtokens) {
        const int th = ph_ / patch_, tw = pw_ / patch_;
        const int flat = in_ch_ * patch_ * patch_;
        Tensor<T> gt = gtokens;
        gt.reshape({th * tw, proj.out_features()});
        Tensor<T> gpatches = proj.backward(gt);

        Tensor<T> gxp({in_ch_, ph_, pw_});
        for (int ty = 0; ty < th; ++ty)
            for (int tx = 0; tx < tw; ++tx) {
                const T* row = gpatches.data() + (static_cast<std::int64_t>(ty) * tw + tx) * flat;
                int k = 0;
                for (int c = 0; c < in_ch_; ++c)
                    for (int dy = 0; dy < patch_; ++dy)
                        for (int dx = 0; dx < patch_; ++dx, ++k)
                            gxp(c, ty * patch_ + dy, tx * patch_ + dx) += row[k];
            }
        return reflect_pad_backward(gxp);
    }

    void collect(ParamRegistry<T>& reg, const std::string& prefix) const {
        proj.collect(reg, prefix + ".proj");
    }

    Linear<T> proj;

private:
    int reflect_src(int i, int n) const { return i < n ? i : 2 * n - 2 - i; }

    Tensor<T> reflect_pad(const Tensor<T>& x) const {
        if (ph_ == h_ && pw_ == w_) return x;
        if (ph_ - h_ > h_ - 1 || pw_ - w_ > w_ - 1)
            throw ArgumentError("PatchEmbed2D: input too small to reflect-pad");
        Tensor<T> xp({in_ch_, ph_, pw_});
        for (int c = 0; c < in_ch_; ++c)
            for (int y = 0; y < ph_; ++y)
                for (int xx = 0; xx < pw_; ++xx)
                    xp(c, y, xx) = x(c, reflect_src(y, h_), reflect_src(xx, w_));
        return xp;
    }

    Tensor<T> reflect_pad_backward(const Tensor<T>& gxp) const {
        if (ph_ == h_ && pw_ == w_) return gxp;
        Tensor<T> gx({in_ch_, h_, w_});
        for (int c = 0; c < in_ch_; ++c)
            for (int y = 0; y < ph_; ++y)
                for (int xx = 0; xx < pw_; ++xx)
                    gx(c, reflect_src(y, h_), reflect_src(xx, w_)) += gxp(c, y, xx);
        return gx;
    }

    int in_ch_ = 0, patch_ = 1;
    int h_ = 0, w_ = 0, ph_ = 0, pw_ = 0;
};

/// 1x1x1 patch embedding of a feature volume: a pointwise linear map taking
/// [c_in, d, h, w] to tokens [d, h, w, embed]. Volume cells become tokens, so
/// the disparity axis keeps its geometry at stage boundaries.
template <typename T>
class PatchEmbed3D {
public:
    PatchEmbed3D() = default;

    PatchEmbed3D(int in_ch, int embed_dim, Rng& rng) : proj(in_ch, embed_dim, true, rng) {}

    Tensor<T> forward(const Tensor<T>& vol) {
        dims_ = Dims3{vol.size(1), vol.size(2), vol.size(3)};
        Tensor<T> g = cdhw_to_grid(vol);
        const int cin = vol.size(0);
        g.reshape({static_cast<int>(dims_.volume()), cin});
        Tensor<T> tokens = proj.forward(g);
        tokens.reshape({dims_.d, dims_.h, dims_.w, proj.out_features()});
        return tokens;
    }

    Tensor<T> backward(const Tensor<T>& gtokens) {
        Tensor<T> gt = gtokens;
        gt.reshape({static_cast<int>(dims_.volume()), proj.out_features()});
        Tensor<T> gg = proj.backward(gt);
        gg.reshape({dims_.d, dims_.h, dims_.w, proj.in_features()});
        return grid_to_cdhw(gg);
    }

    void collect(ParamRegistry<T>& reg, const std::string& prefix) const {
        proj.collect(reg, prefix + ".proj");
    }

    Linear<T> proj;

private:
    Dims3 dims_;
};

/// Stride-2 patch merge: concatenates each 2x2x2 neighborhood (8c channels)
/// and linearly reduces to 2c. Halves d, h and w together.
template <typename T>
class PatchMerge3D {
public:
    PatchMerge3D() = default;

    PatchMerge3D(int channels, Rng& rng) : proj(8 * channels, 2 * channels, false, rng), c_(channels) {}

    Tensor<T> forward(const Tensor<T>& grid) {
        in_dims_ = grid_dims(grid);
        if (in_dims_.d % 2 || in_dims_.h % 2 || in_dims_.w % 2)
            throw ArgumentError("PatchMerge3D: dims must be even");
        const Dims3 od{in_dims_.d / 2, in_dims_.h / 2, in_dims_.w / 2};
        Tensor<T> gathered({static_cast<int>(od.volume()), 8 * c_});
        std::int64_t r = 0;
        for (int z = 0; z < od.d; ++z)
            for (int y = 0; y < od.h; ++y)
                for (int x = 0; x < od.w; ++x, ++r) {
                    T* row = gathered.data() + r * 8 * c_;
                    int k = 0;
                    for (int dz = 0; dz < 2; ++dz)
                        for (int dy = 0; dy < 2; ++dy)
                            for (int dx = 0; dx < 2; ++dx)
                                for (int ch = 0; ch < c_; ++ch, ++k)
                                    row[k] = grid(2 * z + dz, 2 * y + dy, 2 * x + dx, ch);
                }
        Tensor<T> out = proj.forward(gathered);
        out.reshape({od.d, od.h, od.w, 2 * c_});
        return out;
    }

    Tensor<T> backward(const Tensor<T>& gy) {
        const Dims3 od = grid_dims(gy);
        Tensor<T> g = gy;
        g.reshape({static_cast<int>(od.volume()), 2 * c_});
        Tensor<T> ggathered = proj.backward(g);
        Tensor<T> gx({in_dims_.d, in_dims_.h, in_dims_.w, c_});
        std::int64_t r = 0;
        for (int z = 0; z < od.d; ++z)
            for (int y = 0; y < od.h; ++y)
                for (int x = 0; x < od.w; ++x, ++r) {
                    const T* row = ggathered.data() + r * 8 * c_;
                    int k = 0;
                    for (int dz = 0; dz < 2; ++dz)
                        for (int dy = 0; dy < 2; ++dy)
                            for (int dx = 0; dx < 2; ++dx)
                                for (int ch = 0; ch < c_; ++ch, ++k)
                                    gx(2 * z + dz, 2 * y + dy, 2 * x + dx, ch) += row[k];
                }
        return gx;
    }

    void collect(ParamRegistry<T>& reg, const std::string& prefix) const {
        proj.collect(reg, prefix + ".proj");
    }

    Linear<T> proj;

private:
    int c_ = 0;
    Dims3 in_dims_;
};

/// Mirror of PatchMerge3D: linear expansion to 8 * (c/2) features scattered
/// over a 2x2x2 neighborhood. Doubles d, h and w, halves channels.
template <typename T>
class PatchExpand3D {
public:
    PatchExpand3D() = default;

    PatchExpand3D(int channels, Rng& rng)
        : proj(channels, 8 * (channels / 2), false, rng), c_(channels) {
        if (channels % 2) throw ConfigError("PatchExpand3D: channels must be even");
    }

    Tensor<T> forward(const Tensor<T>& grid) {
        in_dims_ = grid_dims(grid);
        const int oc = c_ / 2;
        Tensor<T> g = grid;
        g.reshape({static_cast<int>(in_dims_.volume()), c_});
        Tensor<T> expanded = proj.forward(g);  // [n, 8*oc]
        Tensor<T> out({in_dims_.d * 2, in_dims_.h * 2, in_dims_.w * 2, oc});
        std::int64_t r = 0;
        for (int z = 0; z < in_dims_.d; ++z)
            for (int y = 0; y < in_dims_.h; ++y)
                for (int x = 0; x < in_dims_.w; ++x, ++r) {
                    const T* row = expanded.data() + r * 8 * oc;
                    int k = 0;
                    for (int dz = 0; dz < 2; ++dz)
                        for (int dy = 0; dy < 2; ++dy)
                            for (int dx = 0; dx < 2; ++dx)
                                for (int ch = 0; ch < oc; ++ch, ++k)
                                    out(2 * z + dz, 2 * y + dy, 2 * x + dx, ch) = row[k];
                }
        return out;
    }

    Tensor<T> backward(const Tensor<T>& gy) {
        const int oc = c_ / 2;
        Tensor<T> gexpanded({static_cast<int>(in_dims_.volume()), 8 * oc});
        std::int64_t r = 0;
        for (int z = 0; z < in_dims_.d; ++z)
            for (int y = 0; y < in_dims_.h; ++y)
                for (int x = 0; x < in_dims_.w; ++x, ++r) {
                    T* row = gexpanded.data() + r * 8 * oc;
                    int k = 0;
                    for (int dz = 0; dz < 2; ++dz)
                        for (int dy = 0; dy < 2; ++dy)
                            for (int dx = 0; dx < 2; ++dx)
                                for (int ch = 0; ch < oc; ++ch, ++k)
                                    row[k] = gy(2 * z + dz, 2 * y + dy, 2 * x + dx, ch);
                }
        Tensor<T> gx = proj.backward(gexpanded);
        gx.reshape({in_dims_.d, in_dims_.h, in_dims_.w, c_});
        return gx;
    }

    void collect(ParamRegistry<T>& reg, const std::string& prefix) const {
        proj.collect(reg, prefix + ".proj");
    }

    Linear<T> proj;

private:
    int c_ = 0;
    Dims3 in_dims_;
};

}  // namespace hsn::nn
