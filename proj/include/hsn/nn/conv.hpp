#pragma once

#include <array>

#include "hsn/nn/gemm.hpp"
#include "hsn/nn/param.hpp"

namespace hsn::nn {

/// 2D convolution over [C, H, W], zero padding, square kernel.
template <typename T>
class Conv2d {
public:
    Conv2d() = default;

    Conv2d(int in_ch, int out_ch, int kernel, int stride, int pad, bool bias, Rng& rng)
        : in_ch_(in_ch), out_ch_(out_ch), k_(kernel), s_(stride), p_(pad), has_bias_(bias) {
        weight = Parameter<T>({out_ch, in_ch, kernel, kernel}, FilterKind::ConvOut, true);
        init_kaiming(weight.v(), rng, static_cast<std::int64_t>(in_ch) * kernel * kernel);
        if (bias) b = Parameter<T>({out_ch}, FilterKind::Whole, false);
    }

    Tensor<T> forward(const Tensor<T>& x) {
        h_ = x.size(1);
        w_ = x.size(2);
        oh_ = (h_ + 2 * p_ - k_) / s_ + 1;
        ow_ = (w_ + 2 * p_ - k_) / s_ + 1;
        const int patch = in_ch_ * k_ * k_;
        const int nout = oh_ * ow_;

        cols_ = Tensor<T>({patch, nout});
        im2col(x.data(), cols_.data());

        Tensor<T> y({out_ch_, oh_, ow_});
        gemm(weight.v().data(), cols_.data(), y.data(), out_ch_, patch, nout);
        if (has_bias_) {
            for (int c = 0; c < out_ch_; ++c) {
                T* yc = y.data() + static_cast<std::int64_t>(c) * nout;
                for (int i = 0; i < nout; ++i) yc[i] += b.v()(c);
            }
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gy) {
        const int patch = in_ch_ * k_ * k_;
        const int nout = oh_ * ow_;
        gemm(gy.data(), cols_.data(), weight.g().data(), out_ch_, nout, patch, false, true, true);
        if (has_bias_) {
            for (int c = 0; c < out_ch_; ++c) {
                const T* gc = gy.data() + static_cast<std::int64_t>(c) * nout;
                for (int i = 0; i < nout; ++i) b.g()(c) += gc[i];
            }
        }
        Tensor<T> gcols({patch, nout});
        gemm(weight.v().data(), gy.data(), gcols.data(), patch, out_ch_, nout, true, false);
        Tensor<T> gx({in_ch_, h_, w_});
        col2im(gcols.data(), gx.data());
        return gx;
    }

    void collect(ParamRegistry<T>& reg, const std::string& prefix) const {
        reg.add(prefix + ".weight", weight);
        if (has_bias_) reg.add(prefix + ".bias", b);
    }

    Parameter<T> weight;
    Parameter<T> b;

private:
    void im2col(const T* x, T* cols) const {
        const int nout = oh_ * ow_;
        std::int64_t row = 0;
        for (int c = 0; c < in_ch_; ++c) {
            const T* xc = x + static_cast<std::int64_t>(c) * h_ * w_;
            for (int ky = 0; ky < k_; ++ky) {
                for (int kx = 0; kx < k_; ++kx, ++row) {
                    T* dst = cols + row * nout;
                    for (int oy = 0; oy < oh_; ++oy) {
                        const int iy = oy * s_ - p_ + ky;
                        for (int ox = 0; ox < ow_; ++ox, ++dst) {
                            const int ix = ox * s_ - p_ + kx;
                            *dst = (iy >= 0 && iy < h_ && ix >= 0 && ix < w_)
                                       ? xc[static_cast<std::int64_t>(iy) * w_ + ix]
                                       : T(0);
                        }
                    }
                }
            }
        }
    }

    void col2im(const T* cols, T* gx) const {
        const int nout = oh_ * ow_;
        std::int64_t row = 0;
        for (int c = 0; c < in_ch_; ++c) {
            T* xc = gx + static_cast<std::int64_t>(c) * h_ * w_;
            for (int ky = 0; ky < k_; ++ky) {
                for (int kx = 0; kx < k_; ++kx, ++row) {
                    const T* src = cols + row * nout;
                    for (int oy = 0; oy < oh_; ++oy) {
                        const int iy = oy * s_ - p_ + ky;
                        if (iy < 0 || iy >= h_) { src += ow_; continue; }
                        for (int ox = 0; ox < ow_; ++ox, ++src) {
                            const int ix = ox * s_ - p_ + kx;
                            if (ix >= 0 && ix < w_) xc[static_cast<std::int64_t>(iy) * w_ + ix] += *src;
                        }
                    }
                }
            }
        }
    }

    int in_ch_ = 0, out_ch_ = 0, k_ = 0, s_ = 1, p_ = 0;
    bool has_bias_ = false;
    int h_ = 0, w_ = 0, oh_ = 0, ow_ = 0;
    Tensor<T> cols_;
};

/// 3D convolution over [C, D, H, W], zero padding, cubic kernel.
template <typename T>
class Conv3d {
public:
    Conv3d() = default;

    Conv3d(int in_ch, int out_ch, int kernel, int stride, int pad, bool bias, Rng& rng)
        : in_ch_(in_ch), out_ch_(out_ch), k_(kernel), s_(stride), p_(pad), has_bias_(bias) {
        weight = Parameter<T>({out_ch, in_ch, kernel, kernel, kernel}, FilterKind::ConvOut, true);
        init_kaiming(weight.v(), rng, static_cast<std::int64_t>(in_ch) * kernel * kernel * kernel);
        if (bias) b = Parameter<T>({out_ch}, FilterKind::Whole, false);
    }

    Tensor<T> forward(const Tensor<T>& x) {
        d_ = x.size(1);
        h_ = x.size(2);
        w_ = x.size(3);
        od_ = (d_ + 2 * p_ - k_) / s_ + 1;
        oh_ = (h_ + 2 * p_ - k_) / s_ + 1;
        ow_ = (w_ + 2 * p_ - k_) / s_ + 1;
        const int patch = in_ch_ * k_ * k_ * k_;
        const int nout = od_ * oh_ * ow_;

        cols_ = Tensor<T>({patch, nout});
        im2col(x.data(), cols_.data());

        Tensor<T> y({out_ch_, od_, oh_, ow_});
        gemm(weight.v().data(), cols_.data(), y.data(), out_ch_, patch, nout);
        if (has_bias_) {
            for (int c = 0; c < out_ch_; ++c) {
                T* yc = y.data() + static_cast<std::int64_t>(c) * nout;
                for (int i = 0; i < nout; ++i) yc[i] += b.v()(c);
            }
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gy) {
        const int patch = in_ch_ * k_ * k_ * k_;
        const int nout = od_ * oh_ * ow_;
        gemm(gy.data(), cols_.data(), weight.g().data(), out_ch_, nout, patch, false, true, true);
        if (has_bias_) {
            for (int c = 0; c < out_ch_; ++c) {
                const T* gc = gy.data() + static_cast<std::int64_t>(c) * nout;
                for (int i = 0; i < nout; ++i) b.g()(c) += gc[i];
            }
        }
        Tensor<T> gcols({patch, nout});
        gemm(weight.v().data(), gy.data(), gcols.data(), patch, out_ch_, nout, true, false);
        Tensor<T> gx({in_ch_, d_, h_, w_});
        col2im(gcols.data(), gx.data());
        return gx;
    }

    void collect(ParamRegistry<T>& reg, const std::string& prefix) const {
        reg.add(prefix + ".weight", weight);
        if (has_bias_) reg.add(prefix + ".bias", b);
    }

    Parameter<T> weight;
    Parameter<T> b;

private:
    void im2col(const T* x, T* cols) const {
        const int nout = od_ * oh_ * ow_;
        std::int64_t row = 0;
        for (int c = 0; c < in_ch_; ++c) {
            const T* xc = x + static_cast<std::int64_t>(c) * d_ * h_ * w_;
            for (int kz = 0; kz < k_; ++kz)
                for (int ky = 0; ky < k_; ++ky)
                    for (int kx = 0; kx < k_; ++kx, ++row) {
                        T* dst = cols + row * nout;
                        for (int oz = 0; oz < od_; ++oz) {
                            const int iz = oz * s_ - p_ + kz;
                            const bool zok = iz >= 0 && iz < d_;
                            for (int oy = 0; oy < oh_; ++oy) {
                                const int iy = oy * s_ - p_ + ky;
                                const bool yok = iy >= 0 && iy < h_;
                                for (int ox = 0; ox < ow_; ++ox, ++dst) {
                                    const int ix = ox * s_ - p_ + kx;
                                    *dst = (zok && yok && ix >= 0 && ix < w_)
                                               ? xc[(static_cast<std::int64_t>(iz) * h_ + iy) * w_ + ix]
                                               : T(0);
                                }
                            }
                        }
                    }
        }
    }

    void col2im(const T* cols, T* gx) const {
        const int nout = od_ * oh_ * ow_;
        std::int64_t row = 0;
        for (int c = 0; c < in_ch_; ++c) {
            T* xc = gx + static_cast<std::int64_t>(c) * d_ * h_ * w_;
            for (int kz = 0; kz < k_; ++kz)
                for (int ky = 0; ky < k_; ++ky)
                    for (int kx = 0; kx < k_; ++kx, ++row) {
                        const T* src = cols + row * nout;
                        for (int oz = 0; oz < od_; ++oz) {
                            const int iz = oz * s_ - p_ + kz;
                            if (iz < 0 || iz >= d_) { src += oh_ * ow_; continue; }
                            for (int oy = 0; oy < oh_; ++oy) {
                                const int iy = oy * s_ - p_ + ky;
                                if (iy < 0 || iy >= h_) { src += ow_; continue; }
                                for (int ox = 0; ox < ow_; ++ox, ++src) {
                                    const int ix = ox * s_ - p_ + kx;
                                    if (ix >= 0 && ix < w_)
                                        xc[(static_cast<std::int64_t>(iz) * h_ + iy) * w_ + ix] += *src;
                                }
                            }
                        }
                    }
        }
    }

    int in_ch_ = 0, out_ch_ = 0, k_ = 0, s_ = 1, p_ = 0;
    bool has_bias_ = false;
    int d_ = 0, h_ = 0, w_ = 0, od_ = 0, oh_ = 0, ow_ = 0;
    Tensor<T> cols_;
};

}  // namespace hsn::nn
