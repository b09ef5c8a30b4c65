#pragma once

#include <cmath>
#include <limits>

#include "hsn/errors.hpp"
#include "hsn/tensor.hpp"

namespace hsn {

/// Concatenation feature volume over epipolar shifts.
/// f_left, f_right: [c, h, w] -> volume [2c, d_bins, h, w] with
/// V[0..c, d, y, x] = f_left(., y, x) and V[c..2c, d, y, x] = f_right(., y, x-d)
/// for x >= d; right features shifted out of range are zero-filled.
template <typename T>
Tensor<T> build_feature_volume(const Tensor<T>& f_left, const Tensor<T>& f_right, int d_bins) {
    if (!f_left.same_shape(f_right))
        throw ArgumentError("build_feature_volume: feature shape mismatch");
    if (d_bins < 1) throw ArgumentError("build_feature_volume: d_bins must be >= 1");
    const int c = f_left.size(0), h = f_left.size(1), w = f_left.size(2);
    Tensor<T> vol({2 * c, d_bins, h, w});
    for (int ch = 0; ch < c; ++ch)
        for (int d = 0; d < d_bins; ++d)
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    vol(ch, d, y, x) = f_left(ch, y, x);
                    vol(c + ch, d, y, x) = (x >= d) ? f_right(ch, y, x - d) : T(0);
                }
    return vol;
}

/// Gradients of build_feature_volume w.r.t. both feature maps.
template <typename T>
void build_feature_volume_backward(const Tensor<T>& gvol, int c, Tensor<T>& gleft,
                                   Tensor<T>& gright) {
    const int d_bins = gvol.size(1), h = gvol.size(2), w = gvol.size(3);
    gleft = Tensor<T>({c, h, w});
    gright = Tensor<T>({c, h, w});
    for (int ch = 0; ch < c; ++ch)
        for (int d = 0; d < d_bins; ++d)
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    gleft(ch, y, x) += gvol(ch, d, y, x);
                    if (x >= d) gright(ch, y, x - d) += gvol(c + ch, d, y, x);
                }
}

/// Soft-argmin projection of a [d, h, w] cost volume (lower cost = better):
/// dhat(y,x) = sum_d d * softmax_d(-cost(d,y,x)). Differentiable; output in [0, d-1].
template <typename T>
class SoftArgmax {
public:
    Tensor<T> forward(const Tensor<T>& cost) {
        const int d = cost.size(0), h = cost.size(1), w = cost.size(2);
        probs_ = Tensor<T>({d, h, w});
        out_ = Tensor<T>({h, w});
        const std::int64_t plane = static_cast<std::int64_t>(h) * w;
        for (std::int64_t i = 0; i < plane; ++i) {
            T zmax = -std::numeric_limits<T>::infinity();
            for (int k = 0; k < d; ++k) {
                const T z = -cost[k * plane + i];
                if (!std::isfinite(static_cast<double>(z)))
                    throw NumericError("soft_argmax: non-finite cost");
                zmax = std::max(zmax, z);
            }
            T sum = 0;
            for (int k = 0; k < d; ++k) {
                const T e = std::exp(-cost[k * plane + i] - zmax);
                probs_[k * plane + i] = e;
                sum += e;
            }
            const T inv = T(1) / sum;
            T expect = 0;
            for (int k = 0; k < d; ++k) {
                probs_[k * plane + i] *= inv;
                expect += static_cast<T>(k) * probs_[k * plane + i];
            }
            out_[i] = expect;
        }
        return out_;
    }

    /// dE/dcost_k = -g * p_k * (k - dhat)
    Tensor<T> backward(const Tensor<T>& gout) {
        const int d = probs_.size(0), h = probs_.size(1), w = probs_.size(2);
        const std::int64_t plane = static_cast<std::int64_t>(h) * w;
        Tensor<T> gcost({d, h, w});
        for (std::int64_t i = 0; i < plane; ++i) {
            const T g = gout[i];
            const T dhat = out_[i];
            for (int k = 0; k < d; ++k)
                gcost[k * plane + i] = -g * probs_[k * plane + i] * (static_cast<T>(k) - dhat);
        }
        return gcost;
    }

private:
    Tensor<T> probs_, out_;
};

/// Bilinear upsampling of a [h, w] map by an integer factor, scaling values by
/// the factor (bin units -> pixel units). Half-pixel sample centers, edge clamp.
template <typename T>
class DisparityUpsampler {
public:
    explicit DisparityUpsampler(int factor = 3) : factor_(factor) {
        if (factor < 1) throw ArgumentError("upsample factor must be >= 1");
    }

    Tensor<T> forward(const Tensor<T>& coarse) {
        h_ = coarse.size(0);
        w_ = coarse.size(1);
        const int oh = h_ * factor_, ow = w_ * factor_;
        Tensor<T> out({oh, ow});
        const T scale = static_cast<T>(factor_);
        for (int y = 0; y < oh; ++y) {
            const auto [y0, y1, fy] = src_coords(y, h_);
            for (int x = 0; x < ow; ++x) {
                const auto [x0, x1, fx] = src_coords(x, w_);
                const T v = (T(1) - fy) * ((T(1) - fx) * coarse(y0, x0) + fx * coarse(y0, x1)) +
                            fy * ((T(1) - fx) * coarse(y1, x0) + fx * coarse(y1, x1));
                out(y, x) = v * scale;
            }
        }
        return out;
    }

    Tensor<T> backward(const Tensor<T>& gout) {
        Tensor<T> gcoarse({h_, w_});
        const int oh = h_ * factor_, ow = w_ * factor_;
        const T scale = static_cast<T>(factor_);
        for (int y = 0; y < oh; ++y) {
            const auto [y0, y1, fy] = src_coords(y, h_);
            for (int x = 0; x < ow; ++x) {
                const auto [x0, x1, fx] = src_coords(x, w_);
                const T g = gout(y, x) * scale;
                gcoarse(y0, x0) += g * (T(1) - fy) * (T(1) - fx);
                gcoarse(y0, x1) += g * (T(1) - fy) * fx;
                gcoarse(y1, x0) += g * fy * (T(1) - fx);
                gcoarse(y1, x1) += g * fy * fx;
            }
        }
        return gcoarse;
    }

    int factor() const { return factor_; }

private:
    struct Src { int i0, i1; T frac; };

    Src src_coords(int out_i, int in_n) const {
        const double s = (out_i + 0.5) / factor_ - 0.5;
        const double sc = std::min(std::max(s, 0.0), static_cast<double>(in_n - 1));
        const int i0 = static_cast<int>(std::floor(sc));
        const int i1 = std::min(i0 + 1, in_n - 1);
        return {i0, i1, static_cast<T>(sc - i0)};
    }

    int factor_ = 3;
    int h_ = 0, w_ = 0;
};

}  // namespace hsn
