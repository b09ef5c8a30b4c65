#include "hsn/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace hsn {

DepthMap disparity_to_depth(const DisparityMap& d, const CameraRig& rig, bool use_cx_offset) {
    rig.validate();
    const double fb = rig.fx * rig.baseline_mm;
    const double cx_off = use_cx_offset ? (rig.cx_left - rig.cx_right) : 0.0;

    DepthMap z(d.height, d.width);
    for (std::size_t i = 0; i < d.values.size(); ++i) {
        const double disp = static_cast<double>(d.values[i]) + cx_off;
        if (d.valid[i] && disp > 0.0 && std::isfinite(disp)) {
            z.values[i] = static_cast<float>(fb / disp);
            z.valid[i] = 1;
        } else {
            z.values[i] = 0.0f;
            z.valid[i] = 0;
        }
    }
    return z;
}

DisparityMap depth_to_disparity(const DepthMap& z, const CameraRig& rig, bool use_cx_offset) {
    rig.validate();
    const double fb = rig.fx * rig.baseline_mm;
    const double cx_off = use_cx_offset ? (rig.cx_left - rig.cx_right) : 0.0;

    DisparityMap d(z.height, z.width);
    for (std::size_t i = 0; i < z.values.size(); ++i) {
        const double depth = static_cast<double>(z.values[i]);
        if (z.valid[i] && depth > 0.0 && std::isfinite(depth)) {
            d.values[i] = static_cast<float>(fb / depth - cx_off);
            d.valid[i] = 1;
        } else {
            d.values[i] = 0.0f;
            d.valid[i] = 0;
        }
    }
    return d;
}

std::pair<Image, std::vector<std::uint8_t>> warp_right_to_left(
    const Image& right, const DisparityMap& d, WarpInterp interp) {
    if (right.height != d.height || right.width != d.width)
        throw ArgumentError("warp_right_to_left: image/disparity shape mismatch");

    const int h = right.height, w = right.width, c = right.channels;
    Image out(h, w, c);
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(h) * w, 0);

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t pi = static_cast<std::size_t>(y) * w + x;
            if (!d.valid[pi] || !std::isfinite(d.values[pi])) continue;
            const double sx = static_cast<double>(x) - static_cast<double>(d.values[pi]);

            if (interp == WarpInterp::Nearest) {
                const int xi = static_cast<int>(std::lround(sx));
                if (xi < 0 || xi >= w) continue;
                for (int ch = 0; ch < c; ++ch) out.at(y, x, ch) = right.at(y, xi, ch);
                mask[pi] = 1;
            } else {
                if (sx < 0.0 || sx > static_cast<double>(w - 1)) continue;
                const int x0 = static_cast<int>(std::floor(sx));
                const int x1 = std::min(x0 + 1, w - 1);
                const double fx = sx - x0;
                for (int ch = 0; ch < c; ++ch) {
                    const double v = (1.0 - fx) * right.at(y, x0, ch) + fx * right.at(y, x1, ch);
                    out.at(y, x, ch) = static_cast<float>(v);
                }
                mask[pi] = 1;
            }
        }
    }
    return {std::move(out), std::move(mask)};
}

Image crop_borders(const Image& img, int left_px, int right_px) {
    if (left_px < 0 || right_px < 0 || img.width <= left_px + right_px)
        throw ArgumentError("crop_borders: crop exceeds image width");
    Image out(img.height, img.width - left_px - right_px, img.channels);
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x)
            for (int c = 0; c < img.channels; ++c)
                out.at(y, x, c) = img.at(y, x + left_px, c);
    return out;
}

MaskedMap crop_borders(const MaskedMap& map, int left_px, int right_px) {
    if (left_px < 0 || right_px < 0 || map.width <= left_px + right_px)
        throw ArgumentError("crop_borders: crop exceeds map width");
    MaskedMap out(map.height, map.width - left_px - right_px);
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x) {
            out.at(y, x) = map.at(y, x + left_px);
            out.set_valid(y, x, map.is_valid(y, x + left_px));
        }
    return out;
}

}  // namespace hsn
