#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "hsn/errors.hpp"

namespace hsn {

/// Intensity image, values normalized to [0,1]. Channels-last storage (h, w, c).
struct Image {
    int height = 0;
    int width = 0;
    int channels = 0;  // 1 or 3
    std::vector<float> values;

    Image() = default;
    Image(int h, int w, int c) : height(h), width(w), channels(c) {
        if (h < 1 || w < 1 || (c != 1 && c != 3))
            throw ArgumentError("Image: bad dimensions");
        values.assign(static_cast<std::size_t>(h) * w * c, 0.0f);
    }

    float& at(int y, int x, int c) {
        return values[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    float at(int y, int x, int c) const {
        return values[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }

    std::size_t pixel_count() const { return static_cast<std::size_t>(height) * width; }
};

/// Per-pixel map with a validity mask. Used for disparity (pixels) and depth (mm).
struct MaskedMap {
    int height = 0;
    int width = 0;
    std::vector<float> values;
    std::vector<std::uint8_t> valid;

    MaskedMap() = default;
    MaskedMap(int h, int w) : height(h), width(w) {
        if (h < 1 || w < 1) throw ArgumentError("MaskedMap: bad dimensions");
        values.assign(static_cast<std::size_t>(h) * w, 0.0f);
        valid.assign(static_cast<std::size_t>(h) * w, 1);
    }

    float& at(int y, int x) { return values[static_cast<std::size_t>(y) * width + x]; }
    float at(int y, int x) const { return values[static_cast<std::size_t>(y) * width + x]; }

    bool is_valid(int y, int x) const { return valid[static_cast<std::size_t>(y) * width + x] != 0; }
    void set_valid(int y, int x, bool v) { valid[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0; }

    std::size_t pixel_count() const { return static_cast<std::size_t>(height) * width; }
};

/// Left-referenced disparity in pixels. Valid pixels hold finite disparity >= 0.
using DisparityMap = MaskedMap;

/// Depth in millimetres. Valid pixels hold finite depth > 0.
using DepthMap = MaskedMap;

/// Rectified rig calibration. Baseline stored in millimetres.
struct CameraRig {
    double fx = 0.0;           // focal length, pixels
    double baseline_mm = 0.0;  // baseline, millimetres
    double cx_left = 0.0;
    double cx_right = 0.0;

    void validate() const {
        if (!(std::isfinite(fx) && std::isfinite(baseline_mm) &&
              std::isfinite(cx_left) && std::isfinite(cx_right)))
            throw ConfigError("CameraRig: non-finite calibration");
        if (fx <= 0.0) throw ConfigError("CameraRig: fx must be > 0");
        if (baseline_mm <= 0.0) throw ConfigError("CameraRig: baseline must be > 0");
    }
};

/// One stereo pair with optional supervision and calibration.
struct StereoSample {
    Image left;
    Image right;
    bool has_gt = false;
    DisparityMap gt_disparity;
    bool has_rig = false;
    CameraRig rig;
    /// Pixels of the left view whose correspondence is hidden in the right view.
    bool has_occlusion = false;
    std::vector<std::uint8_t> occluded;
    std::string id;
};

}  // namespace hsn
