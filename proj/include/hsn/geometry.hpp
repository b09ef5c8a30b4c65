#pragma once

#include <utility>

#include "hsn/image.hpp"

namespace hsn {

/// z = fx * baseline / d, with the optional principal-point offset added to d.
/// Pixels with d <= 0 or invalid become invalid.
DepthMap disparity_to_depth(const DisparityMap& d, const CameraRig& rig, bool use_cx_offset = false);

/// Inverse of disparity_to_depth. Pixels with z <= 0 or invalid become invalid.
DisparityMap depth_to_disparity(const DepthMap& z, const CameraRig& rig, bool use_cx_offset = false);

enum class WarpInterp { Bilinear, Nearest };

/// Reconstructs the left view: out(y,x) = right(y, x - d(y,x)).
/// Pixels sampling outside the image or with invalid disparity are masked out.
std::pair<Image, std::vector<std::uint8_t>> warp_right_to_left(
    const Image& right, const DisparityMap& d, WarpInterp interp = WarpInterp::Bilinear);

Image crop_borders(const Image& img, int left_px, int right_px);
MaskedMap crop_borders(const MaskedMap& map, int left_px, int right_px);

}  // namespace hsn
