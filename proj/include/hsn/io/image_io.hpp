#pragma once

#include <string>
#include <vector>

#include "hsn/image.hpp"

namespace hsn {

/// 8-bit PNG in, intensities normalized to [0,1]. Grayscale stays 1-channel.
Image load_image(const std::string& path);
void save_image(const Image& img, const std::string& path);

/// Binary masks as 8-bit grayscale PNG (0 / 255).
std::vector<std::uint8_t> load_mask(const std::string& path, int expected_h, int expected_w);
void save_mask(const std::vector<std::uint8_t>& mask, int h, int w, const std::string& path);

}  // namespace hsn
