#pragma once

#include <cstdint>
#include <vector>

#include "hsn/image.hpp"
#include "hsn/io/datasets.hpp"

namespace hsn {

/// Procedural stereo pairs with dense ground truth at desk scale.
/// Disparity: 2-5 layered slanted-plane segments rasterized to integer pixel
/// values (front layers higher). Left view: multi-scale value noise,
/// non-constant within every 8x8 tile. Right view: forward-mapped copy of the
/// left texture (nearest layer wins); rows are inpainted horizontally where no
/// left source exists. Left pixels whose correspondence lost the depth contest
/// are flagged occluded. Deterministic per seed.
std::vector<StereoSample> synth_generate(std::uint64_t seed, int h, int w, int dmax, int n);

/// Writes samples in the curated on-disk layout plus manifest.json.
DatasetManifest write_synth_dataset(const std::vector<StereoSample>& samples,
                                    const std::string& root, const std::string& split = "synth");

}  // namespace hsn
