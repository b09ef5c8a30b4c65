#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hsn/image.hpp"

namespace hsn {

struct SampleEntry {
    std::string id;
    std::string left;   // paths relative to the dataset root
    std::string right;
    std::optional<std::string> disp;
    std::optional<std::string> calib;
    std::optional<std::string> occ;
};

/// Dataset index: {split, samples:[{id, left, right, disp?, calib?, occ?}]}.
struct DatasetManifest {
    std::string root;
    std::string split;
    std::vector<SampleEntry> samples;
};

DatasetManifest read_manifest(const std::string& root);
/// Writes <root>/manifest.json; every referenced file must exist.
void write_manifest(const DatasetManifest& manifest);

StereoSample load_sample(const DatasetManifest& manifest, const SampleEntry& entry);
std::vector<StereoSample> load_all(const DatasetManifest& manifest);

/// Calibration JSON: {fx, baseline_mm, cx_left, cx_right}.
CameraRig read_calib(const std::string& path);
void write_calib(const CameraRig& rig, const std::string& path);

/// Discovers pairs laid out as left/NNN.png, right/NNN.png, optional
/// disp/NNN.pfm, and builds a manifest (no files are written).
DatasetManifest load_pairs_dir(const std::string& root, const std::string& split = "pairs");

/// Writes one sample in the curated layout:
/// <id>/left.png, <id>/right.png, <id>/disp.pfm (optional), <id>/calib.json,
/// <id>/occ.png (optional).
SampleEntry write_sample(const StereoSample& sample, const std::string& root);

struct CurationResult {
    DatasetManifest manifest;
    float max_disparity = 0.0f;
};

/// Converts keyframe depth (depth.pfm in mm + calib.json + left/right PNGs in
/// each keyframe directory under `keyframe_root`) into disparity supervision
/// in the curated layout at `out_root`. Records the maximum observed disparity.
CurationResult curate_scared(const std::string& keyframe_root, const std::string& out_root,
                             bool use_cx_offset = false);

}  // namespace hsn
