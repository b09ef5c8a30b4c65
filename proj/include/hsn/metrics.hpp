#pragma once

#include <functional>
#include <string>
#include <vector>

#include "hsn/geometry.hpp"
#include "hsn/image.hpp"

namespace hsn {

/// Disparity accuracy over valid pixels (jointly valid in pred and gt).
struct DisparityReport {
    double epe = 0.0;        // mean |error|, pixels
    double rmse = 0.0;       // root mean squared error, pixels
    double bad2 = 0.0;       // % of valid pixels with |error| > 2
    double bad3 = 0.0;
    double bad5 = 0.0;
    std::int64_t n_pixels = 0;
};

struct DepthReport {
    double mae_mm = 0.0;
    std::int64_t n_pixels = 0;
    std::vector<std::pair<std::string, double>> per_frame;
};

struct WarpPairScore {
    std::string id;
    double ssim = 0.0;
    double psnr = 0.0;
};

struct WarpReport {
    double mean_ssim = 0.0;
    double mean_psnr = 0.0;
    std::vector<WarpPairScore> per_pair;
};

double epe(const DisparityMap& pred, const DisparityMap& gt);
double rmse(const DisparityMap& pred, const DisparityMap& gt);
/// 100 * (# valid pixels with |error| > t) / (# valid pixels).
double bad_ratio(const DisparityMap& pred, const DisparityMap& gt, double t);

DisparityReport evaluate_disparity(const DisparityMap& pred, const DisparityMap& gt);

/// Converts predicted disparity to depth and scores mean |z_pred - z_gt| in mm.
double depth_mae(const DisparityMap& pred_disp, const DepthMap& gt_depth, const CameraRig& rig,
                 bool use_cx_offset = false);

/// SSIM with an 11x11 Gaussian window (sigma 1.5), K1=0.01, K2=0.03, dynamic
/// range 1.0, averaged over window positions fully inside the image. Color
/// inputs are converted to luma first.
double ssim(const Image& a, const Image& b);
/// Masked variant: only windows whose pixels are all valid contribute.
double ssim(const Image& a, const Image& b, const std::vector<std::uint8_t>& valid);

/// 10 log10(1 / MSE); identical inputs report the 99 dB cap.
double psnr(const Image& a, const Image& b);
double psnr(const Image& a, const Image& b, const std::vector<std::uint8_t>& valid);

using DisparityPredictor = std::function<DisparityMap(const StereoSample&)>;

/// Predict, warp right into the left view, and score photometric similarity on
/// the in-bounds region. Set means are averages of per-pair values.
WarpReport evaluate_warping(const DisparityPredictor& predict,
                            const std::vector<StereoSample>& pairs);

/// Disparity evaluation with the rectification border rule: crops `crop_px`
/// columns from both sides of prediction and ground truth before scoring.
/// Scores all ground-truth-valid pixels (occlusions included). Pixel counts
/// are pooled across frames.
DisparityReport evaluate_test19(const DisparityPredictor& predict,
                                const std::vector<StereoSample>& samples, int crop_px = 100);

/// Depth evaluation for samples that carry a rig and ground-truth disparity:
/// ground-truth depth is recovered from disparity via the rig.
DepthReport evaluate_depth(const DisparityPredictor& predict,
                           const std::vector<StereoSample>& samples, bool use_cx_offset = false);

std::string report_to_json(const DisparityReport& r);
std::string report_to_json(const DepthReport& r);
std::string report_to_json(const WarpReport& r);

}  // namespace hsn
