#include "hsn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

namespace hsn {
namespace {

void check_shapes(const MaskedMap& a, const MaskedMap& b, const char* who) {
    if (a.height != b.height || a.width != b.width)
        throw ArgumentError(std::string(who) + ": shape mismatch");
}

template <typename Fn>
void for_joint_valid(const MaskedMap& pred, const MaskedMap& gt, Fn&& fn) {
    for (std::size_t i = 0; i < pred.values.size(); ++i)
        if (pred.valid[i] && gt.valid[i]) fn(static_cast<double>(pred.values[i]) - gt.values[i]);
}

Image to_luma(const Image& img) {
    if (img.channels == 1) return img;
    Image g(img.height, img.width, 1);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            g.at(y, x, 0) = 0.299f * img.at(y, x, 0) + 0.587f * img.at(y, x, 1) +
                            0.114f * img.at(y, x, 2);
    return g;
}

constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;
constexpr double kPsnrCapDb = 99.0;

std::vector<double> gaussian_kernel_2d() {
    std::vector<double> k(kSsimWindow * kSsimWindow);
    const int r = kSsimWindow / 2;
    double sum = 0.0;
    for (int y = -r; y <= r; ++y)
        for (int x = -r; x <= r; ++x) {
            const double v = std::exp(-(y * y + x * x) / (2.0 * kSsimSigma * kSsimSigma));
            k[(y + r) * kSsimWindow + (x + r)] = v;
            sum += v;
        }
    for (auto& v : k) v /= sum;
    return k;
}

double ssim_impl(const Image& ai, const Image& bi, const std::vector<std::uint8_t>* valid) {
    if (ai.height != bi.height || ai.width != bi.width || ai.channels != bi.channels)
        throw ArgumentError("ssim: shape mismatch");
    if (ai.height < kSsimWindow || ai.width < kSsimWindow)
        throw ArgumentError("ssim: image smaller than the 11x11 window");
    const Image a = to_luma(ai), b = to_luma(bi);
    static const std::vector<double> kernel = gaussian_kernel_2d();
    const int r = kSsimWindow / 2;
    const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;  // (K L)^2 with L = 1

    double total = 0.0;
    std::int64_t n_windows = 0;
    for (int cy = r; cy < a.height - r; ++cy) {
        for (int cx = r; cx < a.width - r; ++cx) {
            if (valid) {
                bool ok = true;
                for (int dy = -r; ok && dy <= r; ++dy)
                    for (int dx = -r; dx <= r; ++dx)
                        if (!(*valid)[static_cast<std::size_t>(cy + dy) * a.width + (cx + dx)]) {
                            ok = false;
                            break;
                        }
                if (!ok) continue;
            }
            double mu_a = 0, mu_b = 0;
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx) {
                    const double w = kernel[(dy + r) * kSsimWindow + (dx + r)];
                    mu_a += w * a.at(cy + dy, cx + dx, 0);
                    mu_b += w * b.at(cy + dy, cx + dx, 0);
                }
            double var_a = 0, var_b = 0, cov = 0;
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx) {
                    const double w = kernel[(dy + r) * kSsimWindow + (dx + r)];
                    const double da = a.at(cy + dy, cx + dx, 0) - mu_a;
                    const double db = b.at(cy + dy, cx + dx, 0) - mu_b;
                    var_a += w * da * da;
                    var_b += w * db * db;
                    cov += w * da * db;
                }
            total += ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) /
                     ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
            ++n_windows;
        }
    }
    if (n_windows == 0) throw DataError("ssim: no valid window position");
    return total / n_windows;
}

double psnr_impl(const Image& a, const Image& b, const std::vector<std::uint8_t>* valid) {
    if (a.height != b.height || a.width != b.width || a.channels != b.channels)
        throw ArgumentError("psnr: shape mismatch");
    double se = 0.0;
    std::int64_t n = 0;
    for (int y = 0; y < a.height; ++y)
        for (int x = 0; x < a.width; ++x) {
            if (valid && !(*valid)[static_cast<std::size_t>(y) * a.width + x]) continue;
            for (int c = 0; c < a.channels; ++c) {
                const double d = static_cast<double>(a.at(y, x, c)) - b.at(y, x, c);
                se += d * d;
                ++n;
            }
        }
    if (n == 0) throw DataError("psnr: no valid pixel");
    const double mse = se / n;
    if (mse <= 0.0) return kPsnrCapDb;
    return std::min(kPsnrCapDb, 10.0 * std::log10(1.0 / mse));
}

}  // namespace

double epe(const DisparityMap& pred, const DisparityMap& gt) {
    check_shapes(pred, gt, "epe");
    double sum = 0.0;
    std::int64_t n = 0;
    for_joint_valid(pred, gt, [&](double e) {
        sum += std::abs(e);
        ++n;
    });
    return n ? sum / n : 0.0;
}

double rmse(const DisparityMap& pred, const DisparityMap& gt) {
    check_shapes(pred, gt, "rmse");
    double sum = 0.0;
    std::int64_t n = 0;
    for_joint_valid(pred, gt, [&](double e) {
        sum += e * e;
        ++n;
    });
    return n ? std::sqrt(sum / n) : 0.0;
}

double bad_ratio(const DisparityMap& pred, const DisparityMap& gt, double t) {
    check_shapes(pred, gt, "bad_ratio");
    std::int64_t n = 0, bad = 0;
    for_joint_valid(pred, gt, [&](double e) {
        ++n;
        if (std::abs(e) > t) ++bad;
    });
    return n ? 100.0 * bad / n : 0.0;
}

DisparityReport evaluate_disparity(const DisparityMap& pred, const DisparityMap& gt) {
    DisparityReport r;
    r.epe = epe(pred, gt);
    r.rmse = rmse(pred, gt);
    r.bad2 = bad_ratio(pred, gt, 2.0);
    r.bad3 = bad_ratio(pred, gt, 3.0);
    r.bad5 = bad_ratio(pred, gt, 5.0);
    for (std::size_t i = 0; i < pred.values.size(); ++i)
        if (pred.valid[i] && gt.valid[i]) ++r.n_pixels;
    return r;
}

double depth_mae(const DisparityMap& pred_disp, const DepthMap& gt_depth, const CameraRig& rig,
                 bool use_cx_offset) {
    check_shapes(pred_disp, gt_depth, "depth_mae");
    const DepthMap z = disparity_to_depth(pred_disp, rig, use_cx_offset);
    double sum = 0.0;
    std::int64_t n = 0;
    for (std::size_t i = 0; i < z.values.size(); ++i) {
        if (!z.valid[i] || !gt_depth.valid[i]) continue;
        sum += std::abs(static_cast<double>(z.values[i]) - gt_depth.values[i]);
        ++n;
    }
    return n ? sum / n : 0.0;
}

double ssim(const Image& a, const Image& b) { return ssim_impl(a, b, nullptr); }
double ssim(const Image& a, const Image& b, const std::vector<std::uint8_t>& valid) {
    return ssim_impl(a, b, &valid);
}

double psnr(const Image& a, const Image& b) { return psnr_impl(a, b, nullptr); }
double psnr(const Image& a, const Image& b, const std::vector<std::uint8_t>& valid) {
    return psnr_impl(a, b, &valid);
}

WarpReport evaluate_warping(const DisparityPredictor& predict,
                            const std::vector<StereoSample>& pairs) {
    WarpReport report;
    for (const auto& sample : pairs) {
        const DisparityMap d = predict(sample);
        auto [warped, mask] = warp_right_to_left(sample.right, d);
        WarpPairScore score;
        score.id = sample.id;
        score.ssim = ssim(sample.left, warped, mask);
        score.psnr = psnr(sample.left, warped, mask);
        report.per_pair.push_back(score);
    }
    if (report.per_pair.empty()) throw DataError("evaluate_warping: empty pair set");
    for (const auto& s : report.per_pair) {
        report.mean_ssim += s.ssim;
        report.mean_psnr += s.psnr;
    }
    report.mean_ssim /= static_cast<double>(report.per_pair.size());
    report.mean_psnr /= static_cast<double>(report.per_pair.size());
    return report;
}

DisparityReport evaluate_test19(const DisparityPredictor& predict,
                                const std::vector<StereoSample>& samples, int crop_px) {
    double abs_sum = 0.0, sq_sum = 0.0;
    std::int64_t n = 0, bad2 = 0, bad3 = 0, bad5 = 0;
    for (const auto& sample : samples) {
        if (!sample.has_gt) continue;
        DisparityMap pred = predict(sample);
        DisparityMap p = crop_borders(pred, crop_px, crop_px);
        DisparityMap g = crop_borders(sample.gt_disparity, crop_px, crop_px);
        for_joint_valid(p, g, [&](double e) {
            const double a = std::abs(e);
            abs_sum += a;
            sq_sum += e * e;
            ++n;
            if (a > 2.0) ++bad2;
            if (a > 3.0) ++bad3;
            if (a > 5.0) ++bad5;
        });
    }
    if (n == 0) throw DataError("evaluate_test19: no ground-truth pixels");
    DisparityReport r;
    r.epe = abs_sum / n;
    r.rmse = std::sqrt(sq_sum / n);
    r.bad2 = 100.0 * bad2 / n;
    r.bad3 = 100.0 * bad3 / n;
    r.bad5 = 100.0 * bad5 / n;
    r.n_pixels = n;
    return r;
}

DepthReport evaluate_depth(const DisparityPredictor& predict,
                           const std::vector<StereoSample>& samples, bool use_cx_offset) {
    DepthReport report;
    double sum = 0.0;
    std::int64_t frames = 0;
    for (const auto& sample : samples) {
        if (!sample.has_gt || !sample.has_rig) continue;
        const DepthMap gt_z = disparity_to_depth(sample.gt_disparity, sample.rig, use_cx_offset);
        const DisparityMap pred = predict(sample);
        const double mae = depth_mae(pred, gt_z, sample.rig, use_cx_offset);
        report.per_frame.emplace_back(sample.id, mae);
        sum += mae;
        ++frames;
        for (std::size_t i = 0; i < gt_z.values.size(); ++i)
            if (gt_z.valid[i]) ++report.n_pixels;
    }
    if (frames == 0) throw DataError("evaluate_depth: no sample with depth supervision");
    report.mae_mm = sum / frames;
    return report;
}

std::string report_to_json(const DisparityReport& r) {
    nlohmann::json j{{"epe", r.epe},   {"rmse", r.rmse}, {"bad2", r.bad2},
                     {"bad3", r.bad3}, {"bad5", r.bad5}, {"n_pixels", r.n_pixels}};
    return j.dump(2);
}

std::string report_to_json(const DepthReport& r) {
    nlohmann::json frames = nlohmann::json::array();
    for (const auto& [id, mae] : r.per_frame) frames.push_back({{"id", id}, {"mae_mm", mae}});
    nlohmann::json j{{"mae_mm", r.mae_mm}, {"n_pixels", r.n_pixels}, {"per_frame", frames}};
    return j.dump(2);
}

std::string report_to_json(const WarpReport& r) {
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& s : r.per_pair)
        pairs.push_back({{"id", s.id}, {"ssim", s.ssim}, {"psnr", s.psnr}});
    nlohmann::json j{{"mean_ssim", r.mean_ssim}, {"mean_psnr", r.mean_psnr}, {"per_pair", pairs}};
    return j.dump(2);
}

}  // namespace hsn
