#include "hsn/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "hsn/rng.hpp"

namespace hsn {
namespace {

/// Bilinearly interpolated random lattice, one octave.
class ValueNoise {
public:
    ValueNoise(Rng& rng, int h, int w, int spacing) : spacing_(spacing) {
        gh_ = h / spacing + 2;
        gw_ = w / spacing + 2;
        lattice_.resize(static_cast<std::size_t>(gh_) * gw_);
        for (auto& v : lattice_) v = static_cast<float>(rng.uniform(0.0, 1.0));
    }

    float at(int y, int x) const {
        const float fy = static_cast<float>(y) / spacing_;
        const float fx = static_cast<float>(x) / spacing_;
        const int y0 = static_cast<int>(fy), x0 = static_cast<int>(fx);
        const float ty = fy - y0, tx = fx - x0;
        auto l = [&](int yy, int xx) { return lattice_[static_cast<std::size_t>(yy) * gw_ + xx]; };
        return (1 - ty) * ((1 - tx) * l(y0, x0) + tx * l(y0, x0 + 1)) +
               ty * ((1 - tx) * l(y0 + 1, x0) + tx * l(y0 + 1, x0 + 1));
    }

private:
    int spacing_, gh_, gw_;
    std::vector<float> lattice_;
};

/// Small deterministic per-pixel jitter; keeps every tile textured.
float pixel_hash(std::uint64_t seed, int c, int y, int x) {
    std::uint64_t v = seed ^ (static_cast<std::uint64_t>(c) << 40) ^
                      (static_cast<std::uint64_t>(y) << 20) ^ static_cast<std::uint64_t>(x);
    v ^= v >> 33;
    v *= 0xff51afd7ed558ccdULL;
    v ^= v >> 33;
    v *= 0xc4ceb9fe1a85ec53ULL;
    v ^= v >> 33;
    return static_cast<float>(v % 10000) / 10000.0f;
}

Image make_texture(Rng& rng, std::uint64_t seed, int h, int w) {
    Image img(h, w, 3);
    for (int c = 0; c < 3; ++c) {
        ValueNoise coarse(rng, h, w, 11);
        ValueNoise fine(rng, h, w, 3);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                float v = 0.55f * coarse.at(y, x) + 0.3f * fine.at(y, x) +
                          0.15f * pixel_hash(seed, c, y, x);
                img.at(y, x, c) = std::clamp(v, 0.01f, 0.99f);
            }
    }
    return img;
}

struct PlaneSegment {
    // disparity plane d = base + gx * (x - cx) + gy * (y - cy) over an
    // axis-aligned ellipse (or the whole frame for the background layer)
    float base = 0, gx = 0, gy = 0;
    float cy = 0, cx = 0, ry = 1, rx = 1;
    bool full_frame = false;

    bool contains(int y, int x) const {
        if (full_frame) return true;
        const float dy = (y - cy) / ry, dx = (x - cx) / rx;
        return dy * dy + dx * dx <= 1.0f;
    }
};

DisparityMap make_disparity(Rng& rng, int h, int w, int dmax) {
    const int n_seg = rng.uniform_int(2, 5);
    std::vector<PlaneSegment> segs;
    for (int k = 0; k < n_seg; ++k) {
        PlaneSegment s;
        // front layers get higher disparity bands
        const float lo = dmax * static_cast<float>(k) / n_seg;
        const float hi = dmax * static_cast<float>(k + 1) / n_seg;
        s.base = static_cast<float>(rng.uniform(lo + 0.2 * (hi - lo), hi - 0.2 * (hi - lo)));
        s.gx = static_cast<float>(rng.uniform(-0.12, 0.12));
        s.gy = static_cast<float>(rng.uniform(-0.12, 0.12));
        if (k == 0) {
            s.full_frame = true;
            s.cy = h / 2.0f;
            s.cx = w / 2.0f;
        } else {
            s.cy = static_cast<float>(rng.uniform(0.15 * h, 0.85 * h));
            s.cx = static_cast<float>(rng.uniform(0.15 * w, 0.85 * w));
            s.ry = static_cast<float>(rng.uniform(0.12 * h, 0.4 * h));
            s.rx = static_cast<float>(rng.uniform(0.12 * w, 0.4 * w));
        }
        segs.push_back(s);
    }

    DisparityMap d(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            float v = 0.0f;
            for (const auto& s : segs)  // later segments are in front
                if (s.contains(y, x)) v = s.base + s.gx * (x - s.cx) + s.gy * (y - s.cy);
            const float q = std::round(std::clamp(v, 0.0f, static_cast<float>(dmax)));
            d.at(y, x) = q;
        }
    return d;
}

}  // namespace

std::vector<StereoSample> synth_generate(std::uint64_t seed, int h, int w, int dmax, int n) {
    if (h < 8 || w < 8 || n < 1) throw ArgumentError("synth_generate: bad dimensions");
    if (dmax < 1 || dmax >= w) throw ArgumentError("synth_generate: dmax must be in [1, w)");

    std::vector<StereoSample> samples;
    samples.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        Rng rng(seed * 1000003ULL + static_cast<std::uint64_t>(i));
        StereoSample s;
        s.id = "synth_" + std::to_string(seed) + "_" + std::to_string(i);
        s.left = make_texture(rng, seed + static_cast<std::uint64_t>(i), h, w);
        s.gt_disparity = make_disparity(rng, h, w, dmax);
        s.has_gt = true;

        // Forward-map the left texture into the right view; the nearest layer
        // (largest disparity) wins each right pixel, losers become occluded.
        s.right = Image(h, w, 3);
        s.occluded.assign(static_cast<std::size_t>(h) * w, 0);
        s.has_occlusion = true;
        std::vector<int> winner(static_cast<std::size_t>(w));
        for (int y = 0; y < h; ++y) {
            std::fill(winner.begin(), winner.end(), -1);
            for (int x = 0; x < w; ++x) {
                const int d = static_cast<int>(s.gt_disparity.at(y, x));
                const int xr = x - d;
                if (xr < 0) continue;
                if (winner[xr] < 0 ||
                    s.gt_disparity.at(y, winner[xr]) < s.gt_disparity.at(y, x))
                    winner[xr] = x;
            }
            for (int x = 0; x < w; ++x) {
                const int d = static_cast<int>(s.gt_disparity.at(y, x));
                const int xr = x - d;
                if (xr >= 0 && winner[xr] != x)
                    s.occluded[static_cast<std::size_t>(y) * w + x] = 1;
            }
            int last_filled = -1;
            for (int xr = 0; xr < w; ++xr) {
                if (winner[xr] >= 0) {
                    for (int c = 0; c < 3; ++c) s.right.at(y, xr, c) = s.left.at(y, winner[xr], c);
                    last_filled = xr;
                } else if (last_filled >= 0) {
                    for (int c = 0; c < 3; ++c) s.right.at(y, xr, c) = s.right.at(y, last_filled, c);
                }
            }
            // leading hole: backfill from the first filled pixel
            int first_filled = -1;
            for (int xr = 0; xr < w; ++xr)
                if (winner[xr] >= 0) { first_filled = xr; break; }
            if (first_filled > 0)
                for (int xr = 0; xr < first_filled; ++xr)
                    for (int c = 0; c < 3; ++c) s.right.at(y, xr, c) = s.right.at(y, first_filled, c);
        }

        s.rig.fx = 1050.0;
        s.rig.baseline_mm = 5.5;
        s.rig.cx_left = w / 2.0;
        s.rig.cx_right = w / 2.0;
        s.has_rig = true;
        samples.push_back(std::move(s));
    }
    return samples;
}

DatasetManifest write_synth_dataset(const std::vector<StereoSample>& samples,
                                    const std::string& root, const std::string& split) {
    std::filesystem::create_directories(root);
    DatasetManifest m;
    m.root = root;
    m.split = split;
    for (const auto& s : samples) m.samples.push_back(write_sample(s, root));
    write_manifest(m);
    return m;
}

}  // namespace hsn
