#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hsn/cost_volume.hpp"
#include "hsn/image.hpp"
#include "hsn/nn/conv.hpp"
#include "hsn/nn/groupnorm.hpp"
#include "hsn/nn/patches.hpp"
#include "hsn/nn/transformer.hpp"

namespace hsn {

enum class NetKind { CNN, Transformer };

/// The four pipeline variants: which half is a transformer.
enum class Variant { Baseline, TypeI, TypeII, TypeIII };

inline Variant parse_variant(const std::string& s) {
    if (s == "baseline") return Variant::Baseline;
    if (s == "type1") return Variant::TypeI;
    if (s == "type2") return Variant::TypeII;
    if (s == "type3") return Variant::TypeIII;
    throw ConfigError("unknown variant: " + s);
}

inline std::string variant_name(Variant v) {
    switch (v) {
        case Variant::Baseline: return "baseline";
        case Variant::TypeI: return "type1";
        case Variant::TypeII: return "type2";
        case Variant::TypeIII: return "type3";
    }
    return "baseline";
}

inline NetKind feature_kind(Variant v) {
    return (v == Variant::TypeI || v == Variant::TypeIII) ? NetKind::Transformer : NetKind::CNN;
}
inline NetKind match_kind(Variant v) {
    return (v == Variant::TypeII || v == Variant::TypeIII) ? NetKind::Transformer : NetKind::CNN;
}

/// Architecture hyperparameters. Defaults give the reference configuration:
/// 6-layer feature nets at 32 channels, 12-block matching nets in a 3-stage
/// stride-2 U-shape, 1/3-resolution cost volume.
struct ModelConfig {
    Variant variant = Variant::TypeI;
    int in_channels = 3;
    int feature_channels = 32;  // C, embedding width of the feature nets
    int feature_blocks = 6;     // L^F
    int match_channels = 32;    // base width of the matching nets
    int match_stages = 3;       // stride-2 stages in the U-shape
    int blocks_per_stage = 2;   // L^M = 2 * match_stages * blocks_per_stage
    int dmax = 192;             // disparity search range, pixels
    int window2d = 7;
    int window3d = 4;
    int mlp_ratio = 4;
    std::uint64_t seed = 0;

    int d_bins() const { return dmax / 3; }
    int stage_multiple() const { return 1 << match_stages; }
    /// Image dims are padded to this multiple so every stage divides evenly.
    int pad_multiple() const { return 3 * stage_multiple(); }

    void validate() const {
        if (in_channels != 1 && in_channels != 3) throw ConfigError("in_channels must be 1 or 3");
        if (feature_channels < 1 || match_channels < 2) throw ConfigError("bad channel config");
        if (feature_blocks < 1 || match_stages < 1 || blocks_per_stage < 1)
            throw ConfigError("bad depth config");
        if (dmax < 3) throw ConfigError("dmax must be >= 3");
        if (window2d < 1 || window3d < 1) throw ConfigError("bad window config");
    }
};

inline int head_count(int channels) { return std::max(1, channels / 32); }

/// Plain residual conv stack: entry conv, stride-3 conv, then residual 3x3
/// layers; 1/3-resolution output at `channels` width.
template <typename T>
class CFeatureNet {
public:
    CFeatureNet() = default;

    CFeatureNet(int in_ch, int channels, int layers, Rng& rng) : layers_(layers) {
        if (layers < 2) throw ConfigError("CFeatureNet: needs >= 2 layers");
        convs.emplace_back(in_ch, channels, 3, 1, 1, true, rng);
        norms.emplace_back(channels);
        convs.emplace_back(channels, channels, 3, 3, 1, true, rng);
        norms.emplace_back(channels);
        for (int i = 2; i < layers; ++i) {
            convs.emplace_back(channels, channels, 3, 1, 1, true, rng);
            norms.emplace_back(channels);
        }
        relus.resize(layers);
    }

    /// [in_ch, h, w] -> [channels, h/3, w/3] (dims divisible by 3).
    Tensor<T> forward(const Tensor<T>& x) {
        Tensor<T> t = x;
        for (int i = 0; i < layers_; ++i) {
            Tensor<T> inp = t;
            t = norms[i].forward(convs[i].forward(t));
            if (i >= 2) t.add_(inp);
            t = relus[i].forward(t);
        }
        return t;
    }

    Tensor<T> backward(const Tensor<T>& gy) {
        Tensor<T> g = gy;
        for (int i = layers_ - 1; i >= 0; --i) {
            g = relus[i].backward(g);
            if (i >= 2) {
                Tensor<T> gskip = g;
                g = convs[i].backward(norms[i].backward(g));
                g.add_(gskip);
            } else {
                g = convs[i].backward(norms[i].backward(g));
            }
        }
        return g;
    }

    void collect(nn::ParamRegistry<T>& reg, const std::string& prefix) const {
        for (int i = 0; i < layers_; ++i) {
            convs[i].collect(reg, prefix + ".conv" + std::to_string(i));
            norms[i].collect(reg, prefix + ".norm" + std::to_string(i));
        }
    }

    std::vector<nn::Conv2d<T>> convs;
    std::vector<nn::GroupNorm1<T>> norms;
    std::vector<nn::Relu<T>> relus;

private:
    int layers_ = 0;
};

/// 3x3 patch embedding followed by windowed transformer blocks with
/// alternating shifts; 1/3-resolution tokens at `channels` width.
template <typename T>
class TFeatureNet {
public:
    TFeatureNet() = default;

    TFeatureNet(int in_ch, int channels, int blocks, int window, int mlp_ratio, Rng& rng)
        : embed(in_ch, 3, channels, rng) {
        for (int i = 0; i < blocks; ++i) {
            nn::BlockConfig cfg;
            cfg.window = {1, window, window};
            const int s = window / 2;
            cfg.shift = (i % 2 == 1 && s > 0) ? nn::Dims3{0, s, s} : nn::Dims3{0, 0, 0};
            cfg.mlp_ratio = mlp_ratio;
            cfg.heads = head_count(channels);
            blocks_.emplace_back(channels, cfg, rng);
        }
    }

    /// [in_ch, h, w] -> [channels, h/3, w/3].
    Tensor<T> forward(const Tensor<T>& x) {
        Tensor<T> grid = embed.forward(x);
        for (auto& b : blocks_) grid = b.forward(grid);
        return nn::grid_to_chw(grid);
    }

    Tensor<T> backward(const Tensor<T>& gy) {
        Tensor<T> g = nn::chw_to_grid(gy);
        for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it) g = it->backward(g);
        return embed.backward(g);
    }

    void collect(nn::ParamRegistry<T>& reg, const std::string& prefix) const {
        embed.collect(reg, prefix + ".embed");
        for (std::size_t i = 0; i < blocks_.size(); ++i)
            blocks_[i].collect(reg, prefix + ".block" + std::to_string(i));
    }

    nn::PatchEmbed2D<T> embed;
    std::vector<nn::TransformerBlock<T>>& blocks() { return blocks_; }

private:
    std::vector<nn::TransformerBlock<T>> blocks_;
};

/// One CNN matching block: x + GN(conv3d(x)), rectified.
template <typename T>
class ConvBlock3D {
public:
    ConvBlock3D() = default;
    ConvBlock3D(int channels, Rng& rng) : conv(channels, channels, 3, 1, 1, true, rng), norm(channels) {}

    Tensor<T> forward(const Tensor<T>& x) {
        Tensor<T> t = norm.forward(conv.forward(x));
        t.add_(x);
        return relu.forward(t);
    }

    Tensor<T> backward(const Tensor<T>& gy) {
        Tensor<T> g = relu.backward(gy);
        Tensor<T> gx = conv.backward(norm.backward(g));
        gx.add_(g);
        return gx;
    }

    void collect(nn::ParamRegistry<T>& reg, const std::string& prefix) const {
        conv.collect(reg, prefix + ".conv");
        norm.collect(reg, prefix + ".norm");
    }

    nn::Conv3d<T> conv;
    nn::GroupNorm1<T> norm;
    nn::Relu<T> relu;
};

/// U-shaped CNN cost aggregation over [2c_f, d, h, w]: entry embed conv, three
/// encoder stages with stride-2 downsampling (channels double), mirrored
/// decoder stages with additive skips, 1-channel head.
template <typename T>
class CMatchNet {
public:
    CMatchNet() = default;

    CMatchNet(int in_ch, int channels, int stages, int blocks_per_stage, Rng& rng)
        : stages_(stages), bps_(blocks_per_stage) {
        entry = nn::Conv3d<T>(in_ch, channels, 3, 1, 1, true, rng);
        entry_norm = nn::GroupNorm1<T>(channels);
        int ch = channels;
        for (int s = 0; s < stages; ++s) {
            for (int b = 0; b < blocks_per_stage; ++b) enc_blocks.emplace_back(ch, rng);
            downs.emplace_back(ch, 2 * ch, 3, 2, 1, true, rng);
            ch *= 2;
        }
        for (int s = stages - 1; s >= 0; --s) {
            ups.emplace_back(ch, ch / 2, 1, 1, 0, true, rng);
            ch /= 2;
            for (int b = 0; b < blocks_per_stage; ++b) dec_blocks.emplace_back(ch, rng);
        }
        head = nn::Conv3d<T>(channels, 1, 3, 1, 1, true, rng);
    }

    /// [in_ch, d, h, w] -> cost [d, h, w]; d, h, w divisible by 2^stages.
    Tensor<T> forward(const Tensor<T>& vol) {
        const int mult = 1 << stages_;
        if (vol.size(1) % mult || vol.size(2) % mult || vol.size(3) % mult)
            throw ArgumentError("CMatchNet: dims must be divisible by 2^stages");
        Tensor<T> t = entry_relu.forward(entry_norm.forward(entry.forward(vol)));
        skips_.clear();
        for (int s = 0; s < stages_; ++s) {
            for (int b = 0; b < bps_; ++b) t = enc_blocks[s * bps_ + b].forward(t);
            skips_.push_back(t);
            t = downs[s].forward(t);
        }
        for (int s = 0; s < stages_; ++s) {
            t = upsample_nearest(t);
            t = ups[s].forward(t);
            t.add_(skips_[stages_ - 1 - s]);
            for (int b = 0; b < bps_; ++b) t = dec_blocks[s * bps_ + b].forward(t);
        }
        Tensor<T> cost = head.forward(t);
        cost.reshape({cost.size(1), cost.size(2), cost.size(3)});
        return cost;
    }

    Tensor<T> backward(const Tensor<T>& gcost) {
        Tensor<T> g = gcost;
        g.reshape({1, gcost.size(0), gcost.size(1), gcost.size(2)});
        g = head.backward(g);
        std::vector<Tensor<T>> gskips(static_cast<std::size_t>(stages_));
        for (int s = stages_ - 1; s >= 0; --s) {
            for (int b = bps_ - 1; b >= 0; --b) g = dec_blocks[s * bps_ + b].backward(g);
            gskips[static_cast<std::size_t>(stages_ - 1 - s)] = g;
            g = ups[s].backward(g);
            g = upsample_nearest_backward(g);
        }
        for (int s = stages_ - 1; s >= 0; --s) {
            g = downs[s].backward(g);
            g.add_(gskips[static_cast<std::size_t>(s)]);
            for (int b = bps_ - 1; b >= 0; --b) g = enc_blocks[s * bps_ + b].backward(g);
        }
        return entry.backward(entry_norm.backward(entry_relu.backward(g)));
    }

    void collect(nn::ParamRegistry<T>& reg, const std::string& prefix) const {
        entry.collect(reg, prefix + ".entry");
        entry_norm.collect(reg, prefix + ".entry_norm");
        for (int s = 0; s < stages_; ++s) {
            for (int b = 0; b < bps_; ++b)
                enc_blocks[s * bps_ + b].collect(
                    reg, prefix + ".enc" + std::to_string(s) + ".block" + std::to_string(b));
            downs[s].collect(reg, prefix + ".down" + std::to_string(s));
        }
        for (int s = 0; s < stages_; ++s) {
            ups[s].collect(reg, prefix + ".up" + std::to_string(s));
            for (int b = 0; b < bps_; ++b)
                dec_blocks[s * bps_ + b].collect(
                    reg, prefix + ".dec" + std::to_string(s) + ".block" + std::to_string(b));
        }
        head.collect(reg, prefix + ".head");
    }

    nn::Conv3d<T> entry, head;
    nn::GroupNorm1<T> entry_norm;
    nn::Relu<T> entry_relu;
    std::vector<ConvBlock3D<T>> enc_blocks, dec_blocks;
    std::vector<nn::Conv3d<T>> downs, ups;

private:
    static Tensor<T> upsample_nearest(const Tensor<T>& x) {
        const int c = x.size(0), d = x.size(1), h = x.size(2), w = x.size(3);
        Tensor<T> y({c, 2 * d, 2 * h, 2 * w});
        for (int ch = 0; ch < c; ++ch)
            for (int z = 0; z < 2 * d; ++z)
                for (int yy = 0; yy < 2 * h; ++yy)
                    for (int xx = 0; xx < 2 * w; ++xx)
                        y(ch, z, yy, xx) = x(ch, z / 2, yy / 2, xx / 2);
        return y;
    }

    static Tensor<T> upsample_nearest_backward(const Tensor<T>& gy) {
        const int c = gy.size(0), d = gy.size(1) / 2, h = gy.size(2) / 2, w = gy.size(3) / 2;
        Tensor<T> gx({c, d, h, w});
        for (int ch = 0; ch < c; ++ch)
            for (int z = 0; z < 2 * d; ++z)
                for (int yy = 0; yy < 2 * h; ++yy)
                    for (int xx = 0; xx < 2 * w; ++xx)
                        gx(ch, z / 2, yy / 2, xx / 2) += gy(ch, z, yy, xx);
        return gx;
    }

    int stages_ = 0, bps_ = 0;
    std::vector<Tensor<T>> skips_;
};

/// U-shaped 3D transformer cost aggregation: pointwise patch embedding, window
/// attention blocks per stage, stride-2 patch merging that halves d, h and w
/// together, mirrored expansion with additive skips, linear head.
template <typename T>
class TMatchNet {
public:
    TMatchNet() = default;

    TMatchNet(int in_ch, int channels, int stages, int blocks_per_stage, int window, int mlp_ratio,
              Rng& rng)
        : stages_(stages), bps_(blocks_per_stage), base_ch_(channels) {
        embed = nn::PatchEmbed3D<T>(in_ch, channels, rng);
        int ch = channels;
        for (int s = 0; s < stages; ++s) {
            for (int b = 0; b < blocks_per_stage; ++b)
                enc_blocks.emplace_back(ch, block_cfg(ch, window, mlp_ratio, b), rng);
            merges.emplace_back(ch, rng);
            ch *= 2;
        }
        for (int s = stages - 1; s >= 0; --s) {
            expands.emplace_back(ch, rng);
            ch /= 2;
            for (int b = 0; b < blocks_per_stage; ++b)
                dec_blocks.emplace_back(ch, block_cfg(ch, window, mlp_ratio, b), rng);
        }
        head = nn::Linear<T>(channels, 1, true, rng);
    }

    Tensor<T> forward(const Tensor<T>& vol) {
        const int mult = 1 << stages_;
        if (vol.size(1) % mult || vol.size(2) % mult || vol.size(3) % mult)
            throw ArgumentError("TMatchNet: dims must be divisible by 2^stages");
        Tensor<T> t = embed.forward(vol);
        skips_.clear();
        for (int s = 0; s < stages_; ++s) {
            for (int b = 0; b < bps_; ++b) t = enc_blocks[s * bps_ + b].forward(t);
            skips_.push_back(t);
            t = merges[s].forward(t);
        }
        for (int s = 0; s < stages_; ++s) {
            t = expands[s].forward(t);
            t.add_(skips_[stages_ - 1 - s]);
            for (int b = 0; b < bps_; ++b) t = dec_blocks[s * bps_ + b].forward(t);
        }
        out_dims_ = nn::grid_dims(t);
        Tensor<T> cost = head.forward(t);
        cost.reshape({out_dims_.d, out_dims_.h, out_dims_.w});
        return cost;
    }

    Tensor<T> backward(const Tensor<T>& gcost) {
        Tensor<T> g = gcost;
        g.reshape({static_cast<int>(out_dims_.volume()), 1});
        g = head.backward(g);
        g.reshape({out_dims_.d, out_dims_.h, out_dims_.w, base_ch_});
        std::vector<Tensor<T>> gskips(static_cast<std::size_t>(stages_));
        for (int s = stages_ - 1; s >= 0; --s) {
            for (int b = bps_ - 1; b >= 0; --b) g = dec_blocks[s * bps_ + b].backward(g);
            gskips[static_cast<std::size_t>(stages_ - 1 - s)] = g;
            g = expands[s].backward(g);
        }
        for (int s = stages_ - 1; s >= 0; --s) {
            g = merges[s].backward(g);
            g.add_(gskips[static_cast<std::size_t>(s)]);
            for (int b = bps_ - 1; b >= 0; --b) g = enc_blocks[s * bps_ + b].backward(g);
        }
        return embed.backward(g);
    }

    void collect(nn::ParamRegistry<T>& reg, const std::string& prefix) const {
        embed.collect(reg, prefix + ".embed");
        for (int s = 0; s < stages_; ++s) {
            for (int b = 0; b < bps_; ++b)
                enc_blocks[s * bps_ + b].collect(
                    reg, prefix + ".enc" + std::to_string(s) + ".block" + std::to_string(b));
            merges[s].collect(reg, prefix + ".down" + std::to_string(s));
        }
        for (int s = 0; s < stages_; ++s) {
            expands[s].collect(reg, prefix + ".up" + std::to_string(s));
            for (int b = 0; b < bps_; ++b)
                dec_blocks[s * bps_ + b].collect(
                    reg, prefix + ".dec" + std::to_string(s) + ".block" + std::to_string(b));
        }
        head.collect(reg, prefix + ".head");
    }

    nn::PatchEmbed3D<T> embed;
    nn::Linear<T> head;
    std::vector<nn::TransformerBlock<T>> enc_blocks, dec_blocks;
    std::vector<nn::PatchMerge3D<T>> merges;
    std::vector<nn::PatchExpand3D<T>> expands;

private:
    static nn::BlockConfig block_cfg(int ch, int window, int mlp_ratio, int block_index) {
        nn::BlockConfig cfg;
        cfg.window = {window, window, window};
        const int s = window / 2;
        cfg.shift = (block_index % 2 == 1 && s > 0) ? nn::Dims3{s, s, s} : nn::Dims3{0, 0, 0};
        cfg.mlp_ratio = mlp_ratio;
        cfg.heads = head_count(ch);
        return cfg;
    }

    int stages_ = 0, bps_ = 0, base_ch_ = 0;
    nn::Dims3 out_dims_;
    std::vector<Tensor<T>> skips_;
};

/// Full pipeline: Siamese feature extraction, concatenation volume, cost
/// aggregation, soft-argmin projection, x3 bilinear upsampling. The right
/// branch is a copy sharing the left branch's parameters.
template <typename T>
class StereoModel {
public:
    explicit StereoModel(const ModelConfig& cfg) : cfg_(cfg), upsampler_(3) {
        cfg_.validate();
        Rng rng(cfg.seed);
        if (feature_kind(cfg.variant) == NetKind::CNN) {
            cfeat_.emplace(cfg.in_channels, cfg.feature_channels, cfg.feature_blocks, rng);
            cfeat_right_ = cfeat_;
        } else {
            tfeat_.emplace(cfg.in_channels, cfg.feature_channels, cfg.feature_blocks, cfg.window2d,
                           cfg.mlp_ratio, rng);
            tfeat_right_ = tfeat_;
        }
        if (match_kind(cfg.variant) == NetKind::CNN) {
            cmatch_.emplace(2 * cfg.feature_channels, cfg.match_channels, cfg.match_stages,
                            cfg.blocks_per_stage, rng);
        } else {
            tmatch_.emplace(2 * cfg.feature_channels, cfg.match_channels, cfg.match_stages,
                            cfg.blocks_per_stage, cfg.window3d, cfg.mlp_ratio, rng);
        }
        build_registry();
    }

    const ModelConfig& config() const { return cfg_; }
    nn::ParamRegistry<T>& registry() { return registry_; }
    const nn::ParamRegistry<T>& registry() const { return registry_; }

    std::int64_t count_parameters() const { return registry_.total_count(); }
    void zero_grad() { registry_.zero_grad(); }

    /// Differentiable forward: [in_ch, h, w] images -> full-resolution disparity [h, w].
    Tensor<T> forward(const Tensor<T>& left, const Tensor<T>& right) {
        if (!(left.same_shape(right))) throw ArgumentError("StereoModel: left/right shape mismatch");
        h_ = left.size(1);
        w_ = left.size(2);
        const int mult = cfg_.pad_multiple();
        hp_ = nn::round_up(h_, mult);
        wp_ = nn::round_up(w_, mult);
        if (hp_ - h_ > h_ - 1 || wp_ - w_ > w_ - 1)
            throw ArgumentError("StereoModel: input too small to pad");

        Tensor<T> lp = reflect_pad(left), rp = reflect_pad(right);
        Tensor<T> fl = feat_forward(false, lp);
        Tensor<T> fr = feat_forward(true, rp);

        const int dbins = cfg_.d_bins();
        dpad_ = nn::round_up(dbins, cfg_.stage_multiple());
        Tensor<T> vol = build_feature_volume(fl, fr, dbins);
        if (dpad_ != dbins) vol = pad_depth_axis(vol, dpad_);

        Tensor<T> cost = match_forward(vol);
        if (dpad_ != dbins) cost = crop_depth(cost, dbins);

        Tensor<T> coarse = softargmax_.forward(cost);
        Tensor<T> full = upsampler_.forward(coarse);
        return crop_full(full);
    }

    /// Backward from a full-resolution disparity gradient. Accumulates into
    /// parameter gradients; input image gradients are not propagated.
    void backward(const Tensor<T>& gpred) {
        Tensor<T> gfull({hp_, wp_});
        for (int y = 0; y < h_; ++y)
            for (int x = 0; x < w_; ++x) gfull(y, x) = gpred(y, x);
        Tensor<T> gcoarse = upsampler_.backward(gfull);
        Tensor<T> gcost = softargmax_.backward(gcoarse);
        const int dbins = cfg_.d_bins();
        if (dpad_ != dbins) gcost = pad_cost_depth(gcost, dpad_);
        Tensor<T> gvol = match_backward(gcost);
        if (dpad_ != dbins) gvol = crop_vol_depth(gvol, dbins);
        Tensor<T> gfl, gfr;
        build_feature_volume_backward(gvol, cfg_.feature_channels, gfl, gfr);
        feat_backward(true, gfr);
        feat_backward(false, gfl);
    }

    /// Image-level inference.
    DisparityMap predict(const Image& left, const Image& right) {
        Tensor<T> lt = image_to_tensor(left), rt = image_to_tensor(right);
        Tensor<T> pred = forward(lt, rt);
        DisparityMap d(h_, w_);
        for (int y = 0; y < h_; ++y)
            for (int x = 0; x < w_; ++x) d.at(y, x) = static_cast<float>(pred(y, x));
        return d;
    }

    /// Replicates grayscale into the configured input channel count.
    Tensor<T> image_to_tensor(const Image& img) const {
        Tensor<T> t({cfg_.in_channels, img.height, img.width});
        for (int c = 0; c < cfg_.in_channels; ++c) {
            const int src = (img.channels == cfg_.in_channels) ? c : 0;
            for (int y = 0; y < img.height; ++y)
                for (int x = 0; x < img.width; ++x)
                    t(c, y, x) = static_cast<T>(img.at(y, x, src));
        }
        return t;
    }

    std::optional<CFeatureNet<T>>& cfeature() { return cfeat_; }
    std::optional<TFeatureNet<T>>& tfeature() { return tfeat_; }
    std::optional<CMatchNet<T>>& cmatch() { return cmatch_; }
    std::optional<TMatchNet<T>>& tmatch() { return tmatch_; }

private:
    void build_registry() {
        if (cfeat_) cfeat_->collect(registry_, "feature");
        if (tfeat_) tfeat_->collect(registry_, "feature");
        if (cmatch_) cmatch_->collect(registry_, "match");
        if (tmatch_) tmatch_->collect(registry_, "match");
    }

    Tensor<T> feat_forward(bool right, const Tensor<T>& x) {
        if (cfeat_) return right ? cfeat_right_->forward(x) : cfeat_->forward(x);
        return right ? tfeat_right_->forward(x) : tfeat_->forward(x);
    }
    void feat_backward(bool right, const Tensor<T>& g) {
        if (cfeat_) {
            if (right) cfeat_right_->backward(g);
            else cfeat_->backward(g);
        } else {
            if (right) tfeat_right_->backward(g);
            else tfeat_->backward(g);
        }
    }

    Tensor<T> match_forward(const Tensor<T>& vol) {
        return cmatch_ ? cmatch_->forward(vol) : tmatch_->forward(vol);
    }
    Tensor<T> match_backward(const Tensor<T>& gcost) {
        return cmatch_ ? cmatch_->backward(gcost) : tmatch_->backward(gcost);
    }

    Tensor<T> reflect_pad(const Tensor<T>& x) const {
        if (hp_ == h_ && wp_ == w_) return x;
        const int c = x.size(0);
        Tensor<T> xp({c, hp_, wp_});
        auto src = [](int i, int n) { return i < n ? i : 2 * n - 2 - i; };
        for (int ch = 0; ch < c; ++ch)
            for (int y = 0; y < hp_; ++y)
                for (int x2 = 0; x2 < wp_; ++x2) xp(ch, y, x2) = x(ch, src(y, h_), src(x2, w_));
        return xp;
    }

    static Tensor<T> pad_depth_axis(const Tensor<T>& vol, int dpad) {
        const int c = vol.size(0), d = vol.size(1), h = vol.size(2), w = vol.size(3);
        Tensor<T> out({c, dpad, h, w});
        for (int ch = 0; ch < c; ++ch)
            for (int z = 0; z < d; ++z)
                for (int y = 0; y < h; ++y)
                    for (int x = 0; x < w; ++x) out(ch, z, y, x) = vol(ch, z, y, x);
        return out;
    }

    static Tensor<T> crop_vol_depth(const Tensor<T>& vol, int dbins) {
        const int c = vol.size(0), h = vol.size(2), w = vol.size(3);
        Tensor<T> out({c, dbins, h, w});
        for (int ch = 0; ch < c; ++ch)
            for (int z = 0; z < dbins; ++z)
                for (int y = 0; y < h; ++y)
                    for (int x = 0; x < w; ++x) out(ch, z, y, x) = vol(ch, z, y, x);
        return out;
    }

    static Tensor<T> crop_depth(const Tensor<T>& cost, int dbins) {
        const int h = cost.size(1), w = cost.size(2);
        Tensor<T> out({dbins, h, w});
        for (int z = 0; z < dbins; ++z)
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) out(z, y, x) = cost(z, y, x);
        return out;
    }

    static Tensor<T> pad_cost_depth(const Tensor<T>& gcost, int dpad) {
        const int d = gcost.size(0), h = gcost.size(1), w = gcost.size(2);
        Tensor<T> out({dpad, h, w});
        for (int z = 0; z < d; ++z)
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) out(z, y, x) = gcost(z, y, x);
        return out;
    }

    Tensor<T> crop_full(const Tensor<T>& full) const {
        if (hp_ == h_ && wp_ == w_) return full;
        Tensor<T> out({h_, w_});
        for (int y = 0; y < h_; ++y)
            for (int x = 0; x < w_; ++x) out(y, x) = full(y, x);
        return out;
    }

    ModelConfig cfg_;
    nn::ParamRegistry<T> registry_;

    std::optional<CFeatureNet<T>> cfeat_, cfeat_right_;
    std::optional<TFeatureNet<T>> tfeat_, tfeat_right_;
    std::optional<CMatchNet<T>> cmatch_;
    std::optional<TMatchNet<T>> tmatch_;

    SoftArgmax<T> softargmax_;
    DisparityUpsampler<T> upsampler_;
    int h_ = 0, w_ = 0, hp_ = 0, wp_ = 0, dpad_ = 0;
};

using StereoModelF = StereoModel<float>;

}  // namespace hsn
