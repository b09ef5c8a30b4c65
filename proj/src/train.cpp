#include "hsn/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numeric>

#include "hsn/io/checkpoint.hpp"
#include "hsn/loss.hpp"

namespace fs = std::filesystem;

namespace hsn {
namespace {

Tensor<float> gt_tensor(const DisparityMap& gt) {
    Tensor<float> t({gt.height, gt.width});
    for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = gt.values[static_cast<std::size_t>(i)];
    return t;
}

/// Forward + loss for one sample; returns loss and (optionally) runs backward.
double sample_loss(StereoModelF& model, const StereoSample& s, bool with_grad, double grad_scale) {
    if (!s.has_gt) throw DataError("train: sample " + s.id + " has no ground truth");
    Tensor<float> lt = model.image_to_tensor(s.left);
    Tensor<float> rt = model.image_to_tensor(s.right);
    Tensor<float> pred = model.forward(lt, rt);
    SmoothL1<float> loss_fn;
    const float loss = loss_fn.forward(pred, gt_tensor(s.gt_disparity), s.gt_disparity.valid);
    if (with_grad) model.backward(loss_fn.backward(static_cast<float>(grad_scale)));
    return loss;
}

}  // namespace

StereoSample random_crop_pair(const StereoSample& sample, int crop, Rng& rng) {
    const int h = sample.left.height, w = sample.left.width;
    if (crop > h || crop > w) throw ArgumentError("random_crop_pair: crop exceeds image dims");
    if (crop == h && crop == w) return sample;
    const int oy = rng.uniform_int(0, h - crop);
    const int ox = rng.uniform_int(0, w - crop);

    StereoSample out;
    out.id = sample.id;
    out.has_gt = sample.has_gt;
    out.has_rig = sample.has_rig;
    out.rig = sample.rig;
    out.left = Image(crop, crop, sample.left.channels);
    out.right = Image(crop, crop, sample.right.channels);
    for (int y = 0; y < crop; ++y)
        for (int x = 0; x < crop; ++x) {
            for (int c = 0; c < sample.left.channels; ++c) {
                out.left.at(y, x, c) = sample.left.at(oy + y, ox + x, c);
                out.right.at(y, x, c) = sample.right.at(oy + y, ox + x, c);
            }
        }
    if (sample.has_gt) {
        out.gt_disparity = DisparityMap(crop, crop);
        for (int y = 0; y < crop; ++y)
            for (int x = 0; x < crop; ++x) {
                out.gt_disparity.at(y, x) = sample.gt_disparity.at(oy + y, ox + x);
                out.gt_disparity.set_valid(y, x, sample.gt_disparity.is_valid(oy + y, ox + x));
            }
    }
    if (sample.has_occlusion) {
        out.has_occlusion = true;
        out.occluded.assign(static_cast<std::size_t>(crop) * crop, 0);
        for (int y = 0; y < crop; ++y)
            for (int x = 0; x < crop; ++x)
                out.occluded[static_cast<std::size_t>(y) * crop + x] =
                    sample.occluded[static_cast<std::size_t>(oy + y) * w + (ox + x)];
    }
    return out;
}

double batch_loss(StereoModelF& model, const std::vector<StereoSample>& batch) {
    if (batch.empty()) throw ArgumentError("batch_loss: empty batch");
    double sum = 0.0;
    for (const auto& s : batch) sum += sample_loss(model, s, false, 0.0);
    return sum / static_cast<double>(batch.size());
}

TrainResult train(StereoModelF& model, const std::vector<StereoSample>& dataset,
                  const TrainConfig& cfg) {
    cfg.validate();
    if (dataset.empty()) throw DataError("train: empty dataset");
    for (const auto& s : dataset)
        if (!s.has_gt) throw DataError("train: sample " + s.id + " has no ground truth");

    const int crop =
        std::min({cfg.crop, dataset.front().left.height, dataset.front().left.width});
    Rng rng(cfg.seed);
    SgdOptimizer<float> opt(model.registry(), cfg.momentum, cfg.weight_decay);

    TrainResult result;
    auto snapshot = [&](int epoch, double loss) {
        ParameterSnapshot snap;
        snap.epoch = epoch;
        snap.theta = model.registry().flatten_values();
        snap.loss = loss;
        result.snapshots.push_back(std::move(snap));
    };

    // epoch-0 snapshot: untouched parameters, loss on deterministic crops
    {
        Rng eval_rng(cfg.seed);
        std::vector<StereoSample> eval_batch;
        for (const auto& s : dataset) eval_batch.push_back(random_crop_pair(s, crop, eval_rng));
        snapshot(0, batch_loss(model, eval_batch));
    }

    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const double lr = cosine_lr(epoch - 1, cfg.epochs, cfg.lr_max, cfg.lr_min);
        std::shuffle(order.begin(), order.end(), rng.engine());

        double epoch_loss = 0.0;
        int n_batches = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            const int bs = static_cast<int>(end - start);
            model.zero_grad();
            double batch_sum = 0.0;
            for (std::size_t bi = start; bi < end; ++bi) {
                StereoSample cropped = random_crop_pair(dataset[order[bi]], crop, rng);
                batch_sum += sample_loss(model, cropped, true, 1.0 / bs);
            }
            const double mean = batch_sum / bs;
            if (!std::isfinite(mean)) {
                char msg[160];
                std::snprintf(msg, sizeof(msg),
                              "train: non-finite loss at epoch %d batch %d lr %.6f", epoch,
                              n_batches, lr);
                throw NumericError(msg);
            }
            opt.step(lr);
            epoch_loss += mean;
            ++n_batches;
        }
        epoch_loss /= n_batches;
        result.loss_curve.push_back(epoch_loss);
        snapshot(epoch, epoch_loss);
    }
    return result;
}

TrainResult train_run(StereoModelF& model, const std::vector<StereoSample>& dataset,
                      const TrainConfig& cfg, const std::string& run_dir) {
    fs::create_directories(run_dir);
    TrainResult result = train(model, dataset, cfg);

    // snapshots are saved by reloading each theta into the model; the final
    // snapshot equals the trained parameters, so the model state is preserved.
    for (const auto& snap : result.snapshots) {
        model.registry().load_flat(snap.theta);
        char name[32];
        std::snprintf(name, sizeof(name), "epoch_%04d", snap.epoch);
        nlohmann::json extra{{"epoch", snap.epoch}, {"loss", snap.loss}};
        save_checkpoint(model, (fs::path(run_dir) / name).string(), extra.dump());
    }

    nlohmann::json manifest{
        {"config",
         {{"epochs", cfg.epochs},
          {"batch_size", cfg.batch_size},
          {"lr_max", cfg.lr_max},
          {"lr_min", cfg.lr_min},
          {"momentum", cfg.momentum},
          {"weight_decay", cfg.weight_decay},
          {"crop", cfg.crop},
          {"seed", cfg.seed}}},
        {"model", nlohmann::json::parse(model_config_to_json(model.config()))},
        {"seed", cfg.seed},
        {"epochs", cfg.epochs},
        {"loss_curve", result.loss_curve}};
    std::ofstream mf(fs::path(run_dir) / "manifest.json");
    mf << manifest.dump(2) << "\n";

    std::ofstream csv(fs::path(run_dir) / "loss_curve.csv");
    csv << "epoch,loss\n";
    for (std::size_t i = 0; i < result.loss_curve.size(); ++i)
        csv << (i + 1) << "," << result.loss_curve[i] << "\n";
    return result;
}

}  // namespace hsn
