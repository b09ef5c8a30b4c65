#pragma once

#include <string>
#include <vector>

#include "hsn/image.hpp"
#include "hsn/networks.hpp"
#include "hsn/optim.hpp"

namespace hsn {

/// Supervised recipe: SGD, momentum 0.9, cosine learning rate from 0.025 down
/// to 0.001, weight decay 3e-4, random 336x336 crops as the only augmentation.
struct TrainConfig {
    int epochs = 20;
    int batch_size = 2;
    double lr_max = 0.025;
    double lr_min = 0.001;
    double momentum = 0.9;
    double weight_decay = 0.0003;
    int crop = 336;
    std::uint64_t seed = 0;

    void validate() const {
        if (epochs < 1 || batch_size < 1) throw ConfigError("train: epochs/batch must be >= 1");
        if (lr_min > lr_max) throw ConfigError("train: lr_min must be <= lr_max");
        if (crop < 1) throw ConfigError("train: crop must be >= 1");
    }
};

/// Flattened parameters at one epoch boundary (registry order, float32).
struct ParameterSnapshot {
    int epoch = 0;
    std::vector<float> theta;
    double loss = 0.0;
};

struct TrainResult {
    std::vector<ParameterSnapshot> snapshots;  // epochs 0..n inclusive
    std::vector<double> loss_curve;            // mean training loss per epoch, 1..n
};

/// Same crop window applied to both images, ground truth and masks. Crop size
/// must not exceed the image dims; equal dims return the sample unchanged.
StereoSample random_crop_pair(const StereoSample& sample, int crop, Rng& rng);

/// Mean forward loss of the model on a batch (no crop, no gradient use).
double batch_loss(StereoModelF& model, const std::vector<StereoSample>& batch);

/// Runs the recipe on the dataset. Snapshots are taken before training and
/// after every epoch. A non-finite loss aborts with epoch/batch/lr diagnostics.
TrainResult train(StereoModelF& model, const std::vector<StereoSample>& dataset,
                  const TrainConfig& cfg);

/// train() plus on-disk artifacts: epoch_%04d checkpoint files, manifest.json
/// (config, seed, loss curve) and loss_curve.csv under run_dir.
TrainResult train_run(StereoModelF& model, const std::vector<StereoSample>& dataset,
                      const TrainConfig& cfg, const std::string& run_dir);

}  // namespace hsn
