#pragma once

#include <memory>
#include <string>

#include "hsn/networks.hpp"

namespace hsn {

/// Single-file archive: 8-byte magic, little-endian u64 manifest length, UTF-8
/// JSON manifest (config + named tensor index), then a flat little-endian
/// float32 blob. Reload is bit-exact.
void save_checkpoint(const StereoModelF& model, const std::string& path,
                     const std::string& extra_json = "{}");

struct LoadedCheckpoint {
    std::unique_ptr<StereoModelF> model;
    std::string extra_json;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

std::string model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const std::string& json);

}  // namespace hsn
