#include "hsn/io/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>

namespace hsn {

static_assert(std::endian::native == std::endian::little,
              "checkpoint io assumes a little-endian host");

namespace {
constexpr char kMagic[8] = {'H', 'S', 'N', 'C', 'K', 'P', 'T', '1'};

nlohmann::json config_json(const ModelConfig& cfg) {
    return nlohmann::json{{"variant", variant_name(cfg.variant)},
                          {"in_channels", cfg.in_channels},
                          {"feature_channels", cfg.feature_channels},
                          {"feature_blocks", cfg.feature_blocks},
                          {"match_channels", cfg.match_channels},
                          {"match_stages", cfg.match_stages},
                          {"blocks_per_stage", cfg.blocks_per_stage},
                          {"dmax", cfg.dmax},
                          {"window2d", cfg.window2d},
                          {"window3d", cfg.window3d},
                          {"mlp_ratio", cfg.mlp_ratio},
                          {"seed", cfg.seed}};
}

ModelConfig config_from(const nlohmann::json& j) {
    ModelConfig cfg;
    cfg.variant = parse_variant(j.at("variant").get<std::string>());
    cfg.in_channels = j.at("in_channels").get<int>();
    cfg.feature_channels = j.at("feature_channels").get<int>();
    cfg.feature_blocks = j.at("feature_blocks").get<int>();
    cfg.match_channels = j.at("match_channels").get<int>();
    cfg.match_stages = j.at("match_stages").get<int>();
    cfg.blocks_per_stage = j.at("blocks_per_stage").get<int>();
    cfg.dmax = j.at("dmax").get<int>();
    cfg.window2d = j.at("window2d").get<int>();
    cfg.window3d = j.at("window3d").get<int>();
    cfg.mlp_ratio = j.at("mlp_ratio").get<int>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    return cfg;
}
}  // namespace

std::string model_config_to_json(const ModelConfig& cfg) { return config_json(cfg).dump(); }

ModelConfig model_config_from_json(const std::string& json) {
    return config_from(nlohmann::json::parse(json));
}

void save_checkpoint(const StereoModelF& model, const std::string& path,
                     const std::string& extra_json) {
    const auto& reg = model.registry();
    nlohmann::json tensors = nlohmann::json::array();
    std::int64_t offset = 0;
    for (const auto& e : reg) {
        tensors.push_back({{"name", e.name}, {"shape", e.param.v().shape()}, {"offset", offset}});
        offset += e.param.numel();
    }
    nlohmann::json manifest{{"format", "hsn-checkpoint"},
                            {"version", 1},
                            {"config", config_json(model.config())},
                            {"extra", nlohmann::json::parse(extra_json)},
                            {"tensors", tensors}};
    const std::string mjson = manifest.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("checkpoint: cannot write " + path);
    out.write(kMagic, 8);
    const std::uint64_t len = mjson.size();
    out.write(reinterpret_cast<const char*>(&len), 8);
    out.write(mjson.data(), static_cast<std::streamsize>(mjson.size()));
    for (const auto& e : reg) {
        const auto& v = e.param.v();
        out.write(reinterpret_cast<const char*>(v.data()),
                  static_cast<std::streamsize>(v.numel() * sizeof(float)));
    }
    if (!out) throw DataError("checkpoint: write failed for " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("checkpoint: cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (in.gcount() != 8 || std::memcmp(magic, kMagic, 8) != 0)
        throw DataError("checkpoint: bad magic in " + path);
    std::uint64_t len = 0;
    in.read(reinterpret_cast<char*>(&len), 8);
    std::string mjson(len, '\0');
    in.read(mjson.data(), static_cast<std::streamsize>(len));
    if (in.gcount() != static_cast<std::streamsize>(len))
        throw DataError("checkpoint: truncated manifest in " + path);

    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(mjson);
    } catch (const std::exception& e) {
        throw DataError(std::string("checkpoint: bad manifest json: ") + e.what());
    }
    if (manifest.value("format", "") != "hsn-checkpoint")
        throw DataError("checkpoint: unknown format in " + path);

    LoadedCheckpoint result;
    result.model = std::make_unique<StereoModelF>(config_from(manifest.at("config")));
    result.extra_json = manifest.at("extra").dump();

    auto& reg = result.model->registry();
    const auto& tensors = manifest.at("tensors");
    if (tensors.size() != reg.size())
        throw DataError("checkpoint: tensor count mismatch in " + path);
    for (std::size_t i = 0; i < reg.size(); ++i) {
        const auto& t = tensors[i];
        if (t.at("name").get<std::string>() != reg[i].name)
            throw DataError("checkpoint: tensor name mismatch at index " + std::to_string(i));
        if (t.at("shape").get<std::vector<int>>() != reg[i].param.v().shape())
            throw DataError("checkpoint: tensor shape mismatch for " + reg[i].name);
        auto& v = reg[i].param.v();
        in.read(reinterpret_cast<char*>(v.data()),
                static_cast<std::streamsize>(v.numel() * sizeof(float)));
        if (in.gcount() != static_cast<std::streamsize>(v.numel() * sizeof(float)))
            throw DataError("checkpoint: truncated blob in " + path);
    }
    return result;
}

}  // namespace hsn
