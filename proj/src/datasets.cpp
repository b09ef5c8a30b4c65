#include "hsn/io/datasets.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>

#include "hsn/geometry.hpp"
#include "hsn/io/image_io.hpp"
#include "hsn/io/pfm.hpp"

namespace fs = std::filesystem;

namespace hsn {
namespace {

nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const std::exception& e) {
        throw DataError("bad json in " + path + ": " + e.what());
    }
}

void require_exists(const std::string& root, const std::string& rel) {
    if (!fs::exists(fs::path(root) / rel))
        throw DataError("manifest references missing file: " + rel);
}

}  // namespace

DatasetManifest read_manifest(const std::string& root) {
    const auto j = read_json_file((fs::path(root) / "manifest.json").string());
    DatasetManifest m;
    m.root = root;
    m.split = j.value("split", "unnamed");
    for (const auto& s : j.at("samples")) {
        SampleEntry e;
        e.id = s.at("id").get<std::string>();
        e.left = s.at("left").get<std::string>();
        e.right = s.at("right").get<std::string>();
        if (s.contains("disp")) e.disp = s.at("disp").get<std::string>();
        if (s.contains("calib")) e.calib = s.at("calib").get<std::string>();
        if (s.contains("occ")) e.occ = s.at("occ").get<std::string>();
        require_exists(root, e.left);
        require_exists(root, e.right);
        if (e.disp) require_exists(root, *e.disp);
        if (e.calib) require_exists(root, *e.calib);
        if (e.occ) require_exists(root, *e.occ);
        m.samples.push_back(std::move(e));
    }
    return m;
}

void write_manifest(const DatasetManifest& manifest) {
    nlohmann::json samples = nlohmann::json::array();
    for (const auto& e : manifest.samples) {
        require_exists(manifest.root, e.left);
        require_exists(manifest.root, e.right);
        nlohmann::json s{{"id", e.id}, {"left", e.left}, {"right", e.right}};
        if (e.disp) {
            require_exists(manifest.root, *e.disp);
            s["disp"] = *e.disp;
        }
        if (e.calib) {
            require_exists(manifest.root, *e.calib);
            s["calib"] = *e.calib;
        }
        if (e.occ) {
            require_exists(manifest.root, *e.occ);
            s["occ"] = *e.occ;
        }
        samples.push_back(std::move(s));
    }
    nlohmann::json j{{"split", manifest.split}, {"samples", samples}};
    std::ofstream out(fs::path(manifest.root) / "manifest.json");
    if (!out) throw DataError("cannot write manifest.json under " + manifest.root);
    out << j.dump(2) << "\n";
}

StereoSample load_sample(const DatasetManifest& manifest, const SampleEntry& entry) {
    const fs::path root(manifest.root);
    StereoSample s;
    s.id = entry.id;
    s.left = load_image((root / entry.left).string());
    s.right = load_image((root / entry.right).string());
    if (s.left.height != s.right.height || s.left.width != s.right.width)
        throw DataError("sample " + entry.id + ": left/right dimensions differ");
    if (entry.disp) {
        s.gt_disparity = read_pfm((root / *entry.disp).string());
        s.has_gt = true;
        if (s.gt_disparity.height != s.left.height || s.gt_disparity.width != s.left.width)
            throw DataError("sample " + entry.id + ": disparity dimensions differ from images");
    }
    if (entry.calib) {
        s.rig = read_calib((root / *entry.calib).string());
        s.has_rig = true;
    }
    if (entry.occ) {
        s.occluded = load_mask((root / *entry.occ).string(), s.left.height, s.left.width);
        s.has_occlusion = true;
    }
    return s;
}

std::vector<StereoSample> load_all(const DatasetManifest& manifest) {
    std::vector<StereoSample> out;
    out.reserve(manifest.samples.size());
    for (const auto& e : manifest.samples) out.push_back(load_sample(manifest, e));
    return out;
}

CameraRig read_calib(const std::string& path) {
    const auto j = read_json_file(path);
    CameraRig rig;
    rig.fx = j.at("fx").get<double>();
    rig.baseline_mm = j.at("baseline_mm").get<double>();
    rig.cx_left = j.value("cx_left", 0.0);
    rig.cx_right = j.value("cx_right", 0.0);
    rig.validate();
    return rig;
}

void write_calib(const CameraRig& rig, const std::string& path) {
    nlohmann::json j{{"fx", rig.fx},
                     {"baseline_mm", rig.baseline_mm},
                     {"cx_left", rig.cx_left},
                     {"cx_right", rig.cx_right}};
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << j.dump(2) << "\n";
}

DatasetManifest load_pairs_dir(const std::string& root, const std::string& split) {
    const fs::path left_dir = fs::path(root) / "left";
    if (!fs::is_directory(left_dir)) throw DataError("load_pairs_dir: missing " + left_dir.string());
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(left_dir))
        if (e.path().extension() == ".png") names.push_back(e.path().stem().string());
    std::sort(names.begin(), names.end());
    if (names.empty()) throw DataError("load_pairs_dir: no pngs under " + left_dir.string());

    DatasetManifest m;
    m.root = root;
    m.split = split;
    for (const auto& n : names) {
        SampleEntry e;
        e.id = n;
        e.left = "left/" + n + ".png";
        e.right = "right/" + n + ".png";
        require_exists(root, e.right);
        const std::string disp = "disp/" + n + ".pfm";
        if (fs::exists(fs::path(root) / disp)) e.disp = disp;
        const std::string calib = "calib/" + n + ".json";
        if (fs::exists(fs::path(root) / calib)) e.calib = calib;
        m.samples.push_back(std::move(e));
    }
    return m;
}

SampleEntry write_sample(const StereoSample& sample, const std::string& root) {
    const fs::path dir = fs::path(root) / sample.id;
    fs::create_directories(dir);
    SampleEntry e;
    e.id = sample.id;
    e.left = sample.id + "/left.png";
    e.right = sample.id + "/right.png";
    save_image(sample.left, (dir / "left.png").string());
    save_image(sample.right, (dir / "right.png").string());
    if (sample.has_gt) {
        e.disp = sample.id + "/disp.pfm";
        write_pfm(sample.gt_disparity, (dir / "disp.pfm").string());
    }
    if (sample.has_rig) {
        e.calib = sample.id + "/calib.json";
        write_calib(sample.rig, (dir / "calib.json").string());
    }
    if (sample.has_occlusion) {
        e.occ = sample.id + "/occ.png";
        save_mask(sample.occluded, sample.left.height, sample.left.width, (dir / "occ.png").string());
    }
    return e;
}

CurationResult curate_scared(const std::string& keyframe_root, const std::string& out_root,
                             bool use_cx_offset) {
    std::vector<std::string> ids;
    for (const auto& e : fs::directory_iterator(keyframe_root))
        if (e.is_directory() && fs::exists(e.path() / "depth.pfm")) ids.push_back(e.path().filename());
    std::sort(ids.begin(), ids.end());
    if (ids.empty()) throw DataError("curate_scared: no keyframe directories with depth.pfm under " +
                                     keyframe_root);

    fs::create_directories(out_root);
    CurationResult result;
    result.manifest.root = out_root;
    result.manifest.split = "test19";
    for (const auto& id : ids) {
        const fs::path kf = fs::path(keyframe_root) / id;
        StereoSample s;
        s.id = id;
        s.left = load_image((kf / "left.png").string());
        s.right = load_image((kf / "right.png").string());
        s.rig = read_calib((kf / "calib.json").string());
        s.has_rig = true;
        const DepthMap depth = read_pfm((kf / "depth.pfm").string());
        DepthMap depth_checked = depth;
        for (std::size_t i = 0; i < depth.values.size(); ++i)
            if (depth.valid[i] && depth.values[i] <= 0.0f) depth_checked.valid[i] = 0;
        s.gt_disparity = depth_to_disparity(depth_checked, s.rig, use_cx_offset);
        s.has_gt = true;
        for (std::size_t i = 0; i < s.gt_disparity.values.size(); ++i)
            if (s.gt_disparity.valid[i])
                result.max_disparity = std::max(result.max_disparity, s.gt_disparity.values[i]);
        result.manifest.samples.push_back(write_sample(s, out_root));
    }
    write_manifest(result.manifest);
    return result;
}

}  // namespace hsn
