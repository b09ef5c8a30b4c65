#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "hsn/geometry.hpp"
#include "hsn/io/checkpoint.hpp"
#include "hsn/io/datasets.hpp"
#include "hsn/io/image_io.hpp"
#include "hsn/io/pfm.hpp"
#include "hsn/synth.hpp"

using namespace hsn;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("hsn_io_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

ModelConfig tiny_model(std::uint64_t seed = 2) {
    ModelConfig cfg;
    cfg.variant = Variant::TypeI;
    cfg.feature_channels = 4;
    cfg.feature_blocks = 2;
    cfg.match_channels = 4;
    cfg.match_stages = 1;
    cfg.blocks_per_stage = 1;
    cfg.dmax = 9;
    cfg.window2d = 2;
    cfg.window3d = 2;
    cfg.mlp_ratio = 2;
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST_CASE("pfm: 1x1 round trip and little-endian scale") {
    const auto dir = temp_dir("pfm1");
    MaskedMap m(1, 1);
    m.at(0, 0) = 2.5f;
    const std::string path = (dir / "one.pfm").string();
    write_pfm(m, path);

    std::ifstream in(path, std::ios::binary);
    std::string header;
    std::getline(in, header);
    CHECK(header == "Pf");
    std::string dims;
    std::getline(in, dims);
    CHECK(dims == "1 1");
    std::string scale;
    std::getline(in, scale);
    CHECK(std::stod(scale) < 0.0);  // negative = little-endian floats

    MaskedMap back = read_pfm(path);
    CHECK(back.at(0, 0) == 2.5f);
    CHECK(back.is_valid(0, 0));
}

TEST_CASE("pfm: bit-exact round trip including negatives and subnormals") {
    const auto dir = temp_dir("pfm2");
    Rng rng(1);
    MaskedMap m(6, 4);
    m.at(0, 0) = -0.0f;
    m.at(0, 1) = 1e-42f;                                    // subnormal
    m.at(0, 2) = -1e-42f;
    m.at(0, 3) = std::numeric_limits<float>::denorm_min();
    m.at(1, 0) = -std::numeric_limits<float>::max();
    m.at(1, 1) = std::numeric_limits<float>::min();
    for (int y = 2; y < 6; ++y)
        for (int x = 0; x < 4; ++x)
            m.at(y, x) = static_cast<float>(rng.uniform(-1e8, 1e8));

    const std::string path = (dir / "rand.pfm").string();
    write_pfm(m, path);
    MaskedMap back = read_pfm(path);
    REQUIRE(back.height == 6);
    REQUIRE(back.width == 4);
    for (std::size_t i = 0; i < m.values.size(); ++i) {
        std::uint32_t a, b;
        std::memcpy(&a, &m.values[i], 4);
        std::memcpy(&b, &back.values[i], 4);
        REQUIRE(a == b);
    }

    // write(read(x)) reproduces the file byte for byte
    const std::string path2 = (dir / "rand2.pfm").string();
    write_pfm(back, path2);
    std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
    std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(b1 == b2);
}

TEST_CASE("pfm: randomized round-trip sweep stays bit-exact") {
    const auto dir = temp_dir("pfm3");
    Rng rng(7);
    for (int trial = 0; trial < 10; ++trial) {
        const int h = rng.uniform_int(1, 9), w = rng.uniform_int(1, 9);
        MaskedMap m(h, w);
        for (auto& v : m.values) {
            // random bit patterns, re-rolled until finite
            for (;;) {
                const std::uint32_t bits =
                    static_cast<std::uint32_t>(rng.engine()() & 0xffffffffULL);
                float f;
                std::memcpy(&f, &bits, 4);
                if (std::isfinite(f)) {
                    v = f;
                    break;
                }
            }
        }
        const std::string path = (dir / ("t" + std::to_string(trial) + ".pfm")).string();
        write_pfm(m, path);
        MaskedMap back = read_pfm(path);
        for (std::size_t i = 0; i < m.values.size(); ++i) {
            std::uint32_t a, b;
            std::memcpy(&a, &m.values[i], 4);
            std::memcpy(&b, &back.values[i], 4);
            REQUIRE(a == b);
        }
    }
}

TEST_CASE("pfm: invalid pixels survive the round trip as invalid") {
    const auto dir = temp_dir("pfm4");
    MaskedMap m(2, 2);
    m.at(0, 0) = 5.0f;
    m.set_valid(1, 1, false);
    const std::string path = (dir / "mask.pfm").string();
    write_pfm(m, path);
    MaskedMap back = read_pfm(path);
    CHECK(back.is_valid(0, 0));
    CHECK(!back.is_valid(1, 1));
}

TEST_CASE("pfm: malformed headers raise data errors with a byte offset") {
    const auto dir = temp_dir("pfm5");
    const std::string path = (dir / "bad.pfm").string();
    {
        std::ofstream out(path, std::ios::binary);
        out << "PF\n2 2\n-1.0\n";  // color magic unsupported
    }
    CHECK_THROWS_AS(read_pfm(path), DataError);
    {
        std::ofstream out(path, std::ios::binary);
        out << "Pf\nxx yy\n-1.0\n";
    }
    CHECK_THROWS_WITH_AS(read_pfm(path), doctest::Contains("byte"), DataError);
    {
        std::ofstream out(path, std::ios::binary);
        out << "Pf\n4 4\n-1.0\nxx";  // truncated pixels
    }
    CHECK_THROWS_AS(read_pfm(path), DataError);
}

TEST_CASE("png round trip is exact at 8-bit resolution") {
    const auto dir = temp_dir("png");
    Rng rng(2);
    Image img(9, 13, 3);
    for (auto& v : img.values)
        v = static_cast<float>(rng.uniform_int(0, 255)) / 255.0f;  // representable exactly
    const std::string path = (dir / "img.png").string();
    save_image(img, path);
    Image back = load_image(path);
    REQUIRE(back.height == 9);
    REQUIRE(back.width == 13);
    REQUIRE(back.channels == 3);
    for (std::size_t i = 0; i < img.values.size(); ++i)
        REQUIRE(back.values[i] == doctest::Approx(img.values[i]).epsilon(1e-9));

    // grayscale path
    Image gray(5, 5, 1);
    for (auto& v : gray.values) v = 0.5f;
    save_image(gray, (dir / "gray.png").string());
    Image gback = load_image((dir / "gray.png").string());
    CHECK(gback.channels == 1);
}

TEST_CASE("mask round trip") {
    const auto dir = temp_dir("mask");
    std::vector<std::uint8_t> mask = {1, 0, 0, 1, 1, 0};
    save_mask(mask, 2, 3, (dir / "m.png").string());
    auto back = load_mask((dir / "m.png").string(), 2, 3);
    CHECK(back == mask);
}

TEST_CASE("checkpoint: save/load is bit-exact and config round-trips") {
    const auto dir = temp_dir("ckpt");
    ModelConfig cfg = tiny_model(11);
    StereoModelF model(cfg);
    const std::string path = (dir / "model.ckpt").string();
    save_checkpoint(model, path, R"({"epoch": 3, "loss": 0.25})");

    LoadedCheckpoint loaded = load_checkpoint(path);
    CHECK(loaded.model->config().variant == cfg.variant);
    CHECK(loaded.model->config().dmax == cfg.dmax);
    CHECK(loaded.model->config().seed == cfg.seed);

    const auto a = model.registry().flatten_values();
    const auto b = loaded.model->registry().flatten_values();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        std::uint32_t ba, bb;
        std::memcpy(&ba, &a[i], 4);
        std::memcpy(&bb, &b[i], 4);
        REQUIRE(ba == bb);
    }
    CHECK(loaded.extra_json.find("0.25") != std::string::npos);

    // a reloaded model predicts bit-identically
    Rng rng(3);
    Tensor<float> l({3, 12, 12}), r({3, 12, 12});
    for (std::int64_t i = 0; i < l.numel(); ++i) {
        l[i] = static_cast<float>(rng.uniform(0, 1));
        r[i] = static_cast<float>(rng.uniform(0, 1));
    }
    Tensor<float> p1 = model.forward(l, r);
    Tensor<float> p2 = loaded.model->forward(l, r);
    for (std::int64_t i = 0; i < p1.numel(); ++i) REQUIRE(p1[i] == p2[i]);
}

TEST_CASE("checkpoint: corrupted files raise data errors") {
    const auto dir = temp_dir("ckpt_bad");
    const std::string path = (dir / "bad.ckpt").string();
    {
        std::ofstream out(path, std::ios::binary);
        out << "NOTACKPT";
    }
    CHECK_THROWS_AS(load_checkpoint(path), DataError);
    CHECK_THROWS_AS(load_checkpoint((dir / "missing.ckpt").string()), DataError);
}

TEST_CASE("dataset manifest round trip and missing-file rejection") {
    const auto dir = temp_dir("manifest");
    auto samples = synth_generate(3, 24, 30, 6, 2);
    DatasetManifest m = write_synth_dataset(samples, dir.string());
    CHECK(m.samples.size() == 2);

    DatasetManifest back = read_manifest(dir.string());
    CHECK(back.split == "synth");
    REQUIRE(back.samples.size() == 2);
    CHECK(back.samples[0].disp.has_value());
    CHECK(back.samples[0].calib.has_value());
    CHECK(back.samples[0].occ.has_value());

    auto loaded = load_all(back);
    CHECK(loaded.size() == 2);
    CHECK(loaded[0].has_gt);
    CHECK(loaded[0].has_rig);
    CHECK(loaded[0].has_occlusion);
    CHECK(loaded[0].left.height == 24);
    // gt disparity round-trips exactly (integer-valued float32 in pfm)
    for (std::size_t i = 0; i < loaded[0].gt_disparity.values.size(); ++i)
        REQUIRE(loaded[0].gt_disparity.values[i] == samples[0].gt_disparity.values[i]);

    // a manifest that references a deleted file must be rejected
    fs::remove(dir / back.samples[1].left);
    CHECK_THROWS_AS(read_manifest(dir.string()), DataError);
}

TEST_CASE("load_pairs_dir discovers the naming convention") {
    const auto dir = temp_dir("pairs");
    fs::create_directories(dir / "left");
    fs::create_directories(dir / "right");
    fs::create_directories(dir / "disp");
    Image img(8, 8, 1);
    save_image(img, (dir / "left" / "000.png").string());
    save_image(img, (dir / "right" / "000.png").string());
    save_image(img, (dir / "left" / "001.png").string());
    save_image(img, (dir / "right" / "001.png").string());
    MaskedMap d(8, 8);
    write_pfm(d, (dir / "disp" / "001.pfm").string());

    DatasetManifest m = load_pairs_dir(dir.string());
    REQUIRE(m.samples.size() == 2);
    CHECK(m.samples[0].id == "000");
    CHECK(!m.samples[0].disp.has_value());
    CHECK(m.samples[1].disp.has_value());
}

TEST_CASE("curate_scared converts keyframe depth to disparity supervision") {
    const auto src = temp_dir("scared_src");
    const auto out = temp_dir("scared_out");

    // two keyframes with analytic depth from a known disparity field
    CameraRig rig;
    rig.fx = 1000.0;
    rig.baseline_mm = 5.0;
    Rng rng(5);
    std::vector<DisparityMap> true_disp;
    for (int k = 0; k < 2; ++k) {
        const fs::path kf = src / ("kf" + std::to_string(k));
        fs::create_directories(kf);
        Image img(16, 20, 1);
        for (auto& v : img.values) v = static_cast<float>(rng.uniform(0.0, 1.0));
        save_image(img, (kf / "left.png").string());
        save_image(img, (kf / "right.png").string());
        write_calib(rig, (kf / "calib.json").string());

        // disparities at laparoscopic working distance (z in 60..250 mm)
        DisparityMap d(16, 20);
        for (auto& v : d.values) v = static_cast<float>(rng.uniform(20.0, 80.0));
        d.set_valid(0, 0, false);
        DepthMap z = disparity_to_depth(d, rig);
        z.at(3, 3) = 0.0f;  // depth 0 must become invalid disparity
        write_pfm(z, (kf / "depth.pfm").string());
        true_disp.push_back(d);
    }

    CurationResult result = curate_scared(src.string(), out.string());
    REQUIRE(result.manifest.samples.size() == 2);

    auto curated = load_all(read_manifest(out.string()));
    float max_seen = 0.0f;
    for (int k = 0; k < 2; ++k) {
        REQUIRE(curated[static_cast<std::size_t>(k)].has_gt);
        const auto& got = curated[static_cast<std::size_t>(k)].gt_disparity;
        for (int y = 0; y < 16; ++y)
            for (int x = 0; x < 20; ++x) {
                if ((y == 0 && x == 0) || (y == 3 && x == 3)) {
                    CHECK(!got.is_valid(y, x));
                    continue;
                }
                REQUIRE(got.is_valid(y, x));
                // depth -> disparity -> depth agrees with the source to 1e-4 mm
                const double z_back = rig.fx * rig.baseline_mm / got.at(y, x);
                const double z_src = rig.fx * rig.baseline_mm / true_disp[static_cast<std::size_t>(k)].at(y, x);
                CHECK(std::abs(z_back - z_src) < 1e-4);
                max_seen = std::max(max_seen, got.at(y, x));
            }
    }
    // max observed disparity matches a scan oracle
    CHECK(result.max_disparity == doctest::Approx(max_seen).epsilon(1e-6));
    CHECK(result.manifest.split == "test19");
}

TEST_CASE("synth: fixed seed reproduces samples bit-identically") {
    auto a = synth_generate(42, 32, 40, 10, 2);
    auto b = synth_generate(42, 32, 40, 10, 2);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        REQUIRE(a[i].left.values == b[i].left.values);
        REQUIRE(a[i].right.values == b[i].right.values);
        REQUIRE(a[i].gt_disparity.values == b[i].gt_disparity.values);
        REQUIRE(a[i].occluded == b[i].occluded);
    }
    auto c = synth_generate(43, 32, 40, 10, 1);
    CHECK(c[0].left.values != a[0].left.values);
}

TEST_CASE("synth: constant-disparity layer behaves as a pure shift") {
    // with dmax small and one dominant background plane, verify the warp
    // identity right(x - d) == left(x) on non-occluded pixels
    auto samples = synth_generate(9, 24, 40, 6, 3);
    for (const auto& s : samples) {
        auto [warped, mask] = warp_right_to_left(s.right, s.gt_disparity);
        for (int y = 0; y < 24; ++y)
            for (int x = 0; x < 40; ++x) {
                const std::size_t i = static_cast<std::size_t>(y) * 40 + x;
                if (!mask[i] || s.occluded[i]) continue;
                for (int c = 0; c < 3; ++c)
                    REQUIRE(std::abs(warped.at(y, x, c) - s.left.at(y, x, c)) < 1e-3);
            }
    }
}

TEST_CASE("synth: gt disparity is bounded and every 8x8 tile is textured") {
    auto samples = synth_generate(77, 32, 48, 12, 2);
    for (const auto& s : samples) {
        for (float v : s.gt_disparity.values) {
            CHECK(v >= 0.0f);
            CHECK(v <= 12.0f);
        }
        for (int ty = 0; ty + 8 <= 32; ty += 8)
            for (int tx = 0; tx + 8 <= 48; tx += 8) {
                float lo = 1.0f, hi = 0.0f;
                for (int y = ty; y < ty + 8; ++y)
                    for (int x = tx; x < tx + 8; ++x) {
                        lo = std::min(lo, s.left.at(y, x, 0));
                        hi = std::max(hi, s.left.at(y, x, 0));
                    }
                CHECK(hi - lo > 0.01f);
            }
    }
}

TEST_CASE("synth: argument validation") {
    CHECK_THROWS_AS(synth_generate(1, 16, 16, 16, 1), ArgumentError);  // dmax >= w
    CHECK_THROWS_AS(synth_generate(1, 4, 16, 4, 1), ArgumentError);
}
