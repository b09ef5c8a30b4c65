#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <fstream>

#include "hsn/analysis.hpp"
#include "hsn/synth.hpp"
#include "test_util.hpp"

using namespace hsn;

namespace {

ModelConfig tiny_model(std::uint64_t seed = 5) {
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

/// Per-filter norms of a flattened direction, matching registry granularity.
std::vector<std::pair<double, double>> filter_norms(const Direction& dir,
                                                    const nn::ParamRegistry<float>& reg) {
    std::vector<std::pair<double, double>> norms;  // (direction, parameter)
    std::size_t off = 0;
    for (const auto& e : reg) {
        const auto& theta = e.param.v();
        const int filters = e.param.filter_count();
        const std::int64_t stride = e.param.filter_stride();
        for (int f = 0; f < filters; ++f) {
            double dn = 0.0, tn = 0.0;
            for (std::int64_t j = 0; j < stride; ++j) {
                dn += static_cast<double>(dir.flat[off + f * stride + j]) *
                      dir.flat[off + f * stride + j];
                tn += static_cast<double>(theta[f * stride + j]) * theta[f * stride + j];
            }
            norms.emplace_back(std::sqrt(dn), std::sqrt(tn));
        }
        off += static_cast<std::size_t>(theta.numel());
    }
    return norms;
}

}  // namespace

TEST_CASE("random direction: per-filter norms equal parameter filter norms") {
    StereoModelF model(tiny_model());
    Direction dir = random_direction(model.registry(), 17);
    for (const auto& [dn, tn] : filter_norms(dir, model.registry())) {
        if (tn == 0.0) {
            CHECK(dn == 0.0);  // zero-norm filters map to zero
        } else {
            CHECK(std::abs(dn - tn) / tn < 1e-5);
        }
    }
}

TEST_CASE("random direction: fixed seed reproduces bit-identically") {
    StereoModelF model(tiny_model());
    Direction a = random_direction(model.registry(), 23);
    Direction b = random_direction(model.registry(), 23);
    REQUIRE(a.flat.size() == b.flat.size());
    for (std::size_t i = 0; i < a.flat.size(); ++i) REQUIRE(a.flat[i] == b.flat[i]);
    Direction c = random_direction(model.registry(), 24);
    bool differs = false;
    for (std::size_t i = 0; i < a.flat.size(); ++i) differs |= a.flat[i] != c.flat[i];
    CHECK(differs);
}

TEST_CASE("filter normalization is idempotent") {
    StereoModelF model(tiny_model());
    Direction dir = random_direction(model.registry(), 31);
    Direction again = dir;
    normalize_filterwise(again, model.registry());
    for (std::size_t i = 0; i < dir.flat.size(); ++i)
        CHECK(std::abs(again.flat[i] - dir.flat[i]) <= 1e-7 * std::max(1.0f, std::abs(dir.flat[i])));
}

TEST_CASE("landscape: center equals the trained-batch loss and params restore") {
    StereoModelF model(tiny_model(7));
    auto batch = synth_generate(3, 24, 36, 9, 2);
    const double direct = batch_loss(model, batch);
    const auto before = model.registry().flatten_values();

    Direction da = random_direction(model.registry(), 1);
    Direction db = random_direction(model.registry(), 2);
    GridSpec spec{5, 5, 0.5, 0.5};
    LandscapeGrid grid = evaluate_landscape(model, batch, da, db, spec);

    CHECK(std::abs(grid.center_loss - direct) < 1e-6);
    CHECK(grid.loss[2 * 5 + 2] == doctest::Approx(direct));

    const auto after = model.registry().flatten_values();
    REQUIRE(after.size() == before.size());
    for (std::size_t i = 0; i < before.size(); ++i) REQUIRE(after[i] == before[i]);
}

TEST_CASE("landscape: grid matches a manual set-weights-then-eval oracle") {
    StereoModelF model(tiny_model(9));
    auto batch = synth_generate(5, 24, 36, 9, 1);
    Direction da = random_direction(model.registry(), 3);
    Direction db = random_direction(model.registry(), 4);
    GridSpec spec{3, 3, 1.0, 1.0};
    LandscapeGrid grid = evaluate_landscape(model, batch, da, db, spec);

    const auto theta = model.registry().flatten_values();
    std::vector<float> perturbed(theta.size());
    for (int ia = 0; ia < 3; ++ia)
        for (int ib = 0; ib < 3; ++ib) {
            // same single-precision arithmetic as the implementation
            const float a = static_cast<float>(grid.alphas[static_cast<std::size_t>(ia)]);
            const float b = static_cast<float>(grid.betas[static_cast<std::size_t>(ib)]);
            for (std::size_t j = 0; j < theta.size(); ++j)
                perturbed[j] = theta[j] + a * da.flat[j] + b * db.flat[j];
            model.registry().load_flat(perturbed);
            const double want = batch_loss(model, batch);
            CHECK(grid.loss[static_cast<std::size_t>(ia) * 3 + ib] ==
                  doctest::Approx(want).epsilon(1e-9));
        }
    model.registry().load_flat(theta);
}

TEST_CASE("landscape grid axes honor the requested lengths") {
    StereoModelF model(tiny_model(11));
    auto batch = synth_generate(6, 24, 36, 9, 1);
    Direction da = random_direction(model.registry(), 5);
    Direction db = random_direction(model.registry(), 6);
    GridSpec spec{7, 5, 1.0, 0.25};
    LandscapeGrid grid = evaluate_landscape(model, batch, da, db, spec);
    CHECK(grid.alphas.size() == 7);
    CHECK(grid.betas.size() == 5);
    CHECK(grid.loss.size() == 35);
    CHECK(grid.alphas.front() == doctest::Approx(-1.0));
    CHECK(grid.alphas.back() == doctest::Approx(1.0));
    CHECK(grid.betas.front() == doctest::Approx(-0.25));
}

TEST_CASE("pca: planar trajectory explains all variance and ends at origin") {
    // snapshots on an exact 2-plane in a 40-dim space
    Rng rng(13);
    std::vector<double> u(40), v(40);
    for (auto& x : u) x = rng.normal();
    for (auto& x : v) x = rng.normal();
    std::vector<ParameterSnapshot> snaps;
    for (int i = 0; i <= 6; ++i) {
        ParameterSnapshot s;
        s.epoch = i;
        s.theta.resize(40);
        const double a = 0.7 * i - 1.0, b = std::sin(0.9 * i);
        for (int j = 0; j < 40; ++j)
            s.theta[static_cast<std::size_t>(j)] = static_cast<float>(a * u[j] + b * v[j]);
        snaps.push_back(std::move(s));
    }
    TrajectoryProjection proj = pca_trajectory(snaps);
    CHECK(proj.v1 >= proj.v2);
    CHECK(proj.v1 + proj.v2 == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(proj.x.back() == 0.0);
    CHECK(proj.y.back() == 0.0);
    CHECK(!proj.degenerate);
}

TEST_CASE("pca: rank-1 trajectory reports v2 = 0 with the degenerate flag") {
    std::vector<ParameterSnapshot> snaps;
    for (int i = 0; i < 4; ++i) {
        ParameterSnapshot s;
        s.epoch = i;
        s.theta = {static_cast<float>(2.0 * i), static_cast<float>(-1.0 * i),
                   static_cast<float>(0.5 * i)};
        snaps.push_back(std::move(s));
    }
    TrajectoryProjection proj = pca_trajectory(snaps);
    CHECK(proj.degenerate);
    CHECK(proj.v2 == 0.0);
    CHECK(proj.v1 == doctest::Approx(1.0).epsilon(1e-9));
    for (std::size_t i = 0; i < proj.y.size(); ++i) CHECK(proj.y[i] == 0.0);
}

TEST_CASE("pca projections match an SVD oracle up to per-axis sign") {
    Rng rng(15);
    const int n_snap = 5, p = 33;
    std::vector<ParameterSnapshot> snaps(n_snap);
    for (int i = 0; i < n_snap; ++i) {
        snaps[static_cast<std::size_t>(i)].epoch = i;
        snaps[static_cast<std::size_t>(i)].theta.resize(p);
        for (int j = 0; j < p; ++j)
            snaps[static_cast<std::size_t>(i)].theta[static_cast<std::size_t>(j)] =
                static_cast<float>(rng.normal());
    }
    TrajectoryProjection proj = pca_trajectory(snaps);

    // independent oracle: dense SVD of the delta matrix
    Eigen::MatrixXd M(n_snap - 1, p);
    for (int i = 0; i < n_snap - 1; ++i)
        for (int j = 0; j < p; ++j)
            M(i, j) = static_cast<double>(snaps[static_cast<std::size_t>(i)].theta[j]) -
                      snaps[n_snap - 1].theta[static_cast<std::size_t>(j)];
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Eigen::VectorXd cx = M * svd.matrixV().col(0);
    Eigen::VectorXd cy = M * svd.matrixV().col(1);

    auto align = [](double oracle_first, double got_first) {
        return (oracle_first < 0) != (got_first < 0) ? -1.0 : 1.0;
    };
    const double sx = align(cx(0), proj.x[0]);
    const double sy = align(cy(0), proj.y[0]);
    for (int i = 0; i < n_snap - 1; ++i) {
        CHECK(std::abs(sx * cx(i) - proj.x[static_cast<std::size_t>(i)]) < 1e-6);
        CHECK(std::abs(sy * cy(i) - proj.y[static_cast<std::size_t>(i)]) < 1e-6);
    }

    // explained variances against singular values
    const double total = M.squaredNorm();
    CHECK(proj.v1 == doctest::Approx(svd.singularValues()(0) * svd.singularValues()(0) / total)
                         .epsilon(1e-9));
    CHECK(proj.v2 == doctest::Approx(svd.singularValues()(1) * svd.singularValues()(1) / total)
                         .epsilon(1e-9));
    CHECK(proj.v1 >= proj.v2);
    CHECK(proj.v1 + proj.v2 <= 1.0 + 1e-12);
}

TEST_CASE("pca is equivariant to uniform snapshot scaling") {
    Rng rng(17);
    const int n_snap = 6, p = 20;
    std::vector<ParameterSnapshot> snaps(n_snap), scaled(n_snap);
    const float s = 3.5f;
    for (int i = 0; i < n_snap; ++i) {
        snaps[static_cast<std::size_t>(i)].theta.resize(p);
        scaled[static_cast<std::size_t>(i)].theta.resize(p);
        for (int j = 0; j < p; ++j) {
            const float v = static_cast<float>(rng.normal());
            snaps[static_cast<std::size_t>(i)].theta[static_cast<std::size_t>(j)] = v;
            scaled[static_cast<std::size_t>(i)].theta[static_cast<std::size_t>(j)] = s * v;
        }
    }
    TrajectoryProjection a = pca_trajectory(snaps);
    TrajectoryProjection b = pca_trajectory(scaled);
    auto sign = [](double x, double y) { return (x < 0) != (y < 0) ? -1.0 : 1.0; };
    const double fx = sign(a.x[0], b.x[0]), fy = sign(a.y[0], b.y[0]);
    for (std::size_t i = 0; i < a.x.size(); ++i) {
        CHECK(std::abs(fx * b.x[i] / s - a.x[i]) < 1e-4);
        CHECK(std::abs(fy * b.y[i] / s - a.y[i]) < 1e-4);
    }
}

TEST_CASE("pca requires at least three snapshots") {
    std::vector<ParameterSnapshot> snaps(2);
    snaps[0].theta = {1.0f, 2.0f};
    snaps[1].theta = {0.0f, 1.0f};
    CHECK_THROWS_AS(pca_trajectory(snaps), ArgumentError);
}

TEST_CASE("trajectory landscape anchors the surface at the final snapshot") {
    StereoModelF model(tiny_model(19));
    auto data = synth_generate(21, 24, 36, 9, 2);
    TrainConfig tc;
    tc.epochs = 3;
    tc.batch_size = 2;
    tc.crop = 24;
    tc.seed = 4;
    TrainResult result = train(model, data, tc);

    GridSpec spec{5, 5, 0.0, 0.0};
    auto [grid, proj] = trajectory_landscape(model, result.snapshots, data, spec);
    CHECK(proj.x.back() == 0.0);
    CHECK(proj.y.back() == 0.0);
    // center cell evaluates theta_n itself
    CHECK(grid.loss[2 * 5 + 2] == doctest::Approx(batch_loss(model, data)).epsilon(1e-6));
    CHECK(grid.alphas.back() > 0.0);
}

TEST_CASE("csv export schemas") {
    LandscapeGrid grid;
    grid.alphas = {-1.0, 0.0, 1.0};
    grid.betas = {-1.0, 0.0, 1.0};
    grid.loss.assign(9, 0.5);
    export_surface_csv(grid, "/tmp/hsn_test_surface.csv");
    std::ifstream in("/tmp/hsn_test_surface.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "alpha,beta,loss");

    TrajectoryProjection proj;
    proj.x = {1.0, 0.0};
    proj.y = {0.5, 0.0};
    export_trajectory_csv(proj, "/tmp/hsn_test_traj.csv");
    std::ifstream in2("/tmp/hsn_test_traj.csv");
    std::getline(in2, header);
    CHECK(header == "epoch,x,y");
    std::string row;
    std::getline(in2, row);
    CHECK(row.rfind("0,1,0.5", 0) == 0);
}
