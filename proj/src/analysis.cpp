#include "hsn/analysis.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "hsn/io/image_io.hpp"

namespace hsn {
namespace {

/// Restores model parameters on scope exit, exception-safe.
class ParamGuard {
public:
    explicit ParamGuard(StereoModelF& model)
        : model_(model), saved_(model.registry().flatten_values()) {}
    ~ParamGuard() { model_.registry().load_flat(saved_); }
    const std::vector<float>& saved() const { return saved_; }

private:
    StereoModelF& model_;
    std::vector<float> saved_;
};

std::vector<double> grid_axis(int n, double range) {
    std::vector<double> axis(static_cast<std::size_t>(n));
    if (n == 1) {
        axis[0] = 0.0;
        return axis;
    }
    for (int i = 0; i < n; ++i) axis[static_cast<std::size_t>(i)] = -range + 2.0 * range * i / (n - 1);
    return axis;
}

}  // namespace

void normalize_filterwise(Direction& dir, const nn::ParamRegistry<float>& reg) {
    if (static_cast<std::int64_t>(dir.flat.size()) != reg.total_count())
        throw ArgumentError("normalize_filterwise: direction length mismatch");
    std::size_t off = 0;
    for (const auto& e : reg) {
        const auto& theta = e.param.v();
        const int filters = e.param.filter_count();
        const std::int64_t stride = e.param.filter_stride();
        for (int f = 0; f < filters; ++f) {
            double dn = 0.0, tn = 0.0;
            const std::int64_t base = static_cast<std::int64_t>(f) * stride;
            for (std::int64_t j = 0; j < stride; ++j) {
                const double dv = dir.flat[off + base + j];
                const double tv = theta[base + j];
                dn += dv * dv;
                tn += tv * tv;
            }
            dn = std::sqrt(dn);
            tn = std::sqrt(tn);
            const double scale = (dn > 0.0 && tn > 0.0) ? tn / dn : 0.0;
            for (std::int64_t j = 0; j < stride; ++j)
                dir.flat[off + base + j] = static_cast<float>(dir.flat[off + base + j] * scale);
        }
        off += static_cast<std::size_t>(theta.numel());
    }
}

Direction random_direction(const nn::ParamRegistry<float>& reg, std::uint64_t seed) {
    Direction dir;
    dir.label = "rand_" + std::to_string(seed);
    dir.flat.resize(static_cast<std::size_t>(reg.total_count()));
    Rng rng(seed);
    for (auto& v : dir.flat) v = static_cast<float>(rng.normal());
    normalize_filterwise(dir, reg);
    return dir;
}

LandscapeGrid evaluate_landscape(StereoModelF& model, const LandscapeObjective& objective,
                                 const Direction& da, const Direction& db, const GridSpec& spec) {
    auto& reg = model.registry();
    const std::size_t n = static_cast<std::size_t>(reg.total_count());
    if (da.flat.size() != n || db.flat.size() != n)
        throw ArgumentError("evaluate_landscape: direction length mismatch");

    ParamGuard guard(model);
    const std::vector<float>& theta = guard.saved();

    LandscapeGrid grid;
    grid.alphas = grid_axis(spec.n_alpha, spec.range_alpha);
    grid.betas = grid_axis(spec.n_beta, spec.range_beta);
    grid.loss.assign(static_cast<std::size_t>(spec.n_alpha) * spec.n_beta,
                     std::numeric_limits<double>::quiet_NaN());

    std::vector<float> perturbed(n);
    for (int ia = 0; ia < spec.n_alpha; ++ia) {
        for (int ib = 0; ib < spec.n_beta; ++ib) {
            const float a = static_cast<float>(grid.alphas[static_cast<std::size_t>(ia)]);
            const float b = static_cast<float>(grid.betas[static_cast<std::size_t>(ib)]);
            for (std::size_t j = 0; j < n; ++j)
                perturbed[j] = theta[j] + a * da.flat[j] + b * db.flat[j];
            reg.load_flat(perturbed);
            double value = std::numeric_limits<double>::quiet_NaN();
            try {
                value = objective(model);
                if (!std::isfinite(value)) value = std::numeric_limits<double>::quiet_NaN();
            } catch (const NumericError&) {
                // leave the cell missing
            }
            grid.loss[static_cast<std::size_t>(ia) * spec.n_beta + ib] = value;
            if (a == 0.0f && b == 0.0f && std::isfinite(value)) grid.center_loss = value;
        }
    }
    return grid;
}

LandscapeGrid evaluate_landscape(StereoModelF& model, const std::vector<StereoSample>& eval_batch,
                                 const Direction& da, const Direction& db, const GridSpec& spec) {
    LandscapeObjective obj = [&eval_batch](StereoModelF& m) { return batch_loss(m, eval_batch); };
    return evaluate_landscape(model, obj, da, db, spec);
}

TrajectoryProjection pca_trajectory(const std::vector<ParameterSnapshot>& snapshots) {
    const int n_snap = static_cast<int>(snapshots.size());
    if (n_snap < 3) throw ArgumentError("pca_trajectory: needs >= 3 snapshots");
    const std::size_t p = snapshots.front().theta.size();
    for (const auto& s : snapshots)
        if (s.theta.size() != p) throw ArgumentError("pca_trajectory: inconsistent vector length");

    const int rows = n_snap - 1;  // deltas to the final snapshot
    Eigen::MatrixXd M(rows, static_cast<Eigen::Index>(p));
    const auto& final_theta = snapshots.back().theta;
    for (int i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < p; ++j)
            M(i, static_cast<Eigen::Index>(j)) =
                static_cast<double>(snapshots[static_cast<std::size_t>(i)].theta[j]) - final_theta[j];

    // Small-side Gram eigendecomposition; directions recovered as M^T q / sigma.
    const Eigen::MatrixXd G = M * M.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
    const auto& evals = es.eigenvalues();   // ascending
    const auto& evecs = es.eigenvectors();
    const double total = std::max(G.trace(), 0.0);

    TrajectoryProjection proj;
    const double l1 = std::max(evals(rows - 1), 0.0);
    const double l2 = rows >= 2 ? std::max(evals(rows - 2), 0.0) : 0.0;
    const double tiny = 1e-12 * std::max(1.0, total);
    proj.degenerate = l2 <= tiny || total <= 0.0;
    proj.v1 = total > 0.0 ? l1 / total : 0.0;
    proj.v2 = proj.degenerate ? 0.0 : l2 / total;

    Eigen::VectorXd coords1 = Eigen::VectorXd::Zero(rows), coords2 = Eigen::VectorXd::Zero(rows);
    Eigen::VectorXd dir1 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
    Eigen::VectorXd dir2 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
    if (l1 > tiny) {
        const double s1 = std::sqrt(l1);
        dir1 = M.transpose() * evecs.col(rows - 1) / s1;
        coords1 = s1 * evecs.col(rows - 1);
    }
    if (!proj.degenerate) {
        const double s2 = std::sqrt(l2);
        dir2 = M.transpose() * evecs.col(rows - 2) / s2;
        coords2 = s2 * evecs.col(rows - 2);
    }
    // sign convention: the first snapshot projects into the closed right/upper
    // half-plane, making outputs reproducible
    if (rows > 0 && coords1(0) < 0.0) {
        coords1 = -coords1;
        dir1 = -dir1;
    }
    if (rows > 0 && coords2(0) < 0.0) {
        coords2 = -coords2;
        dir2 = -dir2;
    }

    proj.x.assign(static_cast<std::size_t>(n_snap), 0.0);
    proj.y.assign(static_cast<std::size_t>(n_snap), 0.0);
    for (int i = 0; i < rows; ++i) {
        proj.x[static_cast<std::size_t>(i)] = coords1(i);
        proj.y[static_cast<std::size_t>(i)] = coords2(i);
    }
    proj.dir1.assign(dir1.data(), dir1.data() + dir1.size());
    proj.dir2.assign(dir2.data(), dir2.data() + dir2.size());
    return proj;
}

std::pair<LandscapeGrid, TrajectoryProjection> trajectory_landscape(
    StereoModelF& model, const std::vector<ParameterSnapshot>& snapshots,
    const std::vector<StereoSample>& eval_batch, GridSpec spec) {
    TrajectoryProjection proj = pca_trajectory(snapshots);

    if (spec.range_alpha <= 0.0 || spec.range_beta <= 0.0) {
        double mx = 0.0, my = 0.0;
        for (std::size_t i = 0; i < proj.x.size(); ++i) {
            mx = std::max(mx, std::abs(proj.x[i]));
            my = std::max(my, std::abs(proj.y[i]));
        }
        if (spec.range_alpha <= 0.0) spec.range_alpha = mx > 0.0 ? 1.2 * mx : 1.0;
        if (spec.range_beta <= 0.0) spec.range_beta = my > 0.0 ? 1.2 * my : 1.0;
    }

    // surface anchored at theta_n along the (unit) PCA directions
    ParamGuard guard(model);
    model.registry().load_flat(snapshots.back().theta);
    Direction da, db;
    da.label = "pca_1";
    db.label = "pca_2";
    da.flat.assign(proj.dir1.begin(), proj.dir1.end());
    db.flat.assign(proj.dir2.begin(), proj.dir2.end());
    LandscapeGrid grid = evaluate_landscape(model, eval_batch, da, db, spec);
    return {std::move(grid), std::move(proj)};
}

void export_surface_csv(const LandscapeGrid& grid, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "alpha,beta,loss\n";
    for (std::size_t ia = 0; ia < grid.alphas.size(); ++ia)
        for (std::size_t ib = 0; ib < grid.betas.size(); ++ib)
            out << grid.alphas[ia] << "," << grid.betas[ib] << ","
                << grid.loss[ia * grid.betas.size() + ib] << "\n";
}

void export_trajectory_csv(const TrajectoryProjection& proj, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "epoch,x,y\n";
    for (std::size_t i = 0; i < proj.x.size(); ++i)
        out << i << "," << proj.x[i] << "," << proj.y[i] << "\n";
}

namespace {

Image render_heatmap(const LandscapeGrid& grid, int scale) {
    const int na = static_cast<int>(grid.alphas.size());
    const int nb = static_cast<int>(grid.betas.size());
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (double v : grid.loss)
        if (std::isfinite(v)) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
    if (hi <= lo) hi = lo + 1.0;

    Image img(nb * scale, na * scale, 3);
    auto cell = [&](int ia, int ib) { return grid.loss[static_cast<std::size_t>(ia) * nb + ib]; };
    for (int py = 0; py < img.height; ++py)
        for (int px = 0; px < img.width; ++px) {
            const int ia = px / scale, ib = nb - 1 - py / scale;
            const double v = cell(ia, ib);
            if (!std::isfinite(v)) {
                img.at(py, px, 0) = img.at(py, px, 1) = img.at(py, px, 2) = 0.15f;
                continue;
            }
            const float t = static_cast<float>((v - lo) / (hi - lo));
            img.at(py, px, 0) = 0.1f + 0.9f * t;            // dark blue -> warm
            img.at(py, px, 1) = 0.1f + 0.75f * t * t;
            img.at(py, px, 2) = 0.35f + 0.45f * (1.0f - t);
        }
    // iso-loss contours at 10 levels
    for (int level = 1; level < 10; ++level) {
        const double iso = lo + (hi - lo) * level / 10.0;
        for (int ia = 0; ia + 1 < na; ++ia)
            for (int ib = 0; ib + 1 < nb; ++ib) {
                const double v = cell(ia, ib);
                if (!std::isfinite(v)) continue;
                const double vr = cell(ia + 1, ib), vu = cell(ia, ib + 1);
                const bool crossing = (std::isfinite(vr) && (v - iso) * (vr - iso) < 0.0) ||
                                      (std::isfinite(vu) && (v - iso) * (vu - iso) < 0.0);
                if (!crossing) continue;
                const int px = ia * scale + scale / 2;
                const int py = (nb - 1 - ib) * scale + scale / 2;
                img.at(py, px, 0) = img.at(py, px, 1) = img.at(py, px, 2) = 0.0f;
            }
    }
    return img;
}

void draw_dot(Image& img, int py, int px, float r, float g, float b) {
    for (int dy = -2; dy <= 2; ++dy)
        for (int dx = -2; dx <= 2; ++dx) {
            const int y = py + dy, x = px + dx;
            if (y < 0 || y >= img.height || x < 0 || x >= img.width) continue;
            img.at(y, x, 0) = r;
            img.at(y, x, 1) = g;
            img.at(y, x, 2) = b;
        }
}

}  // namespace

void render_surface_png(const LandscapeGrid& grid, const std::string& path) {
    save_image(render_heatmap(grid, 8), path);
}

void render_trajectory_png(const LandscapeGrid& grid, const TrajectoryProjection& proj,
                           const std::string& path) {
    const int scale = 8;
    Image img = render_heatmap(grid, scale);
    const int na = static_cast<int>(grid.alphas.size());
    const int nb = static_cast<int>(grid.betas.size());
    const double ra = std::max(grid.alphas.back(), 1e-12);
    const double rb = std::max(grid.betas.back(), 1e-12);
    for (std::size_t i = 0; i < proj.x.size(); ++i) {
        const double fa = (proj.x[i] / ra + 1.0) / 2.0;  // [-r, r] -> [0, 1]
        const double fb = (proj.y[i] / rb + 1.0) / 2.0;
        const int px = static_cast<int>(fa * (na - 1) * scale + scale / 2);
        const int py = static_cast<int>((1.0 - fb) * (nb - 1) * scale + scale / 2);
        const bool last = i + 1 == proj.x.size();
        draw_dot(img, py, px, last ? 1.0f : 0.1f, 0.1f, last ? 0.1f : 0.9f);
    }
    save_image(img, path);
}

}  // namespace hsn
