#pragma once

#include <functional>
#include <string>
#include <vector>

#include "hsn/networks.hpp"
#include "hsn/train.hpp"

namespace hsn {

/// Parameter-space direction, flattened in registry order.
struct Direction {
    std::vector<float> flat;
    std::string label;
};

/// i.i.d. standard normal entries, then filter-wise normalization:
/// d_f <- (d_f / ||d_f||) * ||theta_f|| per filter; zero-norm filters map to
/// zero. Filters are conv output channels, matrix rows, or whole vectors.
Direction random_direction(const nn::ParamRegistry<float>& reg, std::uint64_t seed);

/// In-place filter-wise normalization of an arbitrary direction against theta.
void normalize_filterwise(Direction& dir, const nn::ParamRegistry<float>& reg);

struct GridSpec {
    int n_alpha = 41;
    int n_beta = 41;
    double range_alpha = 1.0;  // coefficients span [-range, +range]
    double range_beta = 1.0;
};

/// Loss surface L(alpha, beta) = loss(theta* + alpha d_a + beta d_b) on a
/// fixed batch. Non-finite cells are recorded as NaN. Row-major [n_alpha, n_beta].
struct LandscapeGrid {
    std::vector<double> alphas, betas;
    std::vector<double> loss;
    double center_loss = 0.0;
};

/// Scalar evaluated over the grid; defaults to batch loss. Pluggable so other
/// per-model scalars can be surfaced without changing the grid contract.
using LandscapeObjective = std::function<double(StereoModelF&)>;

LandscapeGrid evaluate_landscape(StereoModelF& model, const std::vector<StereoSample>& eval_batch,
                                 const Direction& da, const Direction& db, const GridSpec& spec);

LandscapeGrid evaluate_landscape(StereoModelF& model, const LandscapeObjective& objective,
                                 const Direction& da, const Direction& db, const GridSpec& spec);

/// PCA of the parameter-delta matrix M = [theta_0 - theta_n; ...;
/// theta_{n-1} - theta_n] (uncentered, exactly as written). Projects every
/// snapshot delta onto the two most explanatory directions; the final snapshot
/// lands at (0,0). Explained-variance fractions are relative to total delta
/// variance.
struct TrajectoryProjection {
    std::vector<double> x, y;          // one point per snapshot, final = (0,0)
    double v1 = 0.0, v2 = 0.0;         // explained variance fractions, v1 >= v2
    bool degenerate = false;           // rank < 2
    std::vector<double> dir1, dir2;    // unit directions in parameter space
};

TrajectoryProjection pca_trajectory(const std::vector<ParameterSnapshot>& snapshots);

/// Loss surface over the PCA plane anchored at theta_n with the trajectory in
/// the same coordinates. Non-positive grid ranges auto-scale to the
/// trajectory extent.
std::pair<LandscapeGrid, TrajectoryProjection> trajectory_landscape(
    StereoModelF& model, const std::vector<ParameterSnapshot>& snapshots,
    const std::vector<StereoSample>& eval_batch, GridSpec spec);

/// CSV schemas: surface rows "alpha,beta,loss"; trajectory rows "epoch,x,y".
void export_surface_csv(const LandscapeGrid& grid, const std::string& path);
void export_trajectory_csv(const TrajectoryProjection& proj, const std::string& path);

/// Heatmap with iso-loss contour lines; trajectory overlays as dots.
void render_surface_png(const LandscapeGrid& grid, const std::string& path);
void render_trajectory_png(const LandscapeGrid& grid, const TrajectoryProjection& proj,
                           const std::string& path);

}  // namespace hsn
