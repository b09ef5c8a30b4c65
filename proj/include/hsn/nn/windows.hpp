#pragma once

#include <array>
#include <limits>
#include <vector>

#include "hsn/tensor.hpp"

namespace hsn::nn {

/// Per-axis extent for token grids. 2D grids use d = 1.
struct Dims3 {
    int d = 1, h = 1, w = 1;
    bool operator==(const Dims3&) const = default;
    std::int64_t volume() const { return static_cast<std::int64_t>(d) * h * w; }
};

/// Token grids are stored channels-last as [d, h, w, c].
template <typename T>
Dims3 grid_dims(const Tensor<T>& grid) {
    return {grid.size(0), grid.size(1), grid.size(2)};
}

inline int round_up(int v, int m) { return ((v + m - 1) / m) * m; }

/// Zero-pads a [d,h,w,c] grid at the far side of each axis up to multiples of `win`.
template <typename T>
Tensor<T> pad_grid(const Tensor<T>& grid, const Dims3& win) {
    const Dims3 in = grid_dims(grid);
    const Dims3 out{round_up(in.d, win.d), round_up(in.h, win.h), round_up(in.w, win.w)};
    if (out == in) return grid;
    const int c = grid.size(3);
    Tensor<T> padded({out.d, out.h, out.w, c});
    for (int z = 0; z < in.d; ++z)
        for (int y = 0; y < in.h; ++y)
            for (int x = 0; x < in.w; ++x)
                for (int ch = 0; ch < c; ++ch)
                    padded(z, y, x, ch) = grid(z, y, x, ch);
    return padded;
}

/// Crops a padded grid back to `dims` (inverse of pad_grid).
template <typename T>
Tensor<T> crop_grid(const Tensor<T>& grid, const Dims3& dims) {
    const Dims3 in = grid_dims(grid);
    if (in == dims) return grid;
    const int c = grid.size(3);
    Tensor<T> out({dims.d, dims.h, dims.w, c});
    for (int z = 0; z < dims.d; ++z)
        for (int y = 0; y < dims.h; ++y)
            for (int x = 0; x < dims.w; ++x)
                for (int ch = 0; ch < c; ++ch)
                    out(z, y, x, ch) = grid(z, y, x, ch);
    return out;
}

/// Gradient of pad_grid: embeds a gradient for the cropped region into zeros.
template <typename T>
Tensor<T> pad_grid_backward(const Tensor<T>& gpadded, const Dims3& dims) {
    return crop_grid(gpadded, dims);
}

/// Gradient of crop_grid.
template <typename T>
Tensor<T> crop_grid_backward(const Tensor<T>& gout, const Dims3& padded) {
    const Dims3 in = grid_dims(gout);
    if (in == padded) return gout;
    const int c = gout.size(3);
    Tensor<T> g({padded.d, padded.h, padded.w, c});
    for (int z = 0; z < in.d; ++z)
        for (int y = 0; y < in.h; ++y)
            for (int x = 0; x < in.w; ++x)
                for (int ch = 0; ch < c; ++ch)
                    g(z, y, x, ch) = gout(z, y, x, ch);
    return g;
}

/// Cyclic shift by (sd, sh, sw); out(i) = in(i + s mod n) per axis.
template <typename T>
Tensor<T> roll_grid(const Tensor<T>& grid, int sd, int sh, int sw) {
    if (sd == 0 && sh == 0 && sw == 0) return grid;
    const Dims3 dm = grid_dims(grid);
    const int c = grid.size(3);
    auto wrap = [](int i, int n) { return ((i % n) + n) % n; };
    Tensor<T> out({dm.d, dm.h, dm.w, c});
    for (int z = 0; z < dm.d; ++z) {
        const int sz = wrap(z + sd, dm.d);
        for (int y = 0; y < dm.h; ++y) {
            const int sy = wrap(y + sh, dm.h);
            for (int x = 0; x < dm.w; ++x) {
                const int sx = wrap(x + sw, dm.w);
                for (int ch = 0; ch < c; ++ch) out(z, y, x, ch) = grid(sz, sy, sx, ch);
            }
        }
    }
    return out;
}

/// Rearranges [d,h,w,c] into non-overlapping windows: [n_windows, win_volume, c].
/// Grid dims must be multiples of the window.
template <typename T>
Tensor<T> window_partition(const Tensor<T>& grid, const Dims3& win) {
    const Dims3 dm = grid_dims(grid);
    if (dm.d % win.d || dm.h % win.h || dm.w % win.w)
        throw ArgumentError("window_partition: grid not padded to window multiples");
    const int c = grid.size(3);
    const int nd = dm.d / win.d, nh = dm.h / win.h, nw = dm.w / win.w;
    const int n = static_cast<int>(win.volume());
    Tensor<T> out({nd * nh * nw, n, c});
    int wi = 0;
    for (int bz = 0; bz < nd; ++bz)
        for (int by = 0; by < nh; ++by)
            for (int bx = 0; bx < nw; ++bx, ++wi) {
                int ti = 0;
                for (int z = 0; z < win.d; ++z)
                    for (int y = 0; y < win.h; ++y)
                        for (int x = 0; x < win.w; ++x, ++ti)
                            for (int ch = 0; ch < c; ++ch)
                                out(wi, ti, ch) =
                                    grid(bz * win.d + z, by * win.h + y, bx * win.w + x, ch);
            }
    return out;
}

/// Inverse of window_partition.
template <typename T>
Tensor<T> window_reverse(const Tensor<T>& windows, const Dims3& win, const Dims3& dims) {
    const int c = windows.size(2);
    const int nd = dims.d / win.d, nh = dims.h / win.h, nw = dims.w / win.w;
    if (nd * nh * nw != windows.size(0))
        throw ArgumentError("window_reverse: window count mismatch");
    Tensor<T> grid({dims.d, dims.h, dims.w, c});
    int wi = 0;
    for (int bz = 0; bz < nd; ++bz)
        for (int by = 0; by < nh; ++by)
            for (int bx = 0; bx < nw; ++bx, ++wi) {
                int ti = 0;
                for (int z = 0; z < win.d; ++z)
                    for (int y = 0; y < win.h; ++y)
                        for (int x = 0; x < win.w; ++x, ++ti)
                            for (int ch = 0; ch < c; ++ch)
                                grid(bz * win.d + z, by * win.h + y, bx * win.w + x, ch) =
                                    windows(wi, ti, ch);
            }
    return grid;
}

/// Flat relative-position-bias indices for all token pairs in a window.
/// Table covers (2wd-1)(2wh-1)(2ww-1) offsets.
inline std::vector<int> relative_position_index(const Dims3& win) {
    const int n = static_cast<int>(win.volume());
    std::vector<std::array<int, 3>> coords;
    coords.reserve(n);
    for (int z = 0; z < win.d; ++z)
        for (int y = 0; y < win.h; ++y)
            for (int x = 0; x < win.w; ++x) coords.push_back({z, y, x});
    const int rh = 2 * win.h - 1, rw = 2 * win.w - 1;
    std::vector<int> idx(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const int dz = coords[i][0] - coords[j][0] + win.d - 1;
            const int dy = coords[i][1] - coords[j][1] + win.h - 1;
            const int dx = coords[i][2] - coords[j][2] + win.w - 1;
            idx[static_cast<std::size_t>(i) * n + j] = (dz * rh + dy) * rw + dx;
        }
    return idx;
}

inline int relative_table_size(const Dims3& win) {
    return (2 * win.d - 1) * (2 * win.h - 1) * (2 * win.w - 1);
}

/// Attention mask for shifted windows: [n_windows, n, n] of 0 or -inf.
/// Region labels are assigned in rolled coordinates; tokens wrapped together
/// from different regions by the cyclic shift must not attend to each other.
template <typename T>
Tensor<T> shifted_mask(const Dims3& dims, const Dims3& win, const Dims3& shift) {
    const T neg_inf = -std::numeric_limits<T>::infinity();
    // Region label per rolled axis position: 0 before the last window,
    // 1 for the unwrapped tail of the last window, 2 for the wrapped part.
    auto axis_region = [](int pos, int len, int w, int s) -> int {
        if (s == 0) return 0;
        if (pos < len - w) return 0;
        return pos < len - s ? 1 : 2;
    };
    Tensor<T> labels({dims.d, dims.h, dims.w, 1});
    for (int z = 0; z < dims.d; ++z)
        for (int y = 0; y < dims.h; ++y)
            for (int x = 0; x < dims.w; ++x) {
                const int rz = axis_region(z, dims.d, win.d, shift.d);
                const int ry = axis_region(y, dims.h, win.h, shift.h);
                const int rx = axis_region(x, dims.w, win.w, shift.w);
                labels(z, y, x, 0) = static_cast<T>((rz * 3 + ry) * 3 + rx);
            }
    Tensor<T> win_labels = window_partition(labels, win);
    const int nw = win_labels.size(0);
    const int n = win_labels.size(1);
    Tensor<T> mask({nw, n, n});
    for (int w = 0; w < nw; ++w)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                mask(w, i, j) = (win_labels(w, i, 0) == win_labels(w, j, 0)) ? T(0) : neg_inf;
    return mask;
}

}  // namespace hsn::nn
