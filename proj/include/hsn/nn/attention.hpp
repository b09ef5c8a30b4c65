#pragma once

#include <cmath>
#include <limits>

#include "hsn/nn/gemm.hpp"
#include "hsn/nn/param.hpp"
#include "hsn/nn/windows.hpp"

namespace hsn::nn {

/// Multi-head self-attention inside one window batch:
/// softmax(Q K^T / sqrt(d_head) + bias + mask) V, heads concatenated, output-projected.
/// Heads occupy contiguous channel blocks; projections carry no bias terms.
template <typename T>
class WindowMSA {
public:
    WindowMSA() = default;

    WindowMSA(int channels, int heads, const Dims3& win, Rng& rng)
        : c_(channels), heads_(heads), win_(win) {
        if (channels % heads != 0) throw ConfigError("WindowMSA: heads must divide channels");
        dh_ = channels / heads;
        wq = make_proj(rng);
        wk = make_proj(rng);
        wv = make_proj(rng);
        wo = make_proj(rng);
        bias_table = Parameter<T>({heads, relative_table_size(win)}, FilterKind::Whole, false);
        rel_idx_ = relative_position_index(win);
    }

    /// windows: [n_windows, win_volume, C]; mask: [n_windows, n, n] or nullptr.
    Tensor<T> forward(const Tensor<T>& windows, const Tensor<T>* mask) {
        const int nw = windows.size(0);
        const int n = windows.size(1);
        if (n != static_cast<int>(win_.volume()))
            throw ArgumentError("WindowMSA: token count != window volume");
        x_ = windows;
        const int rows = nw * n;
        q_ = project(windows, wq, rows);
        k_ = project(windows, wk, rows);
        v_ = project(windows, wv, rows);
        attn_ = Tensor<T>({nw, heads_, n, n});
        o_ = Tensor<T>({nw, n, c_});

        const T scale = T(1) / std::sqrt(static_cast<T>(dh_));
        for (int w = 0; w < nw; ++w) {
            for (int h = 0; h < heads_; ++h) {
                auto Q = head_block(q_, w, h, n);
                auto K = head_block(k_, w, h, n);
                auto V = head_block(v_, w, h, n);
                EMat<T> scores = (Q * K.transpose()) * scale;
                const T* bt = bias_table.v().data() + static_cast<std::int64_t>(h) * bias_table.v().size(1);
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j) {
                        scores(i, j) += bt[rel_idx_[static_cast<std::size_t>(i) * n + j]];
                        if (mask) scores(i, j) += (*mask)(w, i, j);
                    }
                softmax_rows(scores);
                T* ap = attn_.data() + ((static_cast<std::int64_t>(w) * heads_ + h) * n) * n;
                EMap<T>(ap, n, n) = scores;
                head_block(o_, w, h, n).noalias() = scores * V;
            }
        }
        Tensor<T> y({nw, n, c_});
        gemm(o_.data(), wo.v().data(), y.data(), rows, c_, c_, false, true);
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gy) {
        const int nw = x_.size(0);
        const int n = x_.size(1);
        const int rows = nw * n;

        // y = o Wo^T
        gemm(gy.data(), o_.data(), wo.g().data(), c_, rows, c_, true, false, true);
        Tensor<T> go({nw, n, c_});
        gemm(gy.data(), wo.v().data(), go.data(), rows, c_, c_, false, false);

        Tensor<T> gq({nw, n, c_}), gk({nw, n, c_}), gv({nw, n, c_});
        const T scale = T(1) / std::sqrt(static_cast<T>(dh_));
        for (int w = 0; w < nw; ++w) {
            for (int h = 0; h < heads_; ++h) {
                auto Q = head_block(q_, w, h, n);
                auto K = head_block(k_, w, h, n);
                auto V = head_block(v_, w, h, n);
                auto GO = head_block(go, w, h, n);
                const T* ap = attn_.data() + ((static_cast<std::int64_t>(w) * heads_ + h) * n) * n;
                ECMap<T> A(ap, n, n);

                EMat<T> gA = GO * V.transpose();
                head_block(gv, w, h, n).noalias() = A.transpose() * GO;

                // softmax backward: gS = A .* (gA - rowsum(gA .* A))
                EMat<T> gS(n, n);
                for (int i = 0; i < n; ++i) {
                    T dot = 0;
                    for (int j = 0; j < n; ++j) dot += gA(i, j) * A(i, j);
                    for (int j = 0; j < n; ++j) gS(i, j) = A(i, j) * (gA(i, j) - dot);
                }

                T* gbt = bias_table.g().data() + static_cast<std::int64_t>(h) * bias_table.v().size(1);
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j)
                        gbt[rel_idx_[static_cast<std::size_t>(i) * n + j]] += gS(i, j);

                head_block(gq, w, h, n).noalias() = (gS * K) * scale;
                head_block(gk, w, h, n).noalias() = (gS.transpose() * Q) * scale;
            }
        }

        Tensor<T> gx({nw, n, c_});
        project_backward(gq, wq, rows, gx, false);
        project_backward(gk, wk, rows, gx, true);
        project_backward(gv, wv, rows, gx, true);
        return gx;
    }

    void collect(ParamRegistry<T>& reg, const std::string& prefix) const {
        reg.add(prefix + ".wq", wq);
        reg.add(prefix + ".wk", wk);
        reg.add(prefix + ".wv", wv);
        reg.add(prefix + ".wo", wo);
        reg.add(prefix + ".bias_table", bias_table);
    }

    int heads() const { return heads_; }
    const Dims3& window() const { return win_; }
    /// Attention probabilities of the last forward pass: [nw, heads, n, n].
    const Tensor<T>& last_attention() const { return attn_; }

    Parameter<T> wq, wk, wv, wo;
    Parameter<T> bias_table;

private:
    Parameter<T> make_proj(Rng& rng) {
        Parameter<T> p({c_, c_}, FilterKind::MatrixRow, true);
        init_trunc_normal(p.v(), rng);
        return p;
    }

    Tensor<T> project(const Tensor<T>& x, const Parameter<T>& w, int rows) const {
        Tensor<T> y({x.size(0), x.size(1), c_});
        gemm(x.data(), w.v().data(), y.data(), rows, c_, c_, false, true);
        return y;
    }

    void project_backward(const Tensor<T>& gproj, Parameter<T>& w, int rows,
                          Tensor<T>& gx, bool accumulate) {
        gemm(gproj.data(), x_.data(), w.g().data(), c_, rows, c_, true, false, true);
        gemm(gproj.data(), w.v().data(), gx.data(), rows, c_, c_, false, false, accumulate);
    }

    /// View of one head's [n, d_head] block inside a [nw, n, C] tensor.
    Eigen::Map<EMat<T>, 0, Eigen::OuterStride<>> head_block(Tensor<T>& t, int w, int h, int n) const {
        T* p = t.data() + static_cast<std::int64_t>(w) * n * c_ + static_cast<std::int64_t>(h) * dh_;
        return {p, n, dh_, Eigen::OuterStride<>(c_)};
    }
    Eigen::Map<const EMat<T>, 0, Eigen::OuterStride<>> head_block(const Tensor<T>& t, int w, int h,
                                                                  int n) const {
        const T* p = t.data() + static_cast<std::int64_t>(w) * n * c_ + static_cast<std::int64_t>(h) * dh_;
        return {p, n, dh_, Eigen::OuterStride<>(c_)};
    }

    static void softmax_rows(EMat<T>& m) {
        for (int i = 0; i < m.rows(); ++i) {
            T mx = -std::numeric_limits<T>::infinity();
            for (int j = 0; j < m.cols(); ++j) mx = std::max(mx, m(i, j));
            T sum = 0;
            for (int j = 0; j < m.cols(); ++j) {
                m(i, j) = std::exp(m(i, j) - mx);
                sum += m(i, j);
            }
            const T inv = T(1) / sum;
            for (int j = 0; j < m.cols(); ++j) m(i, j) *= inv;
        }
    }

    int c_ = 0, heads_ = 1, dh_ = 0;
    Dims3 win_;
    std::vector<int> rel_idx_;
    Tensor<T> x_, q_, k_, v_, o_, attn_;
};

}  // namespace hsn::nn
