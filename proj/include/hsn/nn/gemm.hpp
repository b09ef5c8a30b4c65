#pragma once

#include <Eigen/Core>

namespace hsn::nn {

template <typename T>
using EMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using EMap = Eigen::Map<EMat<T>>;
template <typename T>
using ECMap = Eigen::Map<const EMat<T>>;

/// C[m,n] = A * B with optional transposes and accumulation.
/// A is m x k (or k x m when trans_a), B is k x n (or n x k when trans_b).
template <typename T>
void gemm(const T* a, const T* b, T* c, int m, int k, int n,
          bool trans_a = false, bool trans_b = false, bool accumulate = false) {
    EMap<T> C(c, m, n);
    auto run = [&](const auto& A, const auto& B) {
        if (accumulate)
            C.noalias() += A * B;
        else
            C.noalias() = A * B;
    };
    if (!trans_a && !trans_b)
        run(ECMap<T>(a, m, k), ECMap<T>(b, k, n));
    else if (trans_a && !trans_b)
        run(ECMap<T>(a, k, m).transpose(), ECMap<T>(b, k, n));
    else if (!trans_a && trans_b)
        run(ECMap<T>(a, m, k), ECMap<T>(b, n, k).transpose());
    else
        run(ECMap<T>(a, k, m).transpose(), ECMap<T>(b, n, k).transpose());
}

}  // namespace hsn::nn
