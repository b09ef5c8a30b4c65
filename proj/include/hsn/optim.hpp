#pragma once

#include <cmath>
#include <vector>

#include "hsn/nn/param.hpp"

namespace hsn {

/// lr(t) = lr_min + 0.5 (lr_max - lr_min) (1 + cos(pi t / T)).
inline double cosine_lr(int epoch, int total, double lr_max, double lr_min) {
    if (total < 1) throw ArgumentError("cosine_lr: total must be >= 1");
    if (epoch < 0 || epoch > total) throw ArgumentError("cosine_lr: epoch out of range");
    return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + std::cos(M_PI * epoch / total));
}

/// SGD with momentum and decoupled-from-nothing classic weight decay:
/// g' = g + wd * theta; v = momentum * v + g'; theta -= lr * v.
/// Parameters flagged no-decay (norm affines, bias tables, biases) skip wd.
template <typename T>
class SgdOptimizer {
public:
    explicit SgdOptimizer(nn::ParamRegistry<T>& reg, double momentum, double weight_decay)
        : reg_(reg), momentum_(momentum), wd_(weight_decay) {
        velocity_.resize(reg.size());
        for (std::size_t i = 0; i < reg.size(); ++i)
            velocity_[i] = Tensor<T>(reg[i].param.v().shape());
    }

    void step(double lr) {
        for (std::size_t i = 0; i < reg_.size(); ++i) {
            auto& p = reg_[i].param;
            Tensor<T>& v = velocity_[i];
            const T wd = p.decay ? static_cast<T>(wd_) : T(0);
            const T mom = static_cast<T>(momentum_);
            const T rate = static_cast<T>(lr);
            Tensor<T>& theta = p.v();
            Tensor<T>& g = p.g();
            for (std::int64_t j = 0; j < theta.numel(); ++j) {
                const T geff = g[j] + wd * theta[j];
                v[j] = mom * v[j] + geff;
                theta[j] -= rate * v[j];
            }
        }
    }

private:
    nn::ParamRegistry<T>& reg_;
    double momentum_;
    double wd_;
    std::vector<Tensor<T>> velocity_;
};

}  // namespace hsn
