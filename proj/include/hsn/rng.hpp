#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace hsn {

/// Seeded RNG wrapper shared by weight init, data generation and direction sampling.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double normal(double mean = 0.0, double stddev = 1.0) {
        std::normal_distribution<double> d(mean, stddev);
        return d(gen_);
    }

    /// Normal truncated to +-2 stddev (resampling).
    double trunc_normal(double stddev) {
        for (;;) {
            double v = normal(0.0, stddev);
            if (std::abs(v) <= 2.0 * stddev) return v;
        }
    }

    double uniform(double lo, double hi) {
        std::uniform_real_distribution<double> d(lo, hi);
        return d(gen_);
    }

    /// Uniform integer in [lo, hi] inclusive.
    int uniform_int(int lo, int hi) {
        std::uniform_int_distribution<int> d(lo, hi);
        return d(gen_);
    }

    std::mt19937_64& engine() { return gen_; }

private:
    std::mt19937_64 gen_;
};

}  // namespace hsn
