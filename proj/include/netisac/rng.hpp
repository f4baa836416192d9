#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "netisac/types.hpp"

namespace netisac {

/// Derives an independent substream seed for (purpose, a, b) from a master
/// seed. Adding a new purpose never perturbs the draws of existing ones.
std::uint64_t derive_seed(std::uint64_t master, std::string_view purpose, std::uint64_t a = 0,
                          std::uint64_t b = 0);

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
    double normal() { return normal_(engine_); }
    int index(int n) { return std::uniform_int_distribution<int>(0, n - 1)(engine_); }

    /// Circularly-symmetric complex Gaussian with E|z|^2 = variance.
    cplx complex_normal(double variance = 1.0);

    CVec complex_normal_vec(Eigen::Index n, double variance = 1.0);
    CMat complex_normal_mat(Eigen::Index rows, Eigen::Index cols, double variance = 1.0);

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace netisac
