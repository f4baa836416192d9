#include "netisac/rng.hpp"

#include <cmath>

namespace netisac {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::string_view purpose, std::uint64_t a,
                          std::uint64_t b) {
    std::uint64_t h = splitmix64(master);
    h = splitmix64(h ^ fnv1a(purpose));
    h = splitmix64(h ^ a);
    h = splitmix64(h ^ (b + 0x632be59bd9b4e019ULL));
    return h;
}

cplx Rng::complex_normal(double variance) {
    const double s = std::sqrt(variance / 2.0);
    const double re = normal();
    const double im = normal();
    return {s * re, s * im};
}

CVec Rng::complex_normal_vec(Eigen::Index n, double variance) {
    CVec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = complex_normal(variance);
    return v;
}

CMat Rng::complex_normal_mat(Eigen::Index rows, Eigen::Index cols, double variance) {
    CMat m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = complex_normal(variance);
    return m;
}

}  // namespace netisac
