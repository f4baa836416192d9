#pragma once

#include <vector>

#include "netisac/topology.hpp"
#include "netisac/types.hpp"

namespace netisac {

struct EstimatorParams {
    std::vector<double> mu;  // per-user step sizes
    double eta1 = 0.0;       // l1 weight
    double eta2 = 0.0;       // l2,1 weight
    int block_length = 1;    // K1, the length of each l2,1 block

    static EstimatorParams uniform(int users, double mu, double eta1, double eta2, int block_length);
    void validate(int users, int K) const;
};

/// Per-user input stream: y(i) and the regressor u_i stored as column i of U.
struct UserStream {
    CVec y;
    CMat U;

    int horizon() const { return static_cast<int>(y.size()); }
};

/// estimates[r] is the K x N network state after recorded step r; index 0 is
/// the initial state. Centralized runs store a single column.
struct Trajectory {
    std::vector<CMat> estimates;
    std::vector<int> iterations;

    const CMat& final_estimates() const { return estimates.back(); }
};

/// (y - u^H x) / (|x|^2 + 1)
cplx weighted_error(cplx y, const CVec& u, const CVec& x);

/// Gradient of |y - u^H x|^2 / (|x|^2 + 1) packed as d/dRe + i d/dIm:
/// -2 eps (u + conj(eps) x).
CVec instantaneous_gradient(cplx y, const CVec& u, const CVec& x);

/// x_k / |x_k|, 0 where x_k = 0.
CVec sign_vec(const CVec& x);

/// Per block: x_b / |x_b|, 0 on zero blocks.
CVec block_shrink_direction(const CVec& x, int block_length);

CVec adapt(const CVec& x, cplx y, const CVec& u, double mu, double eta1, double eta2, int block_length);

/// sum_l C(l, n) phi_l over the neighbours of n (nonzero entries of column n).
CVec combine(const std::vector<CVec>& phis, const CombinationMatrix& C, int n);

struct RunOptions {
    Backend backend = Backend::OpenMP;
    int record_stride = 1;  // record every k-th iteration (and always the last)
};

/// Adapt-then-combine diffusion over T = inputs[n].horizon() iterations.
Trajectory run_distributed(const std::vector<UserStream>& inputs, const CombinationMatrix& C,
                           const EstimatorParams& params, const CVec& x_init, const RunOptions& opt = {});

/// Single-state recursion over the pooled stream. Samples are consumed
/// round-robin over users at each time step; one record per time step. Uses
/// mu[0].
Trajectory run_centralized(const std::vector<UserStream>& inputs, const EstimatorParams& params, const CVec& x_init,
                           const RunOptions& opt = {});

}  // namespace netisac

namespace netisac {

/// (1/N) sum_n |x0 - x_n|^2 over the columns of `estimates` (linear scale).
double network_msd(const CMat& estimates, const CVec& x0);

}  // namespace netisac
