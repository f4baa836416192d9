#include "netisac/sensing_core.hpp"

#include <cmath>

#include "netisac/parallel.hpp"

namespace netisac {

EstimatorParams EstimatorParams::uniform(int users, double mu, double eta1, double eta2, int block_length) {
    EstimatorParams p;
    p.mu.assign(users, mu);
    p.eta1 = eta1;
    p.eta2 = eta2;
    p.block_length = block_length;
    return p;
}

void EstimatorParams::validate(int users, int K) const {
    if (static_cast<int>(mu.size()) != users) throw ParameterError("need one step size per user");
    for (double m : mu)
        if (!(m >= 0.0)) throw ParameterError("step sizes must be nonnegative");
    if (!(eta1 >= 0.0) || !(eta2 >= 0.0)) throw ParameterError("regularization weights must be nonnegative");
    if (block_length < 1 || K % block_length != 0) throw ParameterError("block length must divide K");
}

cplx weighted_error(cplx y, const CVec& u, const CVec& x) { return (y - u.dot(x)) / (x.squaredNorm() + 1.0); }

CVec instantaneous_gradient(cplx y, const CVec& u, const CVec& x) {
    const cplx e = weighted_error(y, u, x);
    return -2.0 * e * (u + std::conj(e) * x);
}

CVec sign_vec(const CVec& x) {
    CVec s(x.size());
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        const double a = std::abs(x(k));
        s(k) = a > 0.0 ? x(k) / a : cplx(0.0);
    }
    return s;
}

CVec block_shrink_direction(const CVec& x, int block_length) {
    CVec s = CVec::Zero(x.size());
    for (Eigen::Index b = 0; b + block_length <= x.size(); b += block_length) {
        const double nb = x.segment(b, block_length).norm();
        if (nb > 0.0) s.segment(b, block_length) = x.segment(b, block_length) / nb;
    }
    return s;
}

CVec adapt(const CVec& x, cplx y, const CVec& u, double mu, double eta1, double eta2, int block_length) {
    const cplx e = weighted_error(y, u, x);
    CVec dir = e * (u + std::conj(e) * x);
    if (eta1 != 0.0) dir -= eta1 * sign_vec(x);
    if (eta2 != 0.0) dir -= eta2 * block_shrink_direction(x, block_length);
    return x + mu * dir;
}

CVec combine(const std::vector<CVec>& phis, const CombinationMatrix& C, int n) {
    CVec out = CVec::Zero(phis.front().size());
    for (int l = 0; l < static_cast<int>(phis.size()); ++l)
        if (C(l, n) != 0.0) out += C(l, n) * phis[l];
    return out;
}

namespace {

void check_inputs(const std::vector<UserStream>& inputs, const CVec& x_init) {
    if (inputs.empty()) throw ParameterError("no input streams");
    const int T = inputs.front().horizon();
    for (const auto& s : inputs) {
        if (s.horizon() != T) throw ParameterError("all users must have the same number of samples");
        if (s.U.cols() != T || (T > 0 && s.U.rows() != x_init.size()))
            throw ParameterError("regressor matrix has the wrong shape");
    }
}

bool recorded(int i, int T, int stride) { return i % stride == 0 || i == T; }

}  // namespace

Trajectory run_distributed(const std::vector<UserStream>& inputs, const CombinationMatrix& C,
                           const EstimatorParams& params, const CVec& x_init, const RunOptions& opt) {
    check_inputs(inputs, x_init);
    const int N = static_cast<int>(inputs.size());
    const int K = static_cast<int>(x_init.size());
    const int T = inputs.front().horizon();
    if (C.rows() != N || C.cols() != N) throw ParameterError("combination matrix does not match user count");
    params.validate(N, K);
    const int stride = std::max(1, opt.record_stride);

    std::vector<CVec> x(N, x_init), phi(N, x_init);
    Trajectory traj;
    auto snapshot = [&](int i) {
        CMat S(K, N);
        for (int n = 0; n < N; ++n) S.col(n) = x[n];
        traj.estimates.push_back(std::move(S));
        traj.iterations.push_back(i);
    };
    snapshot(0);

    const bool par = opt.backend == Backend::OpenMP;
    const int threads = par ? thread_count() : 1;
    for (int i = 0; i < T; ++i) {
#pragma omp parallel num_threads(threads) if (par)
        {
#pragma omp for schedule(static)
            for (int n = 0; n < N; ++n)
                phi[n] = adapt(x[n], inputs[n].y(i), inputs[n].U.col(i), params.mu[n], params.eta1, params.eta2,
                               params.block_length);
#pragma omp for schedule(static)
            for (int n = 0; n < N; ++n) x[n] = combine(phi, C, n);
        }
        for (int n = 0; n < N; ++n)
            if (!x[n].allFinite()) throw DivergenceError(i + 1, n);
        if (recorded(i + 1, T, stride)) snapshot(i + 1);
    }
    return traj;
}

Trajectory run_centralized(const std::vector<UserStream>& inputs, const EstimatorParams& params, const CVec& x_init,
                           const RunOptions& opt) {
    check_inputs(inputs, x_init);
    const int N = static_cast<int>(inputs.size());
    const int T = inputs.front().horizon();
    if (params.mu.empty()) throw ParameterError("no step size");
    if (!(params.eta1 >= 0.0) || !(params.eta2 >= 0.0)) throw ParameterError("regularization weights must be nonnegative");
    const int stride = std::max(1, opt.record_stride);

    CVec x = x_init;
    Trajectory traj;
    traj.estimates.push_back(x);
    traj.iterations.push_back(0);
    for (int i = 0; i < T; ++i) {
        for (int n = 0; n < N; ++n) {
            x = adapt(x, inputs[n].y(i), inputs[n].U.col(i), params.mu[0], params.eta1, params.eta2,
                      params.block_length);
            if (!x.allFinite()) throw DivergenceError(i + 1, n);
        }
        if (recorded(i + 1, T, stride)) {
            traj.estimates.push_back(x);
            traj.iterations.push_back(i + 1);
        }
    }
    return traj;
}

}  // namespace netisac

namespace netisac {

double network_msd(const CMat& estimates, const CVec& x0) {
    return (estimates.colwise() - x0).colwise().squaredNorm().mean();
}

}  // namespace netisac
