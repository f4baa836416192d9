#include "netisac/theory.hpp"

#include <atomic>
#include <cmath>
#include <iostream>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "netisac/parallel.hpp"

namespace netisac {

CMat kron(const CMat& a, const CMat& b) {
    CMat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index j = 0; j < a.cols(); ++j)
        for (Eigen::Index i = 0; i < a.rows(); ++i)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

CVec vec(const CMat& x) { return Eigen::Map<const CVec>(x.data(), x.size()); }

CMat unvec(const CVec& v, Eigen::Index rows, Eigen::Index cols) {
    if (v.size() != rows * cols) throw ParameterError("unvec: size mismatch");
    return Eigen::Map<const CMat>(v.data(), rows, cols);
}

std::vector<CMat> covariance_R(const ChannelSet& ch, const CVec& w, double se_power) {
    std::vector<CMat> R;
    R.reserve(ch.users());
    for (const auto& h : ch.h) {
        const CVec u = h.conjugate().cwiseProduct(ch.G.adjoint() * w);
        R.push_back(se_power * u * u.adjoint());
    }
    return R;
}

std::vector<CMat> covariance_R_fading(int K, int N, const CVec& w, const ChannelModel& model, double se_power) {
    std::vector<CMat> R;
    for (int n = 0; n < N; ++n)
        R.push_back(se_power * w.squaredNorm() * model.user_path_loss(n) * CMat::Identity(K, K));
    return R;
}

CMat hessian_blocks(const std::vector<CMat>& R, const CVec& x0) {
    const int N = static_cast<int>(R.size());
    const Eigen::Index K = x0.size();
    const double d = x0.squaredNorm() + 1.0;
    CMat H = CMat::Zero(K * N, K * N);
    for (int n = 0; n < N; ++n) H.block(n * K, n * K, K, K) = 2.0 * R[n] / d;
    return H;
}

CMat combination_operator(const CombinationMatrix& C, int K) {
    return kron(C.adjoint().cast<cplx>(), CMat::Identity(K, K));
}

RVec step_diagonal(const std::vector<double>& mu, int K) {
    RVec D(static_cast<Eigen::Index>(mu.size()) * K);
    for (std::size_t n = 0; n < mu.size(); ++n) D.segment(n * K, K).setConstant(mu[n]);
    return D;
}

CMat channel_aggregate(const ChannelSet& ch) {
    const int N = ch.users(), K = ch.pixels(), M = ch.antennas();
    CMat U = CMat::Zero(K * N, M * N);
    for (int n = 0; n < N; ++n) U.block(n * K, n * M, K, M) = ch.h[n].conjugate().asDiagonal() * ch.G.adjoint();
    return U;
}

GradientErrorCov gradient_error_cov(const std::vector<CMat>& R, const CVec& x0, double sigma_in2) {
    const int N = static_cast<int>(R.size());
    const Eigen::Index K = x0.size();
    const double d = x0.squaredNorm() + 1.0;
    GradientErrorCov out;
    out.alpha1 = 4.0 * sigma_in2 / d;
    const CMat floor = sigma_in2 * CMat::Identity(K, K) - 3.0 * sigma_in2 * x0 * x0.adjoint() / d;
    out.B = CMat::Zero(K * N, K * N);
    out.Q = CMat::Zero(K * N, K * N);
    for (int n = 0; n < N; ++n) {
        out.B.block(n * K, n * K, K, K) = out.alpha1 * floor;
        out.Q.block(n * K, n * K, K, K) = out.alpha1 * (R[n] + floor);
    }
    out.q = vec(out.Q);
    return out;
}

CVec factored_q(const ChannelSet& ch, const CVec& w, const CVec& x0, double sigma_in2, double se_power) {
    const int N = ch.users();
    const CMat U = channel_aggregate(ch);
    const CMat IW = kron(CMat::Identity(N, N), w * w.adjoint());
    const double d = x0.squaredNorm() + 1.0;
    const double alpha1 = 4.0 * sigma_in2 / d;
    const Eigen::Index K = x0.size();
    const CMat B = alpha1 * kron(CMat::Identity(N, N), sigma_in2 * CMat::Identity(K, K) -
                                                           3.0 * sigma_in2 * x0 * x0.adjoint() / d);
    return alpha1 * se_power * (kron(U.conjugate(), U) * vec(IW)) + vec(B);
}

CMat transition_matrix(const CMat& H, const RVec& D, const CMat& O) {
    const Eigen::Index n = H.rows();
    return (CMat::Identity(n, n) - D.cast<cplx>().asDiagonal() * H) * O.adjoint();
}

CMat assemble_P(const CMat& A) {
    if (A.rows() > kDenseCap) throw ParameterError("dense P requested beyond KN = " + std::to_string(kDenseCap));
    return kron(A.conjugate(), A);
}

CMat factored_P(const ChannelSet& ch, const CVec& w, const CVec& x0, const RVec& D, const CMat& O, double se_power) {
    const int N = ch.users();
    const CMat U = channel_aggregate(ch);
    const double d = x0.squaredNorm() + 1.0;
    const CMat H = (2.0 * se_power / d) * U * kron(CMat::Identity(N, N), w * w.adjoint()) * U.adjoint();
    return assemble_P(transition_matrix(H, D, O));
}

CMat assemble_V(const RVec& D, const CMat& O) {
    if (O.rows() > kDenseCap) throw ParameterError("dense V requested beyond KN = " + std::to_string(kDenseCap));
    const CMat M = D.cast<cplx>().asDiagonal() * O.adjoint();
    return kron(M.conjugate(), M);
}

CMat apply_P(const CMat& A, const CMat& X, Backend backend) {
    const Eigen::Index n = A.rows();
    CMat out(n, n);
    const CMat Ah = A.adjoint();
    const bool par = backend == Backend::OpenMP;
#pragma omp parallel for schedule(static) num_threads(par ? thread_count() : 1) if (par)
    for (Eigen::Index j = 0; j < n; ++j) {
        const CVec t = X * Ah.col(j);
        out.col(j) = A * t;
    }
    return out;
}

namespace {

double spectral_radius(const CMat& m) {
    if (m.size() == 0) return 0.0;
    Eigen::ComplexEigenSolver<CMat> es(m, false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

StabilityReport stability_check(const CMat& H, const RVec& D, const CMat& O, int block) {
    StabilityReport r;
    const CMat DH = D.cast<cplx>().asDiagonal() * H;
    const Eigen::Index n = H.rows();
    if (block > 0 && n % block == 0) {
        for (Eigen::Index b = 0; b < n; b += block) {
            const CMat blk = DH.block(b, b, block, block);
            r.rho_DH = std::max(r.rho_DH, spectral_radius(blk));
            r.rho_I_minus_DH = std::max(r.rho_I_minus_DH, spectral_radius(CMat::Identity(block, block) - blk));
        }
    } else {
        r.rho_DH = spectral_radius(DH);
        r.rho_I_minus_DH = spectral_radius(CMat::Identity(n, n) - DH);
    }
    r.rho_A = spectral_radius(transition_matrix(H, D, O));
    r.stable = r.rho_A < 1.0 - 1e-10;
    return r;
}

CMat solve_stein(const CMat& A, SolveMethod method, double tol, int max_iter) {
    const Eigen::Index n = A.rows();
    const CMat I = CMat::Identity(n, n);
    if (method == SolveMethod::Auto) method = n <= 32 ? SolveMethod::Dense : SolveMethod::Doubling;

    CMat Y;
    switch (method) {
        case SolveMethod::Dense: {
            const CMat P = assemble_P(A);
            const CMat IP = CMat::Identity(P.rows(), P.cols()) - P;
            Eigen::PartialPivLU<CMat> lu(IP);
            Y = unvec(lu.solve(vec(I)), n, n);
            break;
        }
        case SolveMethod::FixedPoint: {
            Y = I;
            int it = 0;
            for (; it < max_iter; ++it) {
                CMat next = I + apply_P(A, Y);
                const double delta = (next - Y).norm();
                Y = std::move(next);
                if (delta <= tol * Y.norm()) break;
            }
            if (it == max_iter) throw StabilityError("fixed-point Stein iteration did not converge");
            break;
        }
        case SolveMethod::Doubling:
        default: {
            Y = I;
            CMat Ak = A;
            int it = 0;
            for (; it < 200; ++it) {
                const CMat inc = apply_P(Ak, Y);
                Y += inc;
                if (!Y.allFinite()) throw StabilityError("Stein doubling produced non-finite values");
                if (inc.norm() <= tol * Y.norm()) break;
                Ak = Ak * Ak;
            }
            if (it == 200) throw StabilityError("Stein doubling did not converge");
            break;
        }
    }
    if (!Y.allFinite()) throw StabilityError("steady-state solve is singular");
    return Y;
}

TheoryWorkspace TheoryWorkspace::build(const TheoryInputs& in, bool check_stability) {
    TheoryWorkspace ws;
    ws.K = static_cast<int>(in.x0.size());
    ws.N = static_cast<int>(in.C.rows());
    if (static_cast<int>(in.mu.size()) != ws.N) throw ParameterError("need one step size per user");
    ws.R = in.fading ? covariance_R_fading(ws.K, ws.N, in.w, in.model, in.se_power)
                     : covariance_R(in.channels, in.w, in.se_power);
    if (static_cast<int>(ws.R.size()) != ws.N) throw ParameterError("channel set does not match the network");
    ws.H = hessian_blocks(ws.R, in.x0);
    ws.D = step_diagonal(in.mu, ws.K);
    ws.O = combination_operator(in.C, ws.K);
    ws.noise = gradient_error_cov(ws.R, in.x0, in.sigma_in2);
    ws.A = transition_matrix(ws.H, ws.D, ws.O);
    if (check_stability) ws.stability = stability_check(ws.H, ws.D, ws.O, ws.K);
    return ws;
}

MsePrediction steady_state_mse(const TheoryWorkspace& ws, double alpha_bound, SolveMethod method) {
    MsePrediction p;
    p.alpha_bound = alpha_bound;
    p.stability = ws.stability;
    if (!p.stability.stable)
        throw StabilityError("unstable step sizes: spectral radius of (I - DH) O^H is " +
                             std::to_string(p.stability.rho_A));
    const Eigen::Index n = ws.A.rows();
    if (method == SolveMethod::Auto) method = n <= 32 ? SolveMethod::Dense : SolveMethod::Doubling;
    p.method = method == SolveMethod::Dense ? "dense" : method == SolveMethod::FixedPoint ? "fixed_point" : "doubling";
    const CMat Y = solve_stein(ws.A, method);
    const CMat M = ws.D.cast<cplx>().asDiagonal() * ws.O.adjoint();
    p.mse = (ws.noise.Q * M * Y * M.adjoint()).trace().real() + alpha_bound;
    p.mse_per_user = p.mse / ws.N;
    return p;
}

F2Model theory_F2_model(const TheoryInputs& in, double shift) {
    const TheoryWorkspace ws = TheoryWorkspace::build(in, false);
    const int K = ws.K, N = ws.N;
    F2Model f;
    f.shift = shift;
    f.regularized = shift > 0.0;
    static std::atomic<bool> warned{false};
    if (f.regularized && !warned.exchange(true)) {
        std::cerr << "netisac: theory_F2 uses a Tikhonov shift of " << shift
                  << " because I - conj(O^H) (x) O^H is singular for a stochastic C\n";
    }
    // O^H = C (x) I_K, so Y0 = Z (x) I_K with Z = I + C Z C^T / (1 + shift), and
    // D O^H Y0 O D = (diag(mu) C Z C^T diag(mu)) (x) I_K.
    const CMat Cs = in.C.cast<cplx>() / std::sqrt(1.0 + shift);
    const CMat Z = solve_stein(Cs, SolveMethod::Doubling, 1e-14);
    RVec mu(N);
    for (int n = 0; n < N; ++n) mu(n) = in.mu[n];
    const CMat CZC = in.C.cast<cplx>() * Z * in.C.transpose().cast<cplx>();
    f.c = 0.0;
    for (int n = 0; n < N; ++n)
        f.c += mu(n) * mu(n) * CZC(n, n).real() * ws.noise.B.block(n * K, n * K, K, K).trace().real();

    const double a = ws.noise.alpha1 * in.se_power;
    const int Mant = static_cast<int>(in.w.size());
    f.S = CMat::Zero(Mant, Mant);
    for (int n = 0; n < N; ++n) {
        const double snn = mu(n) * mu(n) * CZC(n, n).real();  // S_nn = snn I_K
        if (in.fading) {
            f.S += a * in.model.user_path_loss(n) * snn * K * CMat::Identity(Mant, Mant);
        } else {
            const CMat Un = in.channels.h[n].conjugate().asDiagonal() * in.channels.G.adjoint();
            f.S += a * snn * Un.adjoint() * Un;
        }
    }
    f.S = 0.5 * (f.S + f.S.adjoint()).eval();
    return f;
}

double theory_F2(const TheoryInputs& in, double shift) {
    return theory_F2_model(in, shift).evaluate(in.w * in.w.adjoint());
}

double step1_input_variance(const ChannelSet& ch, const CVec& f, double sigma_o2, double sd_power) {
    double acc = 0.0;
    for (const auto& h : ch.h) acc += h.conjugate().cwiseProduct(ch.G.adjoint() * f).squaredNorm();
    return sigma_o2 + sd_power * acc / (static_cast<double>(ch.users()) * ch.pixels());
}

double default_step_size(const std::vector<CMat>& R, const CVec& x0) {
    double tmax = 0.0;
    const double d = x0.squaredNorm() + 1.0;
    for (const auto& r : R) tmax = std::max(tmax, 2.0 * r.trace().real() / d);
    if (!(tmax > 0.0)) throw ParameterError("cannot pick a step size: all regressor covariances vanish");
    return 0.5 / tmax;
}

nlohmann::json theory_report(const MsePrediction& p, std::optional<double> f2, const nlohmann::json& params) {
    nlohmann::json j;
    j["spectral_radius"] = {{"DH", p.stability.rho_DH},
                            {"I_minus_DH", p.stability.rho_I_minus_DH},
                            {"transition", p.stability.rho_A},
                            {"stable", p.stability.stable}};
    j["mse_predicted"] = p.mse;
    j["mse_per_user"] = p.mse_per_user;
    j["alpha_bound"] = p.alpha_bound;
    j["solver"] = p.method;
    j["f2"] = f2 ? nlohmann::json(*f2) : nlohmann::json(nullptr);
    j["params"] = params;
    return j;
}

}  // namespace netisac
