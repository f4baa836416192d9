#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "netisac/scene.hpp"
#include "netisac/topology.hpp"
#include "netisac/types.hpp"

namespace netisac {

/// Column-major Kronecker product.
CMat kron(const CMat& a, const CMat& b);
CVec vec(const CMat& x);
CMat unvec(const CVec& v, Eigen::Index rows, Eigen::Index cols);

/// R_l = |s_e|^2 diag(conj h_l) G^H w w^H G diag(h_l), the covariance of the clean
/// regressor for a fixed channel.
std::vector<CMat> covariance_R(const ChannelSet& ch, const CVec& w, double se_power = 1.0);

/// Regressor covariance averaged over i.i.d. Rayleigh channels redrawn every
/// slot: |s_e|^2 |w|^2 pl_l I_K.
std::vector<CMat> covariance_R_fading(int K, int N, const CVec& w, const ChannelModel& model,
                                      double se_power = 1.0);

/// Block-diagonal KN x KN matrix with blocks 2 R_l / (|x0|^2 + 1).
CMat hessian_blocks(const std::vector<CMat>& R, const CVec& x0);

/// O = C^H (x) I_K.
CMat combination_operator(const CombinationMatrix& C, int K);

/// D = diag(mu_n I_K).
RVec step_diagonal(const std::vector<double>& mu, int K);

/// U = blkdiag(diag(conj h_n) G^H), KN x MN.
CMat channel_aggregate(const ChannelSet& ch);

struct GradientErrorCov {
    CMat Q;         // KN x KN, blocks alpha1 (R_l + s I - 3 s x0 x0^H / d)
    CVec q;         // vec(Q)
    CMat B;         // alpha1 I_N (x) (s I - 3 s x0 x0^H / d)
    double alpha1;  // 4 s / d
};

GradientErrorCov gradient_error_cov(const std::vector<CMat>& R, const CVec& x0, double sigma_in2);

/// q from the factored form alpha1 |s_e|^2 (conj U (x) U) vec(I_N (x) w w^H) + vec(B).
CVec factored_q(const ChannelSet& ch, const CVec& w, const CVec& x0, double sigma_in2, double se_power = 1.0);

/// A = (I - D H) O^H.
CMat transition_matrix(const CMat& H, const RVec& D, const CMat& O);

enum class OperatorMode { Dense, MatrixFree };

/// Dense P = conj(A) (x) A; throws ParameterError if KN > kDenseCap.
inline constexpr int kDenseCap = 64;
CMat assemble_P(const CMat& A);
/// P built with H taken from the channel aggregate: H = (2 |s_e|^2 / d) U (I_N (x) w w^H) U^H.
CMat factored_P(const ChannelSet& ch, const CVec& w, const CVec& x0, const RVec& D, const CMat& O,
                double se_power = 1.0);
/// V = conj(D O^H) (x) D O^H.
CMat assemble_V(const RVec& D, const CMat& O);

/// Matrix-free P vec(X) = vec(A X A^H). Columns are computed independently, so
/// the two backends agree bit for bit.
CMat apply_P(const CMat& A, const CMat& X, Backend backend = Backend::OpenMP);

struct StabilityReport {
    double rho_DH = 0.0;
    double rho_I_minus_DH = 0.0;
    double rho_A = 0.0;  // spectral radius of (I - DH) O^H; the contract
    bool stable = false;
};

/// Stable iff rho(A) < 1 - 1e-10, which makes I - P invertible (eigenvalues of
/// P are products of eigenvalues of A and their conjugates).
/// block > 0 declares H block diagonal with that block size, so the DH spectra
/// are taken per block.
StabilityReport stability_check(const CMat& H, const RVec& D, const CMat& O, int block = 0);

enum class SolveMethod { Auto, Dense, FixedPoint, Doubling };

/// Solves Y = I + A Y A^H (the vectorized (I - P)^-1 vec(I)).
CMat solve_stein(const CMat& A, SolveMethod method = SolveMethod::Auto, double tol = 1e-13, int max_iter = 200000);

struct TheoryInputs {
    ChannelSet channels;           // snapshot used for R_l (static model)
    bool fading = false;           // use covariance_R_fading instead
    ChannelModel model;            // path loss for the fading covariance
    CVec w;
    CVec x0;
    CombinationMatrix C;
    std::vector<double> mu;
    double sigma_in2 = 0.0;
    double se_power = 1.0;
};

struct TheoryWorkspace {
    int K = 0;
    int N = 0;
    std::vector<CMat> R;
    CMat H;
    RVec D;
    CMat O;
    GradientErrorCov noise;
    CMat A;
    StabilityReport stability;  // filled by build unless skipped

    static TheoryWorkspace build(const TheoryInputs& in, bool check_stability = true);
};

struct MsePrediction {
    double mse = 0.0;           // q^H V (I - P)^-1 vec(I) + alpha
    double mse_per_user = 0.0;  // mse / N
    double alpha_bound = 0.0;
    StabilityReport stability;
    std::string method;
};

MsePrediction steady_state_mse(const TheoryWorkspace& ws, double alpha_bound = 0.0,
                               SolveMethod method = SolveMethod::Auto);

struct F2Model {
    CMat S;          // M x M slope: F2(W) = tr(W S) + c
    double c = 0.0;  // noise floor, F2 at W = 0
    double shift = 0.0;
    bool regularized = false;

    double evaluate(const CMat& W) const { return (W * S).trace().real() + c; }
};

/// Approximate sensing metric with P replaced by conj(O^H) (x) O^H. That
/// operator has eigenvalue 1 (C is stochastic), so (1 + shift) Y = I + O^H Y O
/// is solved instead and `regularized` is set.
F2Model theory_F2_model(const TheoryInputs& in, double shift = 1e-6);
double theory_F2(const TheoryInputs& in, double shift = 1e-6);

/// sigma_in^2 for step-1 predictions: sigma_o^2 plus the per-entry variance of
/// the data-symbol interference e = s_d diag(conj h_n) G^H f.
double step1_input_variance(const ChannelSet& ch, const CVec& f, double sigma_o2, double sd_power = 1.0);

/// Largest uniform step size with a x0.5 safety margin: 0.5 / max_l tr(H_l).
double default_step_size(const std::vector<CMat>& R, const CVec& x0);

nlohmann::json theory_report(const MsePrediction& p, std::optional<double> f2, const nlohmann::json& params);

}  // namespace netisac
