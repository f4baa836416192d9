#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "netisac/theory.hpp"
#include "netisac/waveform.hpp"

namespace netisac {

/// Lifted variable Z = blkdiag(W, F). Off-diagonal blocks are structurally zero.
struct Lifted {
    CMat W;
    CMat F;

    double trace() const { return W.trace().real() + F.trace().real(); }
    CMat Z() const;
    static Lifted from_Z(const CMat& Z);
    static Lifted from_beams(const BeamformerPair& b);
    double distance(const Lifted& o) const { return std::sqrt((W - o.W).squaredNorm() + (F - o.F).squaredNorm()); }
};

struct BeamformProblem {
    CVec g;
    double sigma2 = 1.0;
    double power = 10.0;
    double beta1 = 0.5;  // beta2 = 1 - beta1
    F2Model f2;
    double F1_star = 0.0;
    double F2_star = 0.0;
    int G_count = 50;

    double beta2() const { return 1.0 - beta1; }
    int antennas() const { return static_cast<int>(g.size()); }
    void validate() const;
};

double sinr_F1(const CVec& w, const CVec& f, const CVec& g, double sigma2);
double sinr_F1(const Lifted& z, const CVec& g, double sigma2);

struct Limits {
    double F1_star;
    double F2_star;
    double F2_closed_form;  // c + P min(0, lambda_min(S))
};

/// F1* = P |g|^2 / sigma^2 in closed form; F2* from the inner solver.
Limits performance_limits(const BeamformProblem& pb);

/// (F - F*) / |F*|; throws NumericalError when F* = 0.
double normalize_psi(double F, double F_star);

double penalty(const Lifted& z, double power, double delta);

struct DcaTerms {
    double phi;
    double g;
    double h;
    double psi1;
    double psi2;
};

/// g = beta2 Psi2 + delta p+, h = beta1 Psi1, phi = g - h. A zero limit is
/// replaced by 1 in the normalization (reported through the problem warnings).
DcaTerms dca_objective(const Lifted& z, double delta, const BeamformProblem& pb);

/// Gradient of h = beta1 Psi1 with respect to (W, F) under <Z, X> = Re tr(Z X).
Lifted subgradient_h(const Lifted& z, const BeamformProblem& pb);

struct SubproblemResult {
    Lifted z;
    double objective = 0.0;
    int iterations = 0;
    bool converged = false;
    bool cap_active = false;  // solution sits on the tr(Z) = 2P safeguard
};

/// argmin g(Z) - <Z, X> over block-diagonal PSD Z with tr(Z) <= 2P, by
/// projected gradient with eigenvalue clipping. The hinge in p+ is handled by
/// solving the tr <= P and P <= tr <= 2P pieces separately.
SubproblemResult solve_convex_subproblem(double delta, const Lifted& X, const BeamformProblem& pb,
                                         const Lifted& start, double tol = 1e-8, int max_iter = 5000);

struct DcaOptions {
    double delta1 = 1.0;
    double epsilon = 1.0;
    int max_iter = 200;
    double stop_tol = 1e-7;
};

struct DcaRecord {
    double delta;
    double phi;  // phi_t at the new iterate, same delta
};

struct DcaResult {
    Lifted z;
    std::vector<DcaRecord> history;  // entry 0 is phi_1 at the initial point
    int iterations = 0;
    bool converged = false;
    bool feasible = false;
    std::vector<std::string> warnings;
};

Lifted default_init(int M, double power);

DcaResult dca_optimize(const BeamformProblem& pb, const Lifted& init, const DcaOptions& opt = {});

struct RandomizationResult {
    BeamformerPair beams;
    double objective = 0.0;
    int chosen = -1;
};

/// Draws nu ~ CN(0, W), xi ~ CN(0, F) serially from `seed`, rescales each pair
/// to |nu|^2 + |xi|^2 = P, evaluates candidates in parallel, returns the argmin
/// of -beta1 Psi1 + beta2 Psi2 (lowest index on ties).
RandomizationResult gaussian_randomization(const Lifted& opt, const BeamformProblem& pb, int G_count,
                                           std::uint64_t seed, Backend backend = Backend::OpenMP);

/// Builds the problem for a scenario: F2 model from the theory inputs (its w is
/// ignored), limits filled in.
BeamformProblem make_problem(const TheoryInputs& theory, const CVec& g, double sigma2, double power, double beta1,
                             int G_count = 50);

struct BeamformReport {
    double beta1 = 0.0;
    double F1 = 0.0;
    double F2 = 0.0;  // approximate (affine) sensing metric
    std::optional<double> F2_full;  // steady-state MSE with the chosen w, if stable
    double psi1 = 0.0;
    double psi2 = 0.0;
    double power_used = 0.0;
    int dca_iters = 0;
    std::vector<DcaRecord> history;
    BeamformerPair beams;
    std::vector<std::string> warnings;

    nlohmann::json to_json() const;
};

/// Full pipeline: limits, DCA from the default start, randomization, and a
/// full steady-state MSE re-evaluation of the chosen sensing beam.
BeamformReport optimize_beamformers(const TheoryInputs& theory, const CVec& g, double sigma2, double power,
                                    double beta1, std::uint64_t seed, int G_count = 50, const DcaOptions& opt = {});

}  // namespace netisac
