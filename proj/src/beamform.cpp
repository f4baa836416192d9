#include "netisac/beamform.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "netisac/parallel.hpp"
#include "netisac/rng.hpp"

namespace netisac {

CMat Lifted::Z() const {
    const Eigen::Index M = W.rows();
    CMat z = CMat::Zero(2 * M, 2 * M);
    z.topLeftCorner(M, M) = W;
    z.bottomRightCorner(M, M) = F;
    return z;
}

Lifted Lifted::from_Z(const CMat& Z) {
    const Eigen::Index M = Z.rows() / 2;
    return {Z.topLeftCorner(M, M), Z.bottomRightCorner(M, M)};
}

Lifted Lifted::from_beams(const BeamformerPair& b) { return {b.w * b.w.adjoint(), b.f * b.f.adjoint()}; }

void BeamformProblem::validate() const {
    if (!(power > 0.0)) throw ParameterError("power budget must be positive");
    if (!(sigma2 > 0.0)) throw ParameterError("noise power must be positive");
    if (!(beta1 >= 0.0 && beta1 <= 1.0)) throw ParameterError("beta1 must lie in [0, 1]");
    if (f2.S.rows() != g.size()) throw ParameterError("sensing model does not match the antenna count");
}

double sinr_F1(const CVec& w, const CVec& f, const CVec& g, double sigma2) {
    return std::norm(g.dot(f)) / (sigma2 + std::norm(g.dot(w)));
}

double sinr_F1(const Lifted& z, const CVec& g, double sigma2) {
    const double num = g.dot(z.F * g).real();
    const double den = sigma2 + g.dot(z.W * g).real();
    return num / den;
}

double normalize_psi(double F, double F_star) {
    if (F_star == 0.0) throw NumericalError("normalization is degenerate: performance limit is zero");
    return (F - F_star) / std::abs(F_star);
}

double penalty(const Lifted& z, double power, double delta) { return delta * std::max(z.trace() - power, 0.0); }

namespace {

double safe_denominator(double F_star) { return F_star != 0.0 ? std::abs(F_star) : 1.0; }

// Euclidean projection of v onto {x >= 0, lo <= sum x <= hi}.
RVec project_eigenvalues(const RVec& v, double lo, double hi) {
    RVec clip = v.cwiseMax(0.0);
    const double s = clip.sum();
    if (s >= lo && s <= hi) return clip;
    const double target = s > hi ? hi : lo;
    double a = v.minCoeff() - target - 1.0;  // sum >= target
    double b = v.maxCoeff();                 // sum == 0 <= target
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (a + b);
        if ((v.array() - mid).cwiseMax(0.0).sum() > target) a = mid;
        else b = mid;
    }
    return (v.array() - 0.5 * (a + b)).cwiseMax(0.0);
}

Lifted project(const Lifted& z, double lo, double hi) {
    const Eigen::Index M = z.W.rows();
    Eigen::SelfAdjointEigenSolver<CMat> ew(0.5 * (z.W + z.W.adjoint()));
    Eigen::SelfAdjointEigenSolver<CMat> ef(0.5 * (z.F + z.F.adjoint()));
    RVec lam(2 * M);
    lam << ew.eigenvalues(), ef.eigenvalues();
    const RVec p = project_eigenvalues(lam, lo, hi);
    const CMat& Vw = ew.eigenvectors();
    const CMat& Vf = ef.eigenvectors();
    return {Vw * p.head(M).cast<cplx>().asDiagonal() * Vw.adjoint(),
            Vf * p.tail(M).cast<cplx>().asDiagonal() * Vf.adjoint()};
}

double linear(const Lifted& z, const Lifted& L) {
    return (z.W * L.W).trace().real() + (z.F * L.F).trace().real();
}

struct Piece {
    Lifted z;
    double value;
    int iterations;
    bool converged;
};

// min <Z, L> over {PSD blocks, lo <= tr <= hi} by projected gradient.
Piece minimize_linear(const Lifted& L, double lo, double hi, const Lifted& start, double tol, int max_iter) {
    Lifted z = project(start, lo, hi);
    double prev = linear(z, L);
    const double scale = std::sqrt(L.W.squaredNorm() + L.F.squaredNorm());
    if (!(scale > 0.0)) return {z, prev, 0, true};
    // The objective is linear, so longer steps only sharpen the projection
    // toward the minimizing vertex; the step doubles up to a fixed ceiling.
    double tau = hi / scale;
    const double tau_max = 1e6 * tau;
    for (int it = 1; it <= max_iter; ++it) {
        z = project({z.W - tau * L.W, z.F - tau * L.F}, lo, hi);
        tau = std::min(2.0 * tau, tau_max);
        const double cur = linear(z, L);
        if (std::abs(cur - prev) < tol) return {z, cur, it, true};
        prev = cur;
    }
    return {z, prev, max_iter, false};
}

}  // namespace

Limits performance_limits(const BeamformProblem& pb) {
    Limits lim;
    lim.F1_star = pb.power * pb.g.squaredNorm() / pb.sigma2;
    const int M = pb.antennas();
    // F2 depends on W only; F is free and carries zero cost.
    const Lifted L{pb.f2.S, CMat::Zero(M, M)};
    const auto piece = minimize_linear(L, 0.0, pb.power, default_init(M, pb.power), 1e-12, 5000);
    lim.F2_star = piece.value + pb.f2.c;
    const double lmin = Eigen::SelfAdjointEigenSolver<CMat>(pb.f2.S).eigenvalues().minCoeff();
    lim.F2_closed_form = pb.f2.c + pb.power * std::min(0.0, lmin);
    return lim;
}

DcaTerms dca_objective(const Lifted& z, double delta, const BeamformProblem& pb) {
    DcaTerms t;
    const double F1 = sinr_F1(z, pb.g, pb.sigma2);
    const double F2 = pb.f2.evaluate(z.W);
    t.psi1 = (F1 - pb.F1_star) / safe_denominator(pb.F1_star);
    t.psi2 = (F2 - pb.F2_star) / safe_denominator(pb.F2_star);
    t.g = pb.beta2() * t.psi2 + penalty(z, pb.power, delta);
    t.h = pb.beta1 * t.psi1;
    t.phi = t.g - t.h;
    return t;
}

Lifted subgradient_h(const Lifted& z, const BeamformProblem& pb) {
    const CMat gg = pb.g * pb.g.adjoint();
    const double den = pb.sigma2 + pb.g.dot(z.W * pb.g).real();
    const double num = pb.g.dot(z.F * pb.g).real();
    const double c = pb.beta1 / safe_denominator(pb.F1_star);
    return {-c * num / (den * den) * gg, c / den * gg};
}

SubproblemResult solve_convex_subproblem(double delta, const Lifted& X, const BeamformProblem& pb,
                                         const Lifted& start, double tol, int max_iter) {
    const int M = pb.antennas();
    const double a = pb.beta2() / safe_denominator(pb.F2_star);
    const double base = a * (pb.f2.c - pb.F2_star);
    const Lifted L{a * pb.f2.S - X.W, -X.F};
    const CMat I = CMat::Identity(M, M);
    const Lifted Lb{L.W + delta * I, L.F + delta * I};

    const auto inside = minimize_linear(L, 0.0, pb.power, start, tol, max_iter);
    const auto outside = minimize_linear(Lb, pb.power, 2.0 * pb.power, start, tol, max_iter);
    const double v_in = inside.value + base;
    const double v_out = outside.value + base - delta * pb.power;

    SubproblemResult r;
    const bool take_out = v_out < v_in;
    const Piece& best = take_out ? outside : inside;
    r.z = best.z;
    r.objective = take_out ? v_out : v_in;
    r.iterations = inside.iterations + outside.iterations;
    r.converged = inside.converged && outside.converged;
    r.cap_active = take_out && std::abs(best.z.trace() - 2.0 * pb.power) < 1e-9 * pb.power;
    return r;
}

Lifted default_init(int M, double power) {
    const CMat I = (power / (4.0 * M)) * CMat::Identity(M, M);
    return {I, I};
}

DcaResult dca_optimize(const BeamformProblem& pb, const Lifted& init, const DcaOptions& opt) {
    pb.validate();
    DcaResult res;
    Lifted z = init;
    double delta = opt.delta1;
    res.history.push_back({delta, dca_objective(z, delta, pb).phi});
    for (int t = 1; t <= opt.max_iter; ++t) {
        const Lifted X = subgradient_h(z, pb);
        const auto sub = solve_convex_subproblem(delta, X, pb, z);
        if (!sub.converged) res.warnings.push_back("inner solver hit its iteration cap at DCA step " + std::to_string(t));
        const double step = z.distance(sub.z);
        res.history.push_back({delta, dca_objective(sub.z, delta, pb).phi});
        const double r = std::max(sub.z.trace() - pb.power, 0.0);
        z = sub.z;
        res.iterations = t;
        if (step < opt.stop_tol && r <= 1e-9 * pb.power) {
            res.converged = true;
            break;
        }
        if (delta * step < 1.0 && r > 0.0) delta += opt.epsilon;
    }
    res.feasible = z.trace() <= pb.power * (1.0 + 1e-9);
    if (!res.feasible) {
        res.warnings.push_back("DCA ended outside the power budget; iterate rescaled to tr(Z) = P");
        const double s = pb.power / z.trace();
        z.W *= s;
        z.F *= s;
    }
    res.z = z;
    return res;
}

RandomizationResult gaussian_randomization(const Lifted& opt, const BeamformProblem& pb, int G_count,
                                           std::uint64_t seed, Backend backend) {
    if (G_count < 1) throw ParameterError("need at least one randomization sample");
    const int M = pb.antennas();
    auto sqrtm = [](const CMat& A) {
        Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (A + A.adjoint()));
        return CMat(es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().cast<cplx>().asDiagonal() *
                    es.eigenvectors().adjoint());
    };
    const CMat Wh = sqrtm(opt.W), Fh = sqrtm(opt.F);

    Rng rng(derive_seed(seed, "randomization"));
    std::vector<BeamformerPair> cand(G_count);
    for (auto& c : cand) {
        c.w = Wh * rng.complex_normal_vec(M);
        c.f = Fh * rng.complex_normal_vec(M);
    }

    std::vector<double> obj(G_count, std::numeric_limits<double>::infinity());
    const bool par = backend == Backend::OpenMP;
#pragma omp parallel for schedule(static) num_threads(par ? thread_count() : 1) if (par)
    for (int i = 0; i < G_count; ++i) {
        const double s = cand[i].power();
        if (!(s > 0.0)) continue;
        const double k = std::sqrt(pb.power / s);
        cand[i].w *= k;
        cand[i].f *= k;
        const auto t = dca_objective(Lifted::from_beams(cand[i]), 0.0, pb);
        obj[i] = -pb.beta1 * t.psi1 + pb.beta2() * t.psi2;
    }

    RandomizationResult r;
    for (int i = 0; i < G_count; ++i)
        if (obj[i] < (r.chosen < 0 ? std::numeric_limits<double>::infinity() : r.objective)) {
            r.chosen = i;
            r.objective = obj[i];
        }
    if (r.chosen < 0) throw NumericalError("Gaussian randomization produced no feasible candidate");
    r.beams = cand[r.chosen];
    return r;
}

BeamformProblem make_problem(const TheoryInputs& theory, const CVec& g, double sigma2, double power, double beta1,
                             int G_count) {
    BeamformProblem pb;
    pb.g = g;
    pb.sigma2 = sigma2;
    pb.power = power;
    pb.beta1 = beta1;
    pb.G_count = G_count;
    pb.f2 = theory_F2_model(theory);
    pb.validate();
    const auto lim = performance_limits(pb);
    pb.F1_star = lim.F1_star;
    pb.F2_star = lim.F2_star;
    return pb;
}

nlohmann::json BeamformReport::to_json() const {
    nlohmann::json hist = nlohmann::json::array();
    for (const auto& h : history) hist.push_back({{"delta", h.delta}, {"phi", h.phi}});
    return {{"beta1", beta1},
            {"F1", F1},
            {"F2", F2},
            {"F2_full", F2_full ? nlohmann::json(*F2_full) : nlohmann::json(nullptr)},
            {"Psi1", psi1},
            {"Psi2", psi2},
            {"power_used", power_used},
            {"dca_iters", dca_iters},
            {"history", hist},
            {"warnings", warnings}};
}

BeamformReport optimize_beamformers(const TheoryInputs& theory, const CVec& g, double sigma2, double power,
                                    double beta1, std::uint64_t seed, int G_count, const DcaOptions& opt) {
    const auto pb = make_problem(theory, g, sigma2, power, beta1, G_count);
    BeamformReport rep;
    rep.beta1 = beta1;
    if (pb.F1_star == 0.0) rep.warnings.push_back("F1* is zero; Psi1 is unnormalized");
    if (pb.F2_star == 0.0) rep.warnings.push_back("F2* is zero; Psi2 is unnormalized");

    const auto dca = dca_optimize(pb, default_init(pb.antennas(), power), opt);
    rep.warnings.insert(rep.warnings.end(), dca.warnings.begin(), dca.warnings.end());
    rep.history = dca.history;
    rep.dca_iters = dca.iterations;

    const auto rnd = gaussian_randomization(dca.z, pb, G_count, seed);
    rep.beams = rnd.beams;
    rep.F1 = sinr_F1(rnd.beams.w, rnd.beams.f, g, sigma2);
    rep.F2 = pb.f2.evaluate(rnd.beams.w * rnd.beams.w.adjoint());
    const auto t = dca_objective(Lifted::from_beams(rnd.beams), 0.0, pb);
    rep.psi1 = t.psi1;
    rep.psi2 = t.psi2;
    rep.power_used = rnd.beams.power();

    TheoryInputs full = theory;
    full.w = rnd.beams.w;
    try {
        rep.F2_full = steady_state_mse(TheoryWorkspace::build(full)).mse;
    } catch (const StabilityError& e) {
        rep.warnings.push_back(std::string("full steady-state MSE unavailable: ") + e.what());
    }
    return rep;
}

}  // namespace netisac
