#include "netisac/two_step.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/SVD>

namespace netisac {

constexpr double kPi = std::numbers::pi;

CVec DataSymbolEstimate::symbols() const { return std::sqrt(static_cast<double>(s_hat_d.size())) * s_hat_d; }

std::pair<cplx, CVec> step1_inputs(const ChannelSet& ch, const BeamformerPair& beams, const SymbolStreams& s,
                                   const Measurements& m, int n, int i) {
    const CVec u = clean_input_row(beams.w, ch.G, ch.h.at(n), s.se(i));
    const CVec e = interference_row(beams.f, ch.G, ch.h.at(n), s.sd(i));
    return {m.y.at(n)(i), u + e};
}

std::vector<UserStream> clean_streams(const ChannelTrack& track, const BeamformerPair& beams, const SymbolStreams& s,
                                      const Measurements& m) {
    const int N = m.users();
    const int T = m.horizon();
    if (s.horizon() != T) throw ParameterError("symbol horizon does not match measurements");
    std::vector<UserStream> out(N);
    for (int n = 0; n < N; ++n) {
        out[n].y = m.y[n];
        out[n].U.resize(track.snapshot().pixels(), T);
        if (!track.time_varying()) {
            const CVec base = clean_input_row(beams.w, track.snapshot().G, track.snapshot().h.at(n), 1.0);
            for (int i = 0; i < T; ++i) out[n].U.col(i) = std::conj(s.se(i)) * base;
        } else {
            for (int i = 0; i < T; ++i)
                out[n].U.col(i) = clean_input_row(beams.w, track.at(i).G, track.at(i).h.at(n), s.se(i));
        }
    }
    return out;
}

CVec residual_signal(const CVec& yn, const ChannelTrack& track, const BeamformerPair& beams, const SymbolStreams& s,
                     const CVec& x_hat, int n) {
    const int T = static_cast<int>(yn.size());
    CVec r(T);
    for (int i = 0; i < T; ++i) {
        const ChannelSet& ch = track.at(i);
        const cplx wGhx = beams.w.dot(ch.G * ch.h.at(n).cwiseProduct(x_hat));
        r(i) = yn(i) - s.se(i) * wGhx;
    }
    return r;
}

namespace {

struct Leading {
    CVec u;
    double sigma = 0.0;
};

Leading leading_left(const CMat& Y) {
    Eigen::BDCSVD<CMat> svd(Y, Eigen::ComputeThinU);
    return {svd.matrixU().col(0), svd.singularValues()(0)};
}

void align_phase(CVec& v, cplx reference) {
    if (v.size() == 0 || std::abs(v(0)) == 0.0 || std::abs(reference) == 0.0) return;
    v *= std::polar(1.0, std::arg(reference) - std::arg(v(0)));
}

}  // namespace

DataSymbolEstimate estimate_data_symbols(const std::vector<CVec>& residuals, const std::vector<CVec>& z,
                                         SvdScope scope, cplx reference) {
    const int N = static_cast<int>(residuals.size());
    if (N == 0) throw ParameterError("no residuals");
    const Eigen::Index T = residuals.front().size();
    if (!z.empty() && static_cast<int>(z.size()) != N) throw ParameterError("need one z vector per user");
    double total = 0.0;
    for (const auto& r : residuals) {
        if (r.size() != T) throw ParameterError("residuals differ in length");
        total += r.squaredNorm();
    }
    if (!(total > 0.0)) throw NumericalError("degenerate data-symbol estimate: all residuals are zero");

    auto weight = [&](int n) -> CVec { return z.empty() ? CVec(CVec::Ones(T)) : z[n]; };

    DataSymbolEstimate est;
    est.directions.resize(N);
    est.scale = CVec::Zero(N);

    if (scope == SvdScope::Stacked) {
        CMat Y(T, N);
        for (int n = 0; n < N; ++n) Y.col(n) = residuals[n] * weight(n).norm();
        auto lead = leading_left(Y);
        align_phase(lead.u, reference);
        est.s_hat_d = lead.u;
        est.singular_values = RVec::Constant(1, lead.sigma);
        for (auto& d : est.directions) d = lead.u;
    } else {
        est.singular_values = RVec::Zero(N);
        int best = 0;
        for (int n = 0; n < N; ++n) {
            if (residuals[n].squaredNorm() == 0.0) {
                est.directions[n] = CVec::Zero(T);
                continue;
            }
            auto lead = leading_left(residuals[n] * weight(n).adjoint());
            align_phase(lead.u, reference);
            est.directions[n] = lead.u;
            est.singular_values(n) = lead.sigma;
            if (lead.sigma > est.singular_values(best)) best = n;
        }
        if (scope == SvdScope::PerUser) {
            est.s_hat_d = est.directions[best];
        } else {
            const CVec& anchor = est.directions[best];
            CVec acc = CVec::Zero(T);
            for (const auto& d : est.directions) {
                const cplx c = anchor.dot(d);
                if (std::abs(c) > 0.0) acc += d * std::conj(c) / std::abs(c);
            }
            acc.normalize();
            align_phase(acc, reference);
            est.s_hat_d = acc;
            for (auto& d : est.directions) d = acc;
        }
    }
    for (int n = 0; n < N; ++n) est.scale(n) = est.directions[n].dot(residuals[n]);
    est.soft = est.s_hat_d;
    return est;
}

std::pair<cplx, CVec> step2_inputs(const ChannelSet& ch, const BeamformerPair& beams, const SymbolStreams& s,
                                   const Measurements& m, const CVec& x_hat, cplx s_hat_i, int n, int i) {
    const cplx fGhx = beams.f.dot(ch.G * ch.h.at(n).cwiseProduct(x_hat));
    return {m.y.at(n)(i) - s_hat_i * fGhx, clean_input_row(beams.w, ch.G, ch.h.at(n), s.se(i))};
}

CVec qpsk_decide(const CVec& direction, cplx reference) {
    const Eigen::Index T = direction.size();
    if (T == 0) return direction;
    const CVec x = direction * std::sqrt(static_cast<double>(T));
    cplx m4 = 0.0;
    for (Eigen::Index i = 0; i < T; ++i) m4 += std::pow(x(i), 4);
    // QPSK points satisfy s^4 = -1, so the common rotation is arg(-sum x^4) / 4.
    const cplx derot = std::polar(1.0, -std::arg(-m4) / 4.0);
    CVec out(T);
    for (Eigen::Index i = 0; i < T; ++i) {
        const cplx z = x(i) * derot;
        const double q = std::floor(std::arg(z * std::polar(1.0, -kPi / 4.0)) / (kPi / 2.0) + 0.5);
        out(i) = std::polar(1.0, kPi / 4.0 + q * kPi / 2.0);
    }
    if (std::abs(reference) > 0.0) {
        const double turns = std::round((std::arg(reference) - std::arg(out(0))) / (kPi / 2.0));
        out *= std::polar(1.0, turns * kPi / 2.0);
    }
    return out / std::sqrt(static_cast<double>(T));
}

double symbol_correlation(const CVec& a, const CVec& b) {
    const double d = a.norm() * b.norm();
    return d > 0.0 ? std::abs(a.dot(b)) / d : 0.0;
}

nlohmann::json TwoStepResult::to_json(const CVec& x0, const CVec& true_sd) const {
    auto db = [](double v) { return 10.0 * std::log10(std::max(v, 1e-30)); };
    nlohmann::json j;
    j["step1_final_msd_db"] = db(network_msd(step1.final_estimates(), x0));
    j["step2_final_msd_db"] = db(network_msd(step2.final_estimates(), x0));
    j["cancelled"] = cancelled;
    if (cancelled) {
        j["symbol_correlation"] = symbol_correlation(symbols.s_hat_d, true_sd);
        nlohmann::json sc = nlohmann::json::array();
        for (Eigen::Index n = 0; n < symbols.scale.size(); ++n)
            sc.push_back({symbols.scale(n).real(), symbols.scale(n).imag()});
        j["scale"] = sc;
        if (keep_symbols) {
            const CVec sym = symbols.symbols();
            nlohmann::json arr = nlohmann::json::array();
            for (Eigen::Index i = 0; i < sym.size(); ++i) arr.push_back({sym(i).real(), sym(i).imag()});
            j["data_symbols"] = arr;
        }
    }
    return j;
}

namespace {

Trajectory run_step(const std::vector<UserStream>& in, const CombinationMatrix& C, const EstimatorParams& p,
                    const TwoStepConfig& cfg) {
    const CVec x0 = CVec::Zero(in.front().U.rows());
    return cfg.centralized ? run_centralized(in, p, x0, cfg.run) : run_distributed(in, C, p, x0, cfg.run);
}

}  // namespace

TwoStepResult run_two_step(const ChannelTrack& track, const BeamformerPair& beams, const SymbolStreams& s,
                           const Measurements& m, const CombinationMatrix& C, const TwoStepConfig& cfg) {
    auto streams = clean_streams(track, beams, s, m);
    TwoStepResult res;
    res.step1 = run_step(streams, C, cfg.step1, cfg);
    if (beams.f.squaredNorm() == 0.0 || m.horizon() == 0) {
        res.step2 = res.step1;
        return res;
    }

    const int N = m.users();
    const CMat& xhat = res.step1.final_estimates();
    std::vector<CVec> residuals(N);
    for (int n = 0; n < N; ++n) {
        const CVec x_n = xhat.col(cfg.centralized ? 0 : n);
        residuals[n] = streams[n].y - streams[n].U.adjoint() * x_n;
        // With static channels the step-1 misfit enters as s^e times a constant, which the users know.
        if (cfg.project_sensing && s.se.squaredNorm() > 0.0)
            residuals[n] -= s.se * (s.se.dot(residuals[n]) / s.se.squaredNorm());
    }
    res.symbols = estimate_data_symbols(residuals, {}, cfg.scope, s.sd(0));
    if (cfg.qpsk_decisions) {
        auto& est = res.symbols;
        est.s_hat_d = qpsk_decide(est.soft, s.sd(0));
        for (int n = 0; n < N; ++n) {
            est.directions[n] = est.s_hat_d;
            est.scale(n) = est.s_hat_d.dot(residuals[n]);
        }
    }
    for (int n = 0; n < N; ++n) streams[n].y -= res.symbols.scale(n) * res.symbols.directions[n];
    res.step2 = run_step(streams, C, cfg.step2, cfg);
    res.cancelled = true;
    res.keep_symbols = cfg.keep_symbols;
    return res;
}

}  // namespace netisac
