#include <doctest.h>

#include "netisac/two_step.hpp"

using namespace netisac;

namespace {

struct Fixture {
    RoiGrid grid{2, 2, 2};
    int M = 4, N = 5, T = 120;
    ChannelTrack track;
    RoiVector roi;
    SymbolStreams s;
    BeamformerPair beams;
    CombinationMatrix C;

    explicit Fixture(std::uint64_t seed, Fading fading = Fading::Static) {
        ChannelModel model;
        model.fading = fading;
        track = ChannelTrack::generate(M, grid, N, model, seed, T);
        roi = build_roi(grid, {0, 1}, {1.0, 0.8});
        s = gen_symbols(T, seed + 1);
        Rng rng(seed + 2);
        beams = {rng.complex_normal_vec(M), rng.complex_normal_vec(M)};
        C = metropolis_weights(build_random_network(N, 2.0, seed));
    }

    Measurements measure(double sigma2, std::uint64_t seed) const {
        return batch_rx(roi, track, beams, s, NoiseConfig{sigma2, 0.0}, seed);
    }
};

CVec direct_fGhx(const CVec& f, const CMat& G, const CVec& h, const CVec& x) {
    return (f.adjoint() * G * h.asDiagonal() * x);
}

}  // namespace

TEST_CASE("step1_inputs") {
    Fixture fx(1);
    const auto m = fx.measure(0.0, 3);
    const auto& ch = fx.track.snapshot();
    BeamformerPair nof{fx.beams.w, CVec::Zero(fx.M)};
    auto [y, u] = step1_inputs(ch, nof, fx.s, m, 2, 7);
    CHECK(y == m.y[2](7));
    CHECK((u - clean_input_row(fx.beams.w, ch.G, ch.h[2], fx.s.se(7))).norm() < 1e-15);

    SymbolStreams zero{CVec::Zero(fx.T), CVec::Zero(fx.T)};
    CHECK(step1_inputs(ch, fx.beams, zero, m, 0, 0).second.isZero());

    for (int i = 0; i < 5; ++i) {
        const CVec want =
            (fx.s.se(i) * fx.beams.w.adjoint() * ch.G * ch.h[1].asDiagonal() +
             fx.s.sd(i) * fx.beams.f.adjoint() * ch.G * ch.h[1].asDiagonal())
                .adjoint();
        CHECK((step1_inputs(ch, fx.beams, fx.s, m, 1, i).second - want).norm() < 1e-12);
    }
}

TEST_CASE("residual_signal") {
    Fixture fx(2);
    const auto m = fx.measure(0.0, 4);
    const auto& ch = fx.track.snapshot();
    for (int n = 0; n < fx.N; ++n) {
        const CVec r = residual_signal(m.y[n], fx.track, fx.beams, fx.s, fx.roi.x, n);
        const cplx a = direct_fGhx(fx.beams.f, ch.G, ch.h[n], fx.roi.x)(0);
        CHECK((r - a * fx.s.sd).norm() < 1e-12);
    }
    CHECK(residual_signal(CVec::Zero(fx.T), fx.track, fx.beams, fx.s, CVec::Zero(8), 0).isZero());

    Rng rng(5);
    const CVec xh = rng.complex_normal_vec(8);
    const CVec r = residual_signal(m.y[3], fx.track, fx.beams, fx.s, xh, 3);
    for (int i = 0; i < fx.T; i += 17) {
        const cplx want = m.y[3](i) - fx.s.se(i) * (fx.beams.w.adjoint() * ch.G * ch.h[3].asDiagonal() * xh)(0);
        CHECK(std::abs(r(i) - want) < 1e-12);
    }
}

TEST_CASE("estimate_data_symbols") {
    Rng rng(6);
    const auto s = gen_symbols(64, 9);
    std::vector<CVec> res;
    for (int n = 0; n < 4; ++n) res.push_back(rng.complex_normal() * s.sd);
    for (auto scope : {SvdScope::Stacked, SvdScope::PerUser, SvdScope::Consensus}) {
        const auto est = estimate_data_symbols(res, {}, scope, s.sd(0));
        CHECK(std::abs(est.s_hat_d.norm() - 1.0) < 1e-12);
        CHECK(symbol_correlation(est.s_hat_d, s.sd) > 1.0 - 1e-12);
        // phase resolved against the reference: recovered symbols match exactly
        CHECK((est.symbols() - s.sd).norm() < 1e-9);
        for (int n = 0; n < 4; ++n) CHECK((est.scale(n) * est.directions[n] - res[n]).norm() < 1e-10);
    }

    CVec e1 = CVec::Zero(10);
    e1(0) = 1.0;
    const auto est = estimate_data_symbols({e1}, {}, SvdScope::PerUser);
    CHECK(symbol_correlation(est.s_hat_d, e1) > 1.0 - 1e-12);

    // the direction does not depend on z
    std::vector<CVec> z{rng.complex_normal_vec(10)};
    CVec r = rng.complex_normal_vec(10);
    const auto a = estimate_data_symbols({r}, {}, SvdScope::PerUser);
    const auto b = estimate_data_symbols({r}, z, SvdScope::PerUser);
    CHECK(symbol_correlation(a.s_hat_d, b.s_hat_d) > 1.0 - 1e-12);

    CHECK_THROWS_AS(estimate_data_symbols({CVec::Zero(5), CVec::Zero(5)}, {}, SvdScope::Stacked), NumericalError);
}

TEST_CASE("soft estimate follows the rank-one noise bound") {
    // Leading left vector of s c^T + V: cos^2 ~ |c|^2 / (|c|^2 + sigma^2), independent of T.
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Fixture fx(100 + seed);
        fx.roi = build_roi(fx.grid, {0, 1}, {1.0, 1.0});
        const auto& ch = fx.track.snapshot();
        const double sigma2 = 1.0;
        Rng rng(seed);
        std::vector<CVec> res;
        double c2 = 0.0;
        for (int n = 0; n < fx.N; ++n) {
            const cplx c = direct_fGhx(fx.beams.f, ch.G, ch.h[n], fx.roi.x)(0);
            c2 += std::norm(c);
            CVec r = fx.s.sd * c;
            for (int i = 0; i < fx.T; ++i) r(i) += rng.complex_normal(sigma2);
            res.push_back(r);
        }
        const double corr = symbol_correlation(estimate_data_symbols(res, {}, SvdScope::Stacked).s_hat_d, fx.s.sd);
        const double bound = std::sqrt(c2 / (c2 + sigma2));
        CHECK(std::abs(corr - bound) < 3.0 * sigma2 / c2 + 0.02);
    }
}

TEST_CASE("qpsk_decide") {
    const auto s = gen_symbols(64, 3);
    const CVec dir = s.sd / 8.0;
    CHECK(symbol_correlation(qpsk_decide(dir, s.sd(0)), s.sd) > 1.0 - 1e-12);
    CHECK((qpsk_decide(dir * std::polar(1.0, 0.3), s.sd(0)) - dir).norm() < 1e-12);
    // a quarter turn is undone by the reference
    CHECK((qpsk_decide(dir * cplx(0, 1), s.sd(0)) - dir).norm() < 1e-12);
    CHECK(std::abs(qpsk_decide(dir, s.sd(0)).norm() - 1.0) < 1e-12);
}

TEST_CASE("noisy symbol recovery at 10 dB") {
    // Desk split: half of P = 10 on each beam, f toward the communication user.
    double soft = 0.0, hard = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Fixture fx(100 + seed);
        const double P = 10.0;
        Rng rng(seed);
        const CVec w = rng.complex_normal_vec(fx.M);
        const CVec& g = fx.track.snapshot().g;
        fx.beams = {std::sqrt(0.5 * P) * w.normalized(), std::sqrt(0.5 * P) * g.normalized()};
        fx.roi = build_roi(fx.grid, {0, 1}, {1.0, 1.0});
        const auto m = fx.measure(noise_from_snr(P, 10.0), 200 + seed);
        TwoStepConfig cfg;
        cfg.step1 = EstimatorParams::uniform(fx.N, 0.02, 0.01, 0.3, 2);
        cfg.step2 = cfg.step1;
        cfg.qpsk_decisions = true;
        const auto r = run_two_step(fx.track, fx.beams, fx.s, m, fx.C, cfg);
        soft += symbol_correlation(r.symbols.soft, fx.s.sd);
        hard += symbol_correlation(r.symbols.s_hat_d, fx.s.sd);
    }
    CHECK(hard / 20 > 0.99);
    CHECK(hard >= soft);
}

TEST_CASE("step2_inputs") {
    Fixture fx(9);
    const auto m = fx.measure(0.0, 10);
    const auto& ch = fx.track.snapshot();
    for (int i = 0; i < 6; ++i) {
        auto [y, u] = step2_inputs(ch, fx.beams, fx.s, m, fx.roi.x, fx.s.sd(i), 2, i);
        CHECK(std::abs(y - u.dot(fx.roi.x)) < 1e-12);
    }
    BeamformerPair nof{fx.beams.w, CVec::Zero(fx.M)};
    const auto m0 = batch_rx(fx.roi, fx.track, nof, fx.s, NoiseConfig{}, 1);
    CHECK(step2_inputs(ch, nof, fx.s, m0, fx.roi.x, 0.7, 0, 3).first == m0.y[0](3));

    Rng rng(11);
    const CVec xh = rng.complex_normal_vec(8);
    const cplx sh = rng.complex_normal();
    const cplx want = m.y[4](5) - sh * direct_fGhx(fx.beams.f, ch.G, ch.h[4], xh)(0);
    CHECK(std::abs(step2_inputs(ch, fx.beams, fx.s, m, xh, sh, 4, 5).first - want) < 1e-12);
}

TEST_CASE("pipeline identity without a data beam") {
    Fixture fx(12);
    fx.beams.f.setZero();
    const auto m = fx.measure(0.01, 13);
    TwoStepConfig cfg;
    cfg.step1 = EstimatorParams::uniform(fx.N, 0.05, 0.001, 0.001, 2);
    cfg.step2 = cfg.step1;
    const auto r = run_two_step(fx.track, fx.beams, fx.s, m, fx.C, cfg);
    CHECK_FALSE(r.cancelled);
    CHECK(r.step2.final_estimates() == r.step1.final_estimates());
}

TEST_CASE("pipeline is deterministic") {
    Fixture fx(14, Fading::PerSlot);
    const auto m = fx.measure(0.05, 15);
    TwoStepConfig cfg;
    cfg.step1 = EstimatorParams::uniform(fx.N, 0.05, 0.001, 0.001, 2);
    cfg.step2 = cfg.step1;
    const auto a = run_two_step(fx.track, fx.beams, fx.s, m, fx.C, cfg);
    const auto b = run_two_step(fx.track, fx.beams, fx.s, m, fx.C, cfg);
    CHECK(a.step2.final_estimates() == b.step2.final_estimates());
    CHECK(a.cancelled);
    const auto j = a.to_json(fx.roi.x, fx.s.sd);
    CHECK(j.contains("symbol_correlation"));
    CHECK(j["scale"].size() == static_cast<std::size_t>(fx.N));
    CHECK_FALSE(j.contains("data_symbols"));
}
