#include <doctest.h>

#include "netisac/rng.hpp"
#include "netisac/sensing_core.hpp"

using namespace netisac;

namespace {

double tls_cost(cplx y, const CVec& u, const CVec& x) { return std::norm(y - u.dot(x)) / (x.squaredNorm() + 1.0); }

std::vector<UserStream> noiseless_streams(const CVec& x0, int N, int T, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<UserStream> in(N);
    for (auto& s : in) {
        s.U = rng.complex_normal_mat(x0.size(), T);
        s.y = s.U.adjoint() * x0;
    }
    return in;
}

}  // namespace

TEST_CASE("weighted_error") {
    CVec u(2), x(2);
    u << cplx(1, 2), cplx(0, -1);
    x.setZero();
    CHECK(weighted_error(cplx(3, 1), u, x) == cplx(3, 1));
    x << cplx(0.5, 0.1), cplx(-1, 2);
    CHECK(std::abs(weighted_error(u.dot(x), u, x)) < 1e-15);
    CVec e = CVec::Zero(2);
    e(0) = 1.0;
    CHECK(weighted_error(2.0, CVec::Zero(2), e) == cplx(1.0));
}

TEST_CASE("instantaneous_gradient") {
    CVec e1 = CVec::Zero(3);
    e1(0) = 1.0;
    CHECK((instantaneous_gradient(1.0, e1, CVec::Zero(3)) + 2.0 * e1).norm() < 1e-15);

    Rng rng(4);
    const CVec u0 = rng.complex_normal_vec(3), x0 = rng.complex_normal_vec(3);
    CHECK(instantaneous_gradient(u0.dot(x0), u0, x0).norm() < 1e-14);

    const double h = 1e-6;
    for (int t = 0; t < 50; ++t) {
        const CVec u = rng.complex_normal_vec(4), x = rng.complex_normal_vec(4);
        const cplx y = rng.complex_normal(4.0);
        const CVec g = instantaneous_gradient(y, u, x);
        CVec fd(4);
        for (int k = 0; k < 4; ++k) {
            CVec xp = x, xm = x;
            xp(k) += h;
            xm(k) -= h;
            const double dre = (tls_cost(y, u, xp) - tls_cost(y, u, xm)) / (2 * h);
            xp = x;
            xm = x;
            xp(k) += cplx(0, h);
            xm(k) -= cplx(0, h);
            const double dim = (tls_cost(y, u, xp) - tls_cost(y, u, xm)) / (2 * h);
            fd(k) = cplx(dre, dim);
        }
        CHECK((g - fd).norm() / fd.norm() < 1e-5);
    }
}

TEST_CASE("sign_vec and block_shrink_direction") {
    CHECK(sign_vec(CVec::Zero(3)).isZero());
    CVec z(1);
    z << cplx(3, 4);
    CHECK(std::abs(sign_vec(z)(0) - cplx(0.6, 0.8)) < 1e-15);
    CHECK(sign_vec(CVec::Constant(4, 2.5)).isApprox(CVec::Ones(4)));

    CVec b(4);
    b << 3.0, 4.0, 0.0, 0.0;
    const CVec d = block_shrink_direction(b, 2);
    CHECK(std::abs(d(0) - 0.6) < 1e-15);
    CHECK(std::abs(d(1) - 0.8) < 1e-15);
    CHECK(d.tail(2).isZero());

    Rng rng(1);
    CVec r = rng.complex_normal_vec(12);
    r.segment(3, 3).setZero();
    const CVec dr = block_shrink_direction(r, 3);
    for (int k = 0; k < 4; ++k) {
        const double nb = dr.segment(3 * k, 3).norm();
        CHECK((std::abs(nb) < 1e-15 || std::abs(nb - 1.0) < 1e-12));
    }
}

TEST_CASE("adapt") {
    Rng rng(6);
    const CVec u = rng.complex_normal_vec(4), x = rng.complex_normal_vec(4);
    const cplx y = rng.complex_normal();
    CHECK(adapt(x, y, u, 0.0, 0.3, 0.2, 2) == x);
    CHECK((adapt(x, u.dot(x), u, 0.1, 0.0, 0.0, 2) - x).norm() < 1e-14);

    for (int t = 0; t < 10; ++t) {
        const CVec uu = rng.complex_normal_vec(6), xx = rng.complex_normal_vec(6);
        const cplx yy = rng.complex_normal();
        const double mu = 0.05, e1 = 0.01, e2 = 0.02;
        const CVec composed = xx + mu * (-0.5 * instantaneous_gradient(yy, uu, xx) - e1 * sign_vec(xx) -
                                          e2 * block_shrink_direction(xx, 3));
        CHECK((adapt(xx, yy, uu, mu, e1, e2, 3) - composed).norm() < 1e-12);
    }
}

TEST_CASE("combine") {
    Rng rng(7);
    std::vector<CVec> phis;
    for (int n = 0; n < 4; ++n) phis.push_back(rng.complex_normal_vec(3));
    const RMat I = RMat::Identity(4, 4);
    for (int n = 0; n < 4; ++n) CHECK(combine(phis, I, n) == phis[n]);

    const auto C = metropolis_weights(build_random_network(4, 2.0, 1));
    std::vector<CVec> same(4, phis[0]);
    for (int n = 0; n < 4; ++n) CHECK((combine(same, C, n) - phis[0]).norm() < 1e-14);

    for (int n = 0; n < 4; ++n) {
        CVec direct = CVec::Zero(3);
        for (int l = 0; l < 4; ++l) direct += C(l, n) * phis[l];
        CHECK((combine(phis, C, n) - direct).norm() < 1e-12);
    }
}

TEST_CASE("run_distributed edge cases") {
    Rng rng(8);
    const CVec x0 = rng.complex_normal_vec(4);
    auto in = noiseless_streams(x0, 3, 0, 1);
    const auto C = metropolis_weights(build_random_network(3, 2.0, 2));
    const auto p = EstimatorParams::uniform(3, 0.05, 0.0, 0.0, 2);
    const auto t0 = run_distributed(in, C, p, CVec::Zero(4));
    CHECK(t0.estimates.size() == 1);
    CHECK(t0.final_estimates().isZero());

    // identity combination decouples the users
    in = noiseless_streams(x0, 3, 40, 3);
    const auto coupled = run_distributed(in, RMat::Identity(3, 3), p, CVec::Zero(4));
    for (int n = 0; n < 3; ++n) {
        const auto solo = run_distributed({in[n]}, RMat::Identity(1, 1), EstimatorParams::uniform(1, 0.05, 0, 0, 2),
                                          CVec::Zero(4));
        for (std::size_t r = 0; r < solo.estimates.size(); ++r)
            CHECK(solo.estimates[r].col(0) == coupled.estimates[r].col(n));
    }
}

TEST_CASE("fixed point: shared exact state with zero penalties") {
    Rng rng(9);
    const CVec x0 = rng.complex_normal_vec(4);
    const auto in = noiseless_streams(x0, 4, 30, 5);
    const auto C = metropolis_weights(build_random_network(4, 2.0, 3));
    const auto t = run_distributed(in, C, EstimatorParams::uniform(4, 0.1, 0, 0, 2), x0);
    for (const auto& S : t.estimates)
        for (int n = 0; n < 4; ++n) CHECK((S.col(n) - x0).norm() < 1e-12);
}

TEST_CASE("noiseless runs recover the scene") {
    Rng rng(10);
    const CVec x0 = rng.complex_normal_vec(6);
    const auto in = noiseless_streams(x0, 5, 2000, 6);
    const auto C = metropolis_weights(build_random_network(5, 2.0, 4));
    const auto p = EstimatorParams::uniform(5, 0.05, 0, 0, 2);
    const auto d = run_distributed(in, C, p, CVec::Zero(6));
    for (int n = 0; n < 5; ++n) CHECK((d.final_estimates().col(n) - x0).squaredNorm() < 1e-6);
    const auto c = run_centralized(in, p, CVec::Zero(6));
    CHECK((c.final_estimates().col(0) - x0).squaredNorm() < 1e-6);
}

TEST_CASE("centralized edge cases") {
    Rng rng(11);
    const CVec x0 = rng.complex_normal_vec(3);
    const auto in = noiseless_streams(x0, 1, 50, 7);
    const auto p = EstimatorParams::uniform(1, 0.05, 0.01, 0.0, 1);
    const auto c = run_centralized(in, p, CVec::Zero(3));
    const auto d = run_distributed(in, RMat::Identity(1, 1), p, CVec::Zero(3));
    REQUIRE(c.estimates.size() == d.estimates.size());
    for (std::size_t r = 0; r < c.estimates.size(); ++r) CHECK(c.estimates[r] == d.estimates[r]);

    const CVec start = rng.complex_normal_vec(3);
    const auto frozen = run_centralized(in, EstimatorParams::uniform(1, 0.0, 0, 0, 1), start);
    for (const auto& S : frozen.estimates) CHECK(S.col(0) == start);
}

TEST_CASE("serial and OpenMP backends are bit-identical") {
    Rng rng(12);
    const CVec x0 = rng.complex_normal_vec(8);
    auto in = noiseless_streams(x0, 6, 200, 8);
    for (auto& s : in) s.y += rng.complex_normal_vec(200, 0.01);
    const auto C = metropolis_weights(build_random_network(6, 3.0, 5));
    const auto p = EstimatorParams::uniform(6, 0.03, 0.001, 0.002, 2);
    RunOptions serial{Backend::Serial, 1}, omp{Backend::OpenMP, 1};
    const auto a = run_distributed(in, C, p, CVec::Zero(8), serial);
    const auto b = run_distributed(in, C, p, CVec::Zero(8), omp);
    REQUIRE(a.estimates.size() == b.estimates.size());
    for (std::size_t r = 0; r < a.estimates.size(); ++r) CHECK(a.estimates[r] == b.estimates[r]);
}

TEST_CASE("divergence is reported with iteration and user") {
    Rng rng(13);
    const CVec x0 = rng.complex_normal_vec(3);
    auto in = noiseless_streams(x0, 2, 10, 9);
    in[1].y(4) = cplx(std::numeric_limits<double>::infinity(), 0.0);
    try {
        run_distributed(in, RMat::Identity(2, 2), EstimatorParams::uniform(2, 0.1, 0, 0, 1), CVec::Zero(3));
        FAIL("expected divergence");
    } catch (const DivergenceError& e) {
        CHECK(e.iteration == 5);
        CHECK(e.user == 1);
    }
}

TEST_CASE("record stride keeps the last iteration") {
    Rng rng(14);
    const auto in = noiseless_streams(rng.complex_normal_vec(2), 2, 25, 10);
    RunOptions opt;
    opt.record_stride = 10;
    const auto t = run_distributed(in, RMat::Identity(2, 2), EstimatorParams::uniform(2, 0.1, 0, 0, 1),
                                   CVec::Zero(2), opt);
    CHECK(t.iterations == std::vector<int>{0, 10, 20, 25});
}
