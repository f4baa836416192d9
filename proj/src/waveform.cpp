#include "netisac/waveform.hpp"

#include <cmath>
#include <numbers>
#include <ostream>

#include "netisac/parallel.hpp"
#include "netisac/rng.hpp"

namespace netisac {

SymbolStreams gen_symbols(int T, std::uint64_t seed, SymbolModel model) {
    if (T < 0) throw ParameterError("horizon must be nonnegative");
    SymbolStreams s{CVec(T), CVec(T)};
    auto draw = [&](CVec& out, std::string_view purpose) {
        Rng rng(derive_seed(seed, purpose));
        for (int i = 0; i < T; ++i) {
            if (model == SymbolModel::Qpsk) {
                const int q = rng.index(4);
                out(i) = std::polar(1.0, std::numbers::pi / 4 + q * std::numbers::pi / 2);
            } else {
                out(i) = rng.complex_normal();
            }
        }
    };
    draw(s.se, "symbols.sensing");
    draw(s.sd, "symbols.data");
    return s;
}

double noise_from_snr(double power, double snr_db) { return power / std::pow(10.0, snr_db / 10.0); }

CVec clean_input_row(const CVec& w, const CMat& G, const CVec& hn, cplx se) {
    // (s w^H G diag(h))^H = conj(s) diag(conj h) G^H w
    return std::conj(se) * hn.conjugate().cwiseProduct(G.adjoint() * w);
}

CVec interference_row(const CVec& f, const CMat& G, const CVec& hn, cplx sd) {
    return clean_input_row(f, G, hn, sd);
}

namespace {

cplx noiseless_rx(const RoiVector& roi, const ChannelSet& ch, const BeamformerPair& beams, cplx se, cplx sd, int n) {
    const CVec hx = ch.h.at(n).cwiseProduct(roi.x);
    const CVec Ghx = ch.G * hx;
    return se * beams.w.dot(Ghx) + sd * beams.f.dot(Ghx);
}

}  // namespace

cplx sensing_rx(const RoiVector& roi, const ChannelSet& ch, const BeamformerPair& beams, const SymbolStreams& s,
                const NoiseConfig& noise, int n, int i, Rng& rng) {
    cplx y = noiseless_rx(roi, ch, beams, s.se(i), s.sd(i), n);
    if (noise.sigma_o2 > 0.0) y += rng.complex_normal(noise.sigma_o2);
    return y;
}

cplx comm_rx(const BeamformerPair& beams, const CVec& g, const SymbolStreams& s, const NoiseConfig& noise, int i,
             Rng& rng) {
    cplx y = g.dot(beams.w) * s.se(i) + g.dot(beams.f) * s.sd(i);
    if (noise.sigma_o2 > 0.0) y += rng.complex_normal(noise.sigma_o2);
    return y;
}

Measurements batch_rx(const RoiVector& roi, const ChannelTrack& track, const BeamformerPair& beams,
                      const SymbolStreams& s, const NoiseConfig& noise, std::uint64_t seed, Backend backend) {
    const int N = track.snapshot().users();
    const int T = s.horizon();
    Measurements m;
    m.y.assign(N, CVec(T));

    auto user = [&](int n) {
        Rng rng(derive_seed(seed, "noise", static_cast<std::uint64_t>(n)));
        for (int i = 0; i < T; ++i) m.y[n](i) = sensing_rx(roi, track.at(i), beams, s, noise, n, i, rng);
    };

    if (backend == Backend::Serial) {
        for (int n = 0; n < N; ++n) user(n);
    } else {
#pragma omp parallel for schedule(static) num_threads(thread_count())
        for (int n = 0; n < N; ++n) user(n);
    }
    return m;
}

void write_measurements_csv(const Measurements& m, std::ostream& os) {
    os.precision(17);
    os << "user,time,re,im\n";
    for (int n = 0; n < m.users(); ++n)
        for (Eigen::Index i = 0; i < m.y[n].size(); ++i)
            os << n << ',' << i << ',' << m.y[n](i).real() << ',' << m.y[n](i).imag() << '\n';
}

}  // namespace netisac
