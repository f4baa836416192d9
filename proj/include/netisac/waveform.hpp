#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "netisac/rng.hpp"
#include "netisac/scene.hpp"
#include "netisac/types.hpp"

namespace netisac {

struct BeamformerPair {
    CVec w;  // sensing beam
    CVec f;  // data beam

    double power() const { return w.squaredNorm() + f.squaredNorm(); }
};

enum class SymbolModel { Qpsk, Gaussian };

struct SymbolStreams {
    CVec se;  // sensing symbols
    CVec sd;  // data symbols

    int horizon() const { return static_cast<int>(se.size()); }
};

struct NoiseConfig {
    double sigma_o2 = 0.0;   // receiver noise variance
    double sigma_in2 = 0.0;  // input perturbation variance, theory side only
};

/// Independent draws for s_e and s_d. Qpsk symbols are unit modulus; Gaussian
/// symbols are CN(0,1).
SymbolStreams gen_symbols(int T, std::uint64_t seed, SymbolModel model = SymbolModel::Qpsk);

/// Noise variance implied by a transmit SNR in dB: P / 10^(snr/10).
double noise_from_snr(double power, double snr_db);

/// u = (s_e w^H G diag(h_n))^H.
CVec clean_input_row(const CVec& w, const CMat& G, const CVec& hn, cplx se);
/// e = (s_d f^H G diag(h_n))^H, the data-symbol interference on the input row.
CVec interference_row(const CVec& f, const CMat& G, const CVec& hn, cplx sd);

cplx sensing_rx(const RoiVector& roi, const ChannelSet& ch, const BeamformerPair& beams, const SymbolStreams& s,
                const NoiseConfig& noise, int n, int i, Rng& rng);

cplx comm_rx(const BeamformerPair& beams, const CVec& g, const SymbolStreams& s, const NoiseConfig& noise, int i,
             Rng& rng);

/// y[n] holds the length-T record of user n.
struct Measurements {
    std::vector<CVec> y;

    int users() const { return static_cast<int>(y.size()); }
    int horizon() const { return y.empty() ? 0 : static_cast<int>(y.front().size()); }
};

/// All sensing records. User n draws its noise from its own substream of
/// `seed`, so the result does not depend on the backend or thread count.
Measurements batch_rx(const RoiVector& roi, const ChannelTrack& track, const BeamformerPair& beams,
                      const SymbolStreams& s, const NoiseConfig& noise, std::uint64_t seed,
                      Backend backend = Backend::OpenMP);

/// Columns user,time,re,im.
void write_measurements_csv(const Measurements& m, std::ostream& os);

}  // namespace netisac
