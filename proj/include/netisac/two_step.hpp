#pragma once

#include <utility>
#include <vector>

#include <json.hpp>

#include "netisac/scene.hpp"
#include "netisac/sensing_core.hpp"
#include "netisac/waveform.hpp"

namespace netisac {

/// How the data-symbol direction is recovered from the step-1 residuals.
enum class SvdScope {
    PerUser,    // each user: leading left singular vector of its own rank-1 matrix
    Consensus,  // phase-aligned average of the per-user directions
    Stacked     // leading left singular vector of [r_1 ... r_N] (default)
};

struct TwoStepConfig {
    EstimatorParams step1;
    EstimatorParams step2;
    double varpi2 = 0.0;  // residual interference variance for the theory side; never injected
    SvdScope scope = SvdScope::Stacked;
    bool centralized = false;
    bool keep_symbols = false;  // persist the recovered data symbols in the result
    bool qpsk_decisions = false;  // snap the SVD direction to the QPSK grid before cancelling
    bool project_sensing = true;  // remove the known s^e direction from residuals before the SVD
    RunOptions run;
};

struct DataSymbolEstimate {
    CVec s_hat_d;                  // unit-norm network direction
    std::vector<CVec> directions;  // unit-norm direction used by each user
    CVec scale;                    // per-user fitted scalar, scale_n = directions[n]^H r_n
    RVec singular_values;          // leading singular value per decomposition
    CVec soft;                     // SVD direction before any symbol decisions (equals s_hat_d without them)

    /// Symbol-level estimate sqrt(T) * s_hat_d; phase already aligned to the reference.
    CVec symbols() const;
};

/// Input row u + e seen by user n at slot i when data-symbol interference is
/// folded into the regressor. The pipeline itself regresses on the clean u,
/// because s_d is unknown to sensing users.
std::pair<cplx, CVec> step1_inputs(const ChannelSet& ch, const BeamformerPair& beams, const SymbolStreams& s,
                                   const Measurements& m, int n, int i);

/// Clean per-user streams (y, u) with u built from known w, channels and s_e.
std::vector<UserStream> clean_streams(const ChannelTrack& track, const BeamformerPair& beams, const SymbolStreams& s,
                                      const Measurements& m);

/// r_n = y_n - s_e .* (w^H G diag(h_n) x_hat).
CVec residual_signal(const CVec& yn, const ChannelTrack& track, const BeamformerPair& beams, const SymbolStreams& s,
                     const CVec& x_hat, int n);

/// z[n] is user n's length-T weighting vector (all ones if empty). Phase is
/// rotated so that the first entry shares the phase of `reference`.
DataSymbolEstimate estimate_data_symbols(const std::vector<CVec>& residuals, const std::vector<CVec>& z,
                                         SvdScope scope, cplx reference = 1.0);

/// Literal cancellation with the symbol estimate: y - s_hat_i f^H G diag(h_n) x_hat, paired with the clean u.
std::pair<cplx, CVec> step2_inputs(const ChannelSet& ch, const BeamformerPair& beams, const SymbolStreams& s,
                                   const Measurements& m, const CVec& x_hat, cplx s_hat_i, int n, int i);

/// Hard QPSK decisions on a unit-norm direction: blind 4th-power phase
/// recovery, nearest-point slicing, then the pi/2 ambiguity resolved against
/// `reference`. Returns a unit-norm vector.
CVec qpsk_decide(const CVec& direction, cplx reference);

/// |a^H b| / (|a| |b|)
double symbol_correlation(const CVec& a, const CVec& b);

struct TwoStepResult {
    Trajectory step1;
    Trajectory step2;
    DataSymbolEstimate symbols;
    bool cancelled = false;  // false when f = 0 and step 2 reuses step 1
    bool keep_symbols = false;

    nlohmann::json to_json(const CVec& x0, const CVec& true_sd) const;
};

/// Step 1 (interference as input noise), data-symbol recovery, cancellation
/// with the fitted per-user scale, step 2. Both steps start from zero.
TwoStepResult run_two_step(const ChannelTrack& track, const BeamformerPair& beams, const SymbolStreams& s,
                           const Measurements& m, const CombinationMatrix& C, const TwoStepConfig& cfg);

}  // namespace netisac
