#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "netisac/beamform.hpp"
#include "netisac/two_step.hpp"

namespace netisac {

struct ProtocolError : ParameterError {
    using ParameterError::ParameterError;
};

enum class Variant { TwoStep, Step1Only, NoPenalty, ElementOnly, Centralized };

std::string to_string(Variant v);
Variant parse_variant(const std::string& s);
const std::vector<Variant>& all_variants();

struct ScenarioConfig {
    int antennas = 4;
    std::array<int, 3> dims{2, 2, 2};
    int users = 5;
    double avg_degree = 3.0;  // clamped to users - 1 for small networks
    double snr_db = 10.0;
    double power = 10.0;
    int horizon = 600;
    int sparsity = 2;  // L; support is drawn as whole K1-blocks
    double amplitude = 1.0;
    double data_fraction = 0.5;  // share of P on the data beam f
    ChannelModel channel;
    SymbolModel symbols = SymbolModel::Qpsk;

    int pixels() const { return dims[0] * dims[1] * dims[2]; }
    double sigma2() const;
    double effective_degree() const;
};

struct EstimatorConfig {
    double mu = 0.0;          // 0 selects 0.5 / max_l tr(H_l)
    double eta1 = 0.0;        // l1 weight for the sparse variants
    double eta2 = 0.0;        // l2,1 weight for the block-sparse variants
    double eta1_element = 0.0;  // l1 weight for the element-only variant
    SvdScope scope = SvdScope::Stacked;
    bool symbol_decisions = true;  // QPSK hard decisions after the SVD (ignored for Gaussian symbols)
};

struct ProtocolConfig {
    int runs = 20;
    int settle = 600;
    int window = 150;
    std::uint64_t seed = 1;
};

struct ExperimentConfig {
    ScenarioConfig scenario;
    EstimatorConfig estimator;
    ProtocolConfig protocol;
    std::vector<Variant> variants = all_variants();
    bool theory = false;
    double varpi2 = 0.0;
    std::vector<double> betas;  // beamforming sweep, empty disables
    int randomization_samples = 50;

    static ExperimentConfig defaults();
    static ExperimentConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
    void validate() const;
};

/// Everything drawn for one Monte-Carlo run.
struct RunInstance {
    std::uint64_t seed = 0;
    NetworkGraph graph{2};
    CombinationMatrix C;
    RoiVector roi;
    ChannelTrack track;
    SymbolStreams symbols;
    BeamformerPair beams;
    NoiseConfig noise;
    Measurements measurements;
};

RunInstance make_instance(const ScenarioConfig& sc, std::uint64_t run_seed);

/// 0.5 / max_l tr(H_l) with H_l built from the true scene.
double default_mu(const RunInstance& inst, const ScenarioConfig& sc);

/// Trajectory whose MSD is reported for the variant (step 2 for two-step variants).
Trajectory run_variant(const RunInstance& inst, const ScenarioConfig& sc, Variant v, const EstimatorConfig& est,
                       Backend backend = Backend::OpenMP);

/// Linear per-record network MSD.
RVec msd_linear(const Trajectory& t, const CVec& x0);
/// 10 log10 with a -300 dB floor.
RVec to_db(const RVec& linear);

struct MsdSeries {
    RVec msd_db;
    double steady = 0.0;
};

/// Run-averaged curve: 10 log10 of the mean over runs of each run's linear
/// MSD against its own ground truth.
MsdSeries msd_curve(const std::vector<Trajectory>& runs, const std::vector<CVec>& x0s, int settle, int window);
/// Mean of the last `window` samples; needs at least `settle` samples.
double steady_msd(const RVec& series_db, int settle, int window);

struct VariantResult {
    Variant variant;
    RVec mean_curve_db;             // 10 log10 of the run-averaged linear MSD
    std::vector<RVec> run_curves_db;
    std::vector<double> run_steady_db;
    double steady_db = 0.0;         // steady value of the mean curve
};

struct ExperimentResult {
    ExperimentConfig config;
    std::vector<std::uint64_t> run_seeds;
    std::vector<VariantResult> variants;
    nlohmann::json theory;     // null unless enabled
    nlohmann::json beamform;   // null unless betas given

    const VariantResult& get(Variant v) const;
    void write_curves_csv(std::ostream& os) const;
    nlohmann::json summary() const;
};

ExperimentResult run_experiment(const ExperimentConfig& cfg);
/// Beamforming over cfg.betas for every run instance: {"runs": [...], "mean": [{beta1, F1, F2}]}.
nlohmann::json run_beamform(const ExperimentConfig& cfg);

enum class SweepAxis { L, N, K, Beta1, Snr };
SweepAxis parse_axis(const std::string& s);
std::string to_string(SweepAxis a);

/// Config with one axis overridden. K keeps K1 = 2 and the base L/K ratio.
ExperimentConfig apply_axis(const ExperimentConfig& base, SweepAxis axis, double value);

struct SweepPoint {
    double value;
    ExperimentResult result;
};

std::vector<SweepPoint> sweep(const ExperimentConfig& base, SweepAxis axis, const std::vector<double>& values);
void write_sweep_csv(const std::vector<SweepPoint>& pts, SweepAxis axis, std::ostream& os);

/// Theory inputs for an instance (sigma_in2 left at zero).
TheoryInputs theory_inputs(const RunInstance& inst, const ScenarioConfig& sc, double mu);

/// Theory predictions for run 0 of the configuration (step-1 and step-2 noise mappings).
nlohmann::json theory_for_instance(const RunInstance& inst, const ScenarioConfig& sc, double mu, double varpi2);

struct TuneResult {
    double eta1;
    double eta2;
    double eta1_element;
    double steady_two_step;
    double steady_element;
};

/// Log-grid search of the regularization weights on a held-out seed.
TuneResult tune_regularization(const ExperimentConfig& base, const std::vector<double>& grid);

}  // namespace netisac
