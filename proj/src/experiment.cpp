#include "netisac/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <numeric>
#include <ostream>

#include "netisac/parallel.hpp"
#include "netisac/rng.hpp"

namespace netisac {

std::string to_string(Variant v) {
    switch (v) {
        case Variant::TwoStep: return "two-step";
        case Variant::Step1Only: return "step1-only";
        case Variant::NoPenalty: return "no-penalty";
        case Variant::ElementOnly: return "element-only";
        case Variant::Centralized: return "centralized";
    }
    return "?";
}

Variant parse_variant(const std::string& s) {
    for (Variant v : all_variants())
        if (to_string(v) == s) return v;
    throw ConfigError("unknown variant '" + s + "'");
}

const std::vector<Variant>& all_variants() {
    static const std::vector<Variant> v{Variant::TwoStep, Variant::Step1Only, Variant::NoPenalty,
                                        Variant::ElementOnly, Variant::Centralized};
    return v;
}

double ScenarioConfig::sigma2() const { return noise_from_snr(power, snr_db); }

double ScenarioConfig::effective_degree() const { return std::min(avg_degree, users - 1.0); }

ExperimentConfig ExperimentConfig::defaults() {
    ExperimentConfig c;
    // From `netisac tune` on the desk scenario (held-out seed, grid 0.01..0.5).
    c.estimator.eta1 = 0.01;
    c.estimator.eta2 = 0.3;
    c.estimator.eta1_element = 0.2;
    return c;
}

namespace {

template <class T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
    }
}

std::string scope_name(SvdScope s) {
    return s == SvdScope::Stacked ? "stacked" : s == SvdScope::PerUser ? "per_user" : "consensus";
}

SvdScope parse_scope(const std::string& s) {
    if (s == "stacked") return SvdScope::Stacked;
    if (s == "per_user") return SvdScope::PerUser;
    if (s == "consensus") return SvdScope::Consensus;
    throw ConfigError("unknown svd scope '" + s + "'");
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
    ExperimentConfig c = defaults();
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    if (j.contains("scenario")) {
        const auto& s = j["scenario"];
        auto& sc = c.scenario;
        sc.antennas = get_or(s, "antennas", sc.antennas);
        sc.dims = get_or(s, "dims", sc.dims);
        sc.users = get_or(s, "users", sc.users);
        sc.avg_degree = get_or(s, "avg_degree", sc.avg_degree);
        sc.snr_db = get_or(s, "snr_db", sc.snr_db);
        sc.power = get_or(s, "power", sc.power);
        sc.horizon = get_or(s, "horizon", sc.horizon);
        sc.sparsity = get_or(s, "sparsity", sc.sparsity);
        sc.amplitude = get_or(s, "amplitude", sc.amplitude);
        sc.data_fraction = get_or(s, "data_fraction", sc.data_fraction);
        if (s.contains("channel")) sc.channel = ChannelModel::from_json(s["channel"]);
        const auto sym = get_or<std::string>(s, "symbols", "qpsk");
        if (sym == "qpsk") sc.symbols = SymbolModel::Qpsk;
        else if (sym == "gaussian") sc.symbols = SymbolModel::Gaussian;
        else throw ConfigError("unknown symbol model '" + sym + "'");
    }
    if (j.contains("estimator")) {
        const auto& e = j["estimator"];
        auto& est = c.estimator;
        est.mu = get_or(e, "mu", est.mu);
        est.eta1 = get_or(e, "eta1", est.eta1);
        est.eta2 = get_or(e, "eta2", est.eta2);
        est.eta1_element = get_or(e, "eta1_element", est.eta1_element);
        est.scope = parse_scope(get_or<std::string>(e, "svd_scope", scope_name(est.scope)));
        est.symbol_decisions = get_or(e, "symbol_decisions", est.symbol_decisions);
    }
    if (j.contains("protocol")) {
        const auto& p = j["protocol"];
        c.protocol.runs = get_or(p, "runs", c.protocol.runs);
        c.protocol.settle = get_or(p, "settle", c.protocol.settle);
        c.protocol.window = get_or(p, "window", c.protocol.window);
        c.protocol.seed = get_or(p, "seed", c.protocol.seed);
    }
    if (j.contains("variants")) {
        c.variants.clear();
        for (const auto& v : j["variants"]) {
            if (!v.is_string()) throw ConfigError("variants must be strings");
            c.variants.push_back(parse_variant(v.get<std::string>()));
        }
    }
    c.theory = get_or(j, "theory", c.theory);
    c.varpi2 = get_or(j, "varpi2", c.varpi2);
    c.betas = get_or(j, "betas", c.betas);
    c.randomization_samples = get_or(j, "randomization_samples", c.randomization_samples);
    c.validate();
    return c;
}

nlohmann::json ExperimentConfig::to_json() const {
    nlohmann::json v = nlohmann::json::array();
    for (Variant x : variants) v.push_back(to_string(x));
    const auto& sc = scenario;
    return {{"scenario",
             {{"antennas", sc.antennas},
              {"dims", sc.dims},
              {"users", sc.users},
              {"avg_degree", sc.avg_degree},
              {"snr_db", sc.snr_db},
              {"power", sc.power},
              {"horizon", sc.horizon},
              {"sparsity", sc.sparsity},
              {"amplitude", sc.amplitude},
              {"data_fraction", sc.data_fraction},
              {"channel", sc.channel.to_json()},
              {"symbols", sc.symbols == SymbolModel::Qpsk ? "qpsk" : "gaussian"}}},
            {"estimator",
             {{"mu", estimator.mu},
              {"eta1", estimator.eta1},
              {"eta2", estimator.eta2},
              {"eta1_element", estimator.eta1_element},
              {"svd_scope", scope_name(estimator.scope)},
              {"symbol_decisions", estimator.symbol_decisions}}},
            {"protocol",
             {{"runs", protocol.runs},
              {"settle", protocol.settle},
              {"window", protocol.window},
              {"seed", protocol.seed}}},
            {"variants", v},
            {"theory", theory},
            {"varpi2", varpi2},
            {"betas", betas},
            {"randomization_samples", randomization_samples}};
}

void ExperimentConfig::validate() const {
    const auto& sc = scenario;
    if (sc.antennas < 1) throw ConfigError("antennas must be positive");
    for (int d : sc.dims)
        if (d < 1) throw ConfigError("dims must be positive");
    if (sc.users < 2) throw ConfigError("need at least two users");
    if (sc.avg_degree < 1.0) throw ConfigError("avg_degree must be at least 1");
    if (!std::isfinite(sc.snr_db)) throw ConfigError("snr_db must be finite");
    if (!(sc.power > 0.0)) throw ConfigError("power must be positive");
    if (sc.horizon < 1) throw ConfigError("horizon must be positive");
    if (sc.sparsity < 0 || sc.sparsity > sc.pixels()) throw ConfigError("sparsity must lie in [0, K]");
    if (!(sc.amplitude >= 0.0)) throw ConfigError("amplitude must be nonnegative");
    if (!(sc.data_fraction >= 0.0 && sc.data_fraction <= 1.0)) throw ConfigError("data_fraction must lie in [0, 1]");
    if (!sc.channel.path_loss.empty() && static_cast<int>(sc.channel.path_loss.size()) != sc.users)
        throw ConfigError("path_loss needs one entry per user");
    if (estimator.mu < 0.0 || estimator.eta1 < 0.0 || estimator.eta2 < 0.0 || estimator.eta1_element < 0.0)
        throw ConfigError("estimator weights must be nonnegative");
    if (protocol.runs < 1) throw ConfigError("runs must be positive");
    if (protocol.window < 1 || protocol.settle < 0) throw ConfigError("bad steady-state window");
    if (variants.empty()) throw ConfigError("variant list is empty");
    for (double b : betas)
        if (!(b >= 0.0 && b <= 1.0)) throw ConfigError("betas must lie in [0, 1]");
    if (randomization_samples < 1) throw ConfigError("randomization_samples must be positive");
    if (varpi2 < 0.0) throw ConfigError("varpi2 must be nonnegative");
}

RunInstance make_instance(const ScenarioConfig& sc, std::uint64_t run_seed) {
    RunInstance inst;
    inst.seed = run_seed;
    const RoiGrid grid(sc.dims[0], sc.dims[1], sc.dims[2]);
    inst.graph = build_random_network(sc.users, sc.effective_degree(), derive_seed(run_seed, "graph"));
    inst.C = metropolis_weights(inst.graph);

    // Support: whole K1-blocks in random order, the last one possibly partial.
    Rng srng(derive_seed(run_seed, "support"));
    std::vector<int> blocks(grid.block_count());
    std::iota(blocks.begin(), blocks.end(), 0);
    for (int i = static_cast<int>(blocks.size()) - 1; i > 0; --i) std::swap(blocks[i], blocks[srng.index(i + 1)]);
    std::vector<int> support;
    for (int b : blocks)
        for (int j = 0; j < grid.k1 && static_cast<int>(support.size()) < sc.sparsity; ++j)
            support.push_back(b * grid.k1 + j);
    std::sort(support.begin(), support.end());
    inst.roi = build_roi(grid, support, std::vector<double>(support.size(), sc.amplitude));

    inst.track = ChannelTrack::generate(sc.antennas, grid, sc.users, sc.channel, derive_seed(run_seed, "channels"),
                                        sc.horizon);
    inst.symbols = gen_symbols(sc.horizon, derive_seed(run_seed, "symbols"), sc.symbols);

    Rng brng(derive_seed(run_seed, "beams"));
    const CVec w = brng.complex_normal_vec(sc.antennas);
    const CVec& g = inst.track.snapshot().g;
    inst.beams.w = std::sqrt((1.0 - sc.data_fraction) * sc.power) * w.normalized();
    inst.beams.f = std::sqrt(sc.data_fraction * sc.power) * g.normalized();

    inst.noise.sigma_o2 = sc.sigma2();
    inst.measurements = batch_rx(inst.roi, inst.track, inst.beams, inst.symbols, inst.noise,
                                 derive_seed(run_seed, "noise"), Backend::Serial);
    return inst;
}

namespace {

std::vector<CMat> regressor_covariance(const RunInstance& inst, const ScenarioConfig& sc) {
    return sc.channel.fading == Fading::PerSlot
               ? covariance_R_fading(sc.pixels(), sc.users, inst.beams.w, sc.channel)
               : covariance_R(inst.track.snapshot(), inst.beams.w);
}

}  // namespace

double default_mu(const RunInstance& inst, const ScenarioConfig& sc) {
    return default_step_size(regressor_covariance(inst, sc), inst.roi.x);
}

Trajectory run_variant(const RunInstance& inst, const ScenarioConfig& sc, Variant v, const EstimatorConfig& est,
                       Backend backend) {
    const double mu = est.mu > 0.0 ? est.mu : default_mu(inst, sc);
    const int N = sc.users, K1 = sc.dims[0];
    TwoStepConfig cfg;
    cfg.scope = est.scope;
    cfg.qpsk_decisions = est.symbol_decisions && sc.symbols == SymbolModel::Qpsk;
    cfg.run.backend = backend;
    double e1 = est.eta1, e2 = est.eta2;
    switch (v) {
        case Variant::NoPenalty: e1 = e2 = 0.0; break;
        case Variant::ElementOnly: e1 = est.eta1_element; e2 = 0.0; break;
        case Variant::Centralized: cfg.centralized = true; break;
        default: break;
    }
    cfg.step1 = EstimatorParams::uniform(N, mu, e1, e2, K1);
    cfg.step2 = cfg.step1;
    if (v == Variant::Step1Only) {
        const auto streams = clean_streams(inst.track, inst.beams, inst.symbols, inst.measurements);
        return run_distributed(streams, inst.C, cfg.step1, CVec::Zero(sc.pixels()), cfg.run);
    }
    return run_two_step(inst.track, inst.beams, inst.symbols, inst.measurements, inst.C, cfg).step2;
}

RVec msd_linear(const Trajectory& t, const CVec& x0) {
    RVec m(static_cast<Eigen::Index>(t.estimates.size()));
    for (std::size_t r = 0; r < t.estimates.size(); ++r) m(r) = network_msd(t.estimates[r], x0);
    return m;
}

RVec to_db(const RVec& linear) {
    RVec d(linear.size());
    for (Eigen::Index i = 0; i < linear.size(); ++i)
        d(i) = linear(i) > 0.0 ? std::max(10.0 * std::log10(linear(i)), -300.0) : -300.0;
    return d;
}

double steady_msd(const RVec& series_db, int settle, int window) {
    if (series_db.size() < settle)
        throw ProtocolError("series has " + std::to_string(series_db.size()) + " samples, settle needs " +
                            std::to_string(settle));
    if (window < 1 || window > series_db.size()) throw ProtocolError("steady-state window does not fit the series");
    return series_db.tail(window).mean();
}

MsdSeries msd_curve(const std::vector<Trajectory>& runs, const std::vector<CVec>& x0s, int settle, int window) {
    if (runs.empty() || runs.size() != x0s.size()) throw ParameterError("need one ground truth per run");
    RVec acc = msd_linear(runs[0], x0s[0]);
    for (std::size_t r = 1; r < runs.size(); ++r) {
        const RVec m = msd_linear(runs[r], x0s[r]);
        if (m.size() != acc.size()) throw ParameterError("runs differ in length");
        acc += m;
    }
    MsdSeries s;
    s.msd_db = to_db(acc / static_cast<double>(runs.size()));
    s.steady = steady_msd(s.msd_db, settle, window);
    return s;
}

const VariantResult& ExperimentResult::get(Variant v) const {
    for (const auto& r : variants)
        if (r.variant == v) return r;
    throw ParameterError("variant " + to_string(v) + " was not run");
}

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}


// Re-raise a worker exception in the same error class, prefixed with run context.
[[noreturn]] void rethrow_with_context(std::exception_ptr e, const std::string& where) {
    try {
        std::rethrow_exception(e);
    } catch (const NumericalError& x) {
        throw NumericalError(where + ": " + x.what());
    } catch (const ConfigError& x) {
        throw ConfigError(where + ": " + x.what());
    } catch (const ParameterError& x) {
        throw ParameterError(where + ": " + x.what());
    }
}

}  // namespace

void ExperimentResult::write_curves_csv(std::ostream& os) const {
    os << "iteration,variant,seed,msd_db\n";
    for (const auto& v : variants) {
        const std::string name = to_string(v.variant);
        for (std::size_t r = 0; r < v.run_curves_db.size(); ++r)
            for (Eigen::Index i = 0; i < v.run_curves_db[r].size(); ++i)
                os << i << ',' << name << ',' << run_seeds[r] << ',' << num(v.run_curves_db[r](i)) << '\n';
        for (Eigen::Index i = 0; i < v.mean_curve_db.size(); ++i)
            os << i << ',' << name << ",mean," << num(v.mean_curve_db(i)) << '\n';
    }
}

nlohmann::json ExperimentResult::summary() const {
    nlohmann::json vs = nlohmann::json::array();
    for (const auto& v : variants)
        vs.push_back({{"variant", to_string(v.variant)},
                      {"steady_msd_db", v.steady_db},
                      {"final_msd_db", v.mean_curve_db(v.mean_curve_db.size() - 1)},
                      {"run_steady_msd_db", v.run_steady_db}});
    return {{"config", config.to_json()}, {"variants", vs}, {"theory", theory}, {"beamform", beamform}};
}

TheoryInputs theory_inputs(const RunInstance& inst, const ScenarioConfig& sc, double mu) {
    TheoryInputs in;
    in.channels = inst.track.snapshot();
    in.fading = sc.channel.fading == Fading::PerSlot;
    in.model = sc.channel;
    in.w = inst.beams.w;
    in.x0 = inst.roi.x;
    in.C = inst.C;
    in.mu.assign(sc.users, mu);
    return in;
}

nlohmann::json theory_for_instance(const RunInstance& inst, const ScenarioConfig& sc, double mu, double varpi2) {
    TheoryInputs in = theory_inputs(inst, sc, mu);
    double s1 = 0.0;
    if (in.fading) {
        double pl = 0.0;
        for (int n = 0; n < sc.users; ++n) pl += sc.channel.user_path_loss(n);
        s1 = inst.noise.sigma_o2 + inst.beams.f.squaredNorm() * pl / sc.users;
    } else {
        s1 = step1_input_variance(inst.track.snapshot(), inst.beams.f, inst.noise.sigma_o2);
    }
    const double s2 = inst.noise.sigma_o2 + varpi2;
    // A does not depend on sigma_in2, so one stability check serves both steps.
    auto ws = TheoryWorkspace::build(in);
    nlohmann::json out;
    for (auto [name, s] : {std::pair{"step1", s1}, std::pair{"step2", s2}}) {
        in.sigma_in2 = s;
        ws.noise = gradient_error_cov(ws.R, in.x0, s);
        const nlohmann::json params = {{"sigma_in2", s}, {"mu", mu}, {"K", sc.pixels()}, {"N", sc.users}};
        const double f2 = theory_F2(in);
        if (ws.stability.stable) {
            out[name] = theory_report(steady_state_mse(ws), f2, params);
        } else {
            MsePrediction p;
            p.stability = ws.stability;
            auto rep = theory_report(p, f2, params);
            rep["mse_predicted"] = nullptr;
            rep["mse_per_user"] = nullptr;
            rep["error"] = "unstable step sizes: spectral radius of (I - DH) O^H is " +
                           std::to_string(ws.stability.rho_A);
            out[name] = rep;
        }
    }
    return out;
}

nlohmann::json run_beamform(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.betas.empty()) throw ConfigError("no beta1 values given");
    const int R = cfg.protocol.runs;
    std::vector<std::uint64_t> seeds;
    for (int r = 0; r < R; ++r) seeds.push_back(derive_seed(cfg.protocol.seed, "run", r));
    const int B = static_cast<int>(cfg.betas.size());
    std::vector<nlohmann::json> rows(static_cast<std::size_t>(R) * B);
    std::vector<std::exception_ptr> berr(R);
#pragma omp parallel for schedule(dynamic) num_threads(thread_count())
    for (int r = 0; r < R; ++r) {
        try {
            const auto inst = make_instance(cfg.scenario, seeds[r]);
            const double mu = cfg.estimator.mu > 0.0 ? cfg.estimator.mu : default_mu(inst, cfg.scenario);
            TheoryInputs in = theory_inputs(inst, cfg.scenario, mu);
            in.sigma_in2 = step1_input_variance(inst.track.snapshot(), inst.beams.f, inst.noise.sigma_o2);
            for (int b = 0; b < B; ++b) {
                const auto rep = optimize_beamformers(in, inst.track.snapshot().g, inst.noise.sigma_o2,
                                                      cfg.scenario.power, cfg.betas[b],
                                                      derive_seed(seeds[r], "beamform"),
                                                      cfg.randomization_samples);
                auto j = rep.to_json();
                j["seed"] = seeds[r];
                rows[static_cast<std::size_t>(r) * B + b] = std::move(j);
            }
        } catch (...) {
            berr[r] = std::current_exception();
        }
    }
    for (int r = 0; r < R; ++r)
        if (berr[r]) rethrow_with_context(berr[r], "beamform run " + std::to_string(r) + " (seed " + std::to_string(seeds[r]) + ")");
    nlohmann::json means = nlohmann::json::array();
    for (int b = 0; b < B; ++b) {
        double f1 = 0.0, f2 = 0.0;
        for (int r = 0; r < R; ++r) {
            f1 += rows[static_cast<std::size_t>(r) * B + b]["F1"].get<double>();
            f2 += rows[static_cast<std::size_t>(r) * B + b]["F2"].get<double>();
        }
        means.push_back({{"beta1", cfg.betas[b]}, {"F1", f1 / R}, {"F2", f2 / R}});
    }
    return {{"runs", rows}, {"mean", means}};
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const int R = cfg.protocol.runs;
    const int V = static_cast<int>(cfg.variants.size());
    ExperimentResult res;
    res.config = cfg;
    for (int r = 0; r < R; ++r) res.run_seeds.push_back(derive_seed(cfg.protocol.seed, "run", r));

    std::vector<std::vector<Trajectory>> traj(V, std::vector<Trajectory>(R));
    std::vector<CVec> x0s(R);
    std::vector<std::exception_ptr> errors(R);
    std::vector<std::string> where(R);

#pragma omp parallel for schedule(dynamic) num_threads(thread_count())
    for (int r = 0; r < R; ++r) {
        where[r] = "run " + std::to_string(r) + " (seed " + std::to_string(res.run_seeds[r]) + ")";
        try {
            const auto inst = make_instance(cfg.scenario, res.run_seeds[r]);
            x0s[r] = inst.roi.x;
            for (int v = 0; v < V; ++v) {
                where[r] = "run " + std::to_string(r) + " (seed " + std::to_string(res.run_seeds[r]) + "), variant " +
                           to_string(cfg.variants[v]);
                traj[v][r] = run_variant(inst, cfg.scenario, cfg.variants[v], cfg.estimator, Backend::Serial);
            }
        } catch (...) {
            errors[r] = std::current_exception();
        }
    }
    for (int r = 0; r < R; ++r)
        if (errors[r]) rethrow_with_context(errors[r], where[r]);

    for (int v = 0; v < V; ++v) {
        VariantResult vr;
        vr.variant = cfg.variants[v];
        const auto mean = msd_curve(traj[v], x0s, cfg.protocol.settle, cfg.protocol.window);
        vr.mean_curve_db = mean.msd_db;
        vr.steady_db = mean.steady;
        for (int r = 0; r < R; ++r) {
            vr.run_curves_db.push_back(to_db(msd_linear(traj[v][r], x0s[r])));
            vr.run_steady_db.push_back(steady_msd(vr.run_curves_db.back(), cfg.protocol.settle, cfg.protocol.window));
        }
        res.variants.push_back(std::move(vr));
    }

    if (cfg.theory) {
        const auto inst = make_instance(cfg.scenario, res.run_seeds[0]);
        const double mu = cfg.estimator.mu > 0.0 ? cfg.estimator.mu : default_mu(inst, cfg.scenario);
        res.theory = theory_for_instance(inst, cfg.scenario, mu, cfg.varpi2);
    }

    if (!cfg.betas.empty()) res.beamform = run_beamform(cfg);
    return res;
}

SweepAxis parse_axis(const std::string& s) {
    if (s == "L") return SweepAxis::L;
    if (s == "N") return SweepAxis::N;
    if (s == "K") return SweepAxis::K;
    if (s == "beta1") return SweepAxis::Beta1;
    if (s == "SNR" || s == "snr") return SweepAxis::Snr;
    throw ConfigError("unknown sweep axis '" + s + "' (expected L, N, K, beta1 or SNR)");
}

std::string to_string(SweepAxis a) {
    switch (a) {
        case SweepAxis::L: return "L";
        case SweepAxis::N: return "N";
        case SweepAxis::K: return "K";
        case SweepAxis::Beta1: return "beta1";
        case SweepAxis::Snr: return "SNR";
    }
    return "?";
}

ExperimentConfig apply_axis(const ExperimentConfig& base, SweepAxis axis, double value) {
    ExperimentConfig c = base;
    auto integer = [&](const char* what) {
        if (value != std::floor(value) || value < 1) throw ConfigError(std::string(what) + " must be a positive integer");
        return static_cast<int>(value);
    };
    switch (axis) {
        case SweepAxis::L: c.scenario.sparsity = integer("L"); break;
        case SweepAxis::N:
            c.scenario.users = integer("N");
            if (!c.scenario.channel.path_loss.empty()) c.scenario.channel.path_loss.assign(c.scenario.users, 1.0);
            break;
        case SweepAxis::K: {
            const int K = integer("K");
            if (K % 2 != 0) throw ConfigError("K must be even (K1 = 2)");
            const int half = K / 2;
            int a = 1;
            for (int d = 1; d * d <= half; ++d)
                if (half % d == 0) a = d;
            const double ratio = static_cast<double>(base.scenario.sparsity) / base.scenario.pixels();
            c.scenario.dims = {2, a, half / a};
            c.scenario.sparsity = std::max(1, static_cast<int>(std::lround(ratio * K)));
            break;
        }
        case SweepAxis::Beta1: c.betas = {value}; break;
        case SweepAxis::Snr: c.scenario.snr_db = value; break;
    }
    c.validate();
    return c;
}

std::vector<SweepPoint> sweep(const ExperimentConfig& base, SweepAxis axis, const std::vector<double>& values) {
    if (values.empty()) throw ConfigError("sweep needs at least one value");
    std::vector<SweepPoint> pts;
    for (double v : values) pts.push_back({v, run_experiment(apply_axis(base, axis, v))});
    return pts;
}

void write_sweep_csv(const std::vector<SweepPoint>& pts, SweepAxis axis, std::ostream& os) {
    const std::string ax = to_string(axis);
    if (axis == SweepAxis::Beta1) {
        os << "axis,value,seed,F1,F2,F2_full,Psi1,Psi2,power_used\n";
        for (const auto& p : pts) {
            for (const auto& row : p.result.beamform["runs"]) {
                const auto& full = row["F2_full"];
                os << ax << ',' << num(p.value) << ',' << row["seed"].get<std::uint64_t>() << ','
                   << num(row["F1"].get<double>()) << ',' << num(row["F2"].get<double>()) << ','
                   << (full.is_null() ? std::string("nan") : num(full.get<double>())) << ','
                   << num(row["Psi1"].get<double>()) << ',' << num(row["Psi2"].get<double>()) << ','
                   << num(row["power_used"].get<double>()) << '\n';
            }
            for (const auto& m : p.result.beamform["mean"])
                os << ax << ',' << num(p.value) << ",mean," << num(m["F1"].get<double>()) << ','
                   << num(m["F2"].get<double>()) << ",,,,\n";
        }
        return;
    }
    os << "axis,value,variant,seed,steady_msd_db\n";
    for (const auto& p : pts)
        for (const auto& v : p.result.variants) {
            const std::string name = to_string(v.variant);
            for (std::size_t r = 0; r < v.run_steady_db.size(); ++r)
                os << ax << ',' << num(p.value) << ',' << name << ',' << p.result.run_seeds[r] << ','
                   << num(v.run_steady_db[r]) << '\n';
            os << ax << ',' << num(p.value) << ',' << name << ",mean," << num(v.steady_db) << '\n';
        }
}

TuneResult tune_regularization(const ExperimentConfig& base, const std::vector<double>& grid) {
    ExperimentConfig c = base;
    c.protocol.seed = derive_seed(base.protocol.seed, "tune");
    c.protocol.runs = std::min(base.protocol.runs, 8);
    c.theory = false;
    c.betas.clear();

    TuneResult best{0, 0, 0, std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    c.variants = {Variant::TwoStep};
    for (double e1 : grid)
        for (double e2 : grid) {
            c.estimator.eta1 = e1;
            c.estimator.eta2 = e2;
            const double s = run_experiment(c).get(Variant::TwoStep).steady_db;
            if (s < best.steady_two_step) {
                best.steady_two_step = s;
                best.eta1 = e1;
                best.eta2 = e2;
            }
        }
    c.variants = {Variant::ElementOnly};
    for (double e1 : grid) {
        c.estimator.eta1_element = e1;
        const double s = run_experiment(c).get(Variant::ElementOnly).steady_db;
        if (s < best.steady_element) {
            best.steady_element = s;
            best.eta1_element = e1;
        }
    }
    return best;
}

}  // namespace netisac
