// netisac command line: simulate, theory, beamform, sweep, tune.
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "netisac/experiment.hpp"
#include "netisac/parallel.hpp"

namespace fs = std::filesystem;
using namespace netisac;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kNumericalError = 3;

ExperimentConfig load_config(const std::string& path) {
    if (path.empty()) return ExperimentConfig::defaults();
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
    }
    return ExperimentConfig::from_json(j);
}

std::ofstream open_out(const fs::path& dir, const std::string& name) {
    fs::create_directories(dir);
    std::ofstream os(dir / name);
    if (!os) throw ConfigError("cannot write " + (dir / name).string());
    return os;
}

struct Common {
    std::string config;
    std::string out = "netisac_out";
    long long seed = -1;
    int runs = 0;
    bool full_scale = false;

    void add(CLI::App* app) {
        app->add_flag("--full-scale", full_scale, "K = 4x4x4, N = 20, M = 16, L = 8");
        app->add_option("-c,--config", config, "experiment config (JSON)");
        app->add_option("-o,--out", out, "output directory");
        app->add_option("--seed", seed, "override the master seed");
        app->add_option("--runs", runs, "override the Monte-Carlo run count");
    }

    ExperimentConfig load() const {
        auto cfg = load_config(config);
        if (seed >= 0) cfg.protocol.seed = static_cast<std::uint64_t>(seed);
        if (runs > 0) cfg.protocol.runs = runs;
        if (full_scale) {
            cfg.scenario.dims = {4, 4, 4};
            cfg.scenario.users = 20;
            cfg.scenario.antennas = 16;
            cfg.scenario.sparsity = 8;
            cfg.scenario.avg_degree = 4.0;
        }
        cfg.validate();
        return cfg;
    }
};

std::vector<double> parse_values(const std::string& s) {
    std::vector<double> v;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            std::size_t used = 0;
            v.push_back(std::stod(tok, &used));
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw ConfigError("bad value '" + tok + "' in list");
        }
    }
    if (v.empty()) throw ConfigError("empty value list");
    return v;
}

int cmd_simulate(const Common& c, bool dump, bool theory) {
    auto cfg = c.load();
    cfg.theory = cfg.theory || theory;
    const auto res = run_experiment(cfg);
    const fs::path dir(c.out);
    {
        auto os = open_out(dir, "curves.csv");
        res.write_curves_csv(os);
    }
    open_out(dir, "summary.json") << res.summary().dump(2) << '\n';
    if (dump) {
        const auto inst = make_instance(cfg.scenario, res.run_seeds[0]);
        {
            auto os = open_out(dir, "channels.csv");
            dump_channels_csv(inst.track.snapshot(), os);
        }
        auto os = open_out(dir, "measurements.csv");
        write_measurements_csv(inst.measurements, os);
    }
    for (const auto& v : res.variants)
        std::printf("%-13s steady MSD %8.3f dB\n", to_string(v.variant).c_str(), v.steady_db);
    return kOk;
}

int cmd_theory(const Common& c) {
    const auto cfg = c.load();
    const auto inst = make_instance(cfg.scenario, derive_seed(cfg.protocol.seed, "run", 0));
    const double mu = cfg.estimator.mu > 0.0 ? cfg.estimator.mu : default_mu(inst, cfg.scenario);
    const auto rep = theory_for_instance(inst, cfg.scenario, mu, cfg.varpi2);
    open_out(fs::path(c.out), "theory.json") << rep.dump(2) << '\n';
    std::cout << rep.dump(2) << '\n';
    if (rep["step1"].contains("error")) {
        std::cerr << "netisac: " << rep["step1"]["error"].get<std::string>() << '\n';
        return kNumericalError;
    }
    return kOk;
}

int cmd_beamform(const Common& c, const std::vector<double>& betas) {
    auto cfg = c.load();
    if (!betas.empty()) cfg.betas = betas;
    if (cfg.betas.empty()) throw ConfigError("give --beta1 or set betas in the config");
    const auto rep = run_beamform(cfg);
    open_out(fs::path(c.out), "beamform.json") << rep.dump(2) << '\n';
    for (const auto& m : rep["mean"])
        std::printf("beta1 %.3f  mean F1 %.6g  mean F2 %.6g\n", m["beta1"].get<double>(), m["F1"].get<double>(),
                    m["F2"].get<double>());
    return kOk;
}

int cmd_sweep(const Common& c, const std::string& axis_name, const std::string& values) {
    const auto cfg = c.load();
    const SweepAxis axis = parse_axis(axis_name);
    const auto pts = sweep(cfg, axis, parse_values(values));
    auto os = open_out(fs::path(c.out), "sweep.csv");
    write_sweep_csv(pts, axis, os);
    for (const auto& p : pts) {
        std::printf("%s = %g:", to_string(axis).c_str(), p.value);
        if (axis == SweepAxis::Beta1) {
            const auto& m = p.result.beamform["mean"][0];
            std::printf("  F1 %.6g  F2 %.6g", m["F1"].get<double>(), m["F2"].get<double>());
        } else {
            for (const auto& v : p.result.variants) std::printf("  %s %.3f", to_string(v.variant).c_str(), v.steady_db);
        }
        std::printf("\n");
    }
    return kOk;
}

int cmd_tune(const Common& c, const std::string& grid) {
    const auto cfg = c.load();
    const auto t = tune_regularization(cfg, parse_values(grid));
    const nlohmann::json j = {{"eta1", t.eta1},
                              {"eta2", t.eta2},
                              {"eta1_element", t.eta1_element},
                              {"steady_two_step_db", t.steady_two_step},
                              {"steady_element_db", t.steady_element}};
    open_out(fs::path(c.out), "tune.json") << j.dump(2) << '\n';
    std::cout << j.dump(2) << '\n';
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"netisac: networked ISAC sensing toolkit"};
    app.require_subcommand(1);

    Common sim_c, th_c, bf_c, sw_c, tu_c;
    bool dump = false, with_theory = false;
    auto* sim = app.add_subcommand("simulate", "Monte-Carlo run of the configured variants");
    sim_c.add(sim);
    sim->add_flag("--dump-channels", dump, "also write run-0 channels and measurements as CSV");
    sim->add_flag("--theory", with_theory, "include steady-state predictions in summary.json");

    auto* th = app.add_subcommand("theory", "steady-state MSE prediction for run 0");
    th_c.add(th);

    std::vector<double> betas;
    auto* bf = app.add_subcommand("beamform", "beamformer optimization");
    bf_c.add(bf);
    bf->add_option("--beta1", betas, "tradeoff weight(s) in [0, 1]");

    std::string axis, values;
    auto* sw = app.add_subcommand("sweep", "steady MSD (or F1/F2 for beta1) across one axis");
    sw_c.add(sw);
    sw->add_option("--axis", axis, "L, N, K, beta1 or SNR")->required();
    sw->add_option("--values", values, "comma-separated values")->required();

    std::string grid = "0.01,0.03,0.1,0.2,0.3,0.5";
    auto* tu = app.add_subcommand("tune", "grid search of the regularization weights on a held-out seed");
    tu_c.add(tu);
    tu->add_option("--grid", grid, "comma-separated weights");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfigError;
    }

    try {
        if (*sim) return cmd_simulate(sim_c, dump, with_theory);
        if (*th) return cmd_theory(th_c);
        if (*bf) return cmd_beamform(bf_c, betas);
        if (*sw) return cmd_sweep(sw_c, axis, values);
        if (*tu) return cmd_tune(tu_c, grid);
    } catch (const NumericalError& e) {
        std::cerr << "netisac: numerical failure: " << e.what() << '\n';
        return kNumericalError;
    } catch (const ConfigError& e) {
        std::cerr << "netisac: config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const ParameterError& e) {
        std::cerr << "netisac: config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "netisac: " << e.what() << '\n';
        return kNumericalError;
    }
    return kOk;
}
