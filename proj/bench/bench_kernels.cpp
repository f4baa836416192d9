// Serial reference vs OpenMP for the data-parallel kernels. The second range
// argument selects the backend (0 serial, 1 OpenMP).
#include <benchmark/benchmark.h>

#include "netisac/experiment.hpp"
#include "netisac/rng.hpp"

using namespace netisac;

namespace {

Backend backend_of(const benchmark::State& st) { return st.range(1) ? Backend::OpenMP : Backend::Serial; }

// Full-size scene: K = 4x4x4, M = 16; N from the first range argument.
ScenarioConfig full_scene(int users, int horizon) {
    ScenarioConfig sc;
    sc.antennas = 16;
    sc.dims = {4, 4, 4};
    sc.users = users;
    sc.sparsity = 8;
    sc.horizon = horizon;
    return sc;
}

void BM_run_distributed(benchmark::State& st) {
    const auto sc = full_scene(static_cast<int>(st.range(0)), 200);
    const auto inst = make_instance(sc, 1);
    const auto streams = clean_streams(inst.track, inst.beams, inst.symbols, inst.measurements);
    const auto p = EstimatorParams::uniform(sc.users, default_mu(inst, sc), 0.01, 0.3, sc.dims[0]);
    RunOptions opt;
    opt.backend = backend_of(st);
    opt.record_stride = 200;
    for (auto _ : st) benchmark::DoNotOptimize(run_distributed(streams, inst.C, p, CVec::Zero(sc.pixels()), opt));
}
BENCHMARK(BM_run_distributed)->ArgsProduct({{5, 20}, {0, 1}})->Unit(benchmark::kMillisecond);

void BM_batch_rx(benchmark::State& st) {
    auto sc = full_scene(static_cast<int>(st.range(0)), 2000);
    sc.channel.fading = Fading::PerSlot;
    const auto inst = make_instance(sc, 2);
    for (auto _ : st)
        benchmark::DoNotOptimize(batch_rx(inst.roi, inst.track, inst.beams, inst.symbols, inst.noise, 3, backend_of(st)));
}
BENCHMARK(BM_batch_rx)->ArgsProduct({{5, 20}, {0, 1}})->Unit(benchmark::kMillisecond);

void BM_apply_P(benchmark::State& st) {
    const int n = static_cast<int>(st.range(0));
    Rng rng(4);
    const CMat A = rng.complex_normal_mat(n, n) / std::sqrt(2.0 * n);
    const CMat X = rng.complex_normal_mat(n, n);
    for (auto _ : st) benchmark::DoNotOptimize(apply_P(A, X, backend_of(st)));
}
BENCHMARK(BM_apply_P)->ArgsProduct({{64, 256}, {0, 1}})->Unit(benchmark::kMillisecond);

void BM_randomization(benchmark::State& st) {
    ScenarioConfig sc;
    sc.antennas = 16;
    const auto inst = make_instance(sc, 5);
    TheoryInputs in = theory_inputs(inst, sc, default_mu(inst, sc));
    in.sigma_in2 = inst.noise.sigma_o2;
    const auto pb = make_problem(in, inst.track.snapshot().g, inst.noise.sigma_o2, sc.power, 0.5);
    Rng rng(6);
    const CMat a = rng.complex_normal_mat(16, 16), b = rng.complex_normal_mat(16, 16);
    const Lifted z{a * a.adjoint() / 100.0, b * b.adjoint() / 100.0};
    for (auto _ : st)
        benchmark::DoNotOptimize(gaussian_randomization(z, pb, static_cast<int>(st.range(0)), 7, backend_of(st)));
}
BENCHMARK(BM_randomization)->ArgsProduct({{50, 1000}, {0, 1}})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
