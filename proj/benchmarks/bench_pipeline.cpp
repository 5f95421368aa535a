#include <benchmark/benchmark.h>

#include "wkinterp/estimator.hpp"
#include "wkinterp/simulation.hpp"

using namespace wkinterp;

namespace {

struct Setup {
    FrequencyGrid grid;
    MissingSet S;
    WeightFunction a;
    SpectralDensity F, G;
};

Setup make_setup(double lambda_max, int n_points, double step) {
    Setup s;
    s.grid = FrequencyGrid::make(lambda_max, n_points);
    s.S = MissingSet::make({{-1.0, 0.0}}, step);
    s.a = WeightFunction::from_expression(s.S, "one", 1);
    s.F = SpectralDensity::rational(s.grid, 2.0, 1.0);
    s.G = SpectralDensity::rational(s.grid, 1.0, 1.0);
    return s;
}

void BM_assemble(benchmark::State& state) {
    const auto s = make_setup(64.0, static_cast<int>(state.range(0)),
                              1.0 / static_cast<double>(state.range(1)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(assemble_system(s.F, s.G, s.S, s.grid));
    }
}
BENCHMARK(BM_assemble)->Args({1025, 64})->Args({4097, 256})->Unit(benchmark::kMillisecond);

void BM_solve(benchmark::State& state) {
    const auto s = make_setup(64.0, 4097, 1.0 / 256.0);
    const auto sys = assemble_system(s.F, s.G, s.S, s.grid);
    const double eps = default_tikhonov(sys);
    for (auto _ : state) {
        benchmark::DoNotOptimize(solve_c(sys, s.a, SolveMode::Noisy, eps));
    }
}
BENCHMARK(BM_solve)->Unit(benchmark::kMillisecond);

void BM_estimate(benchmark::State& state) {
    const auto s = make_setup(64.0, static_cast<int>(state.range(0)),
                              1.0 / static_cast<double>(state.range(1)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(estimate(s.F, s.G, s.S, s.a, s.grid));
    }
}
BENCHMARK(BM_estimate)->Args({1025, 64})->Args({4097, 256})->Unit(benchmark::kMillisecond);

void BM_monte_carlo(benchmark::State& state) {
    const auto s = make_setup(64.0, 2049, 1.0 / 128.0);
    const auto est = estimate(s.F, s.G, s.S, s.a, s.grid);
    SimulationConfig cfg;
    cfg.n_replications = static_cast<int>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            empirical_mse(s.F, s.G, est.h, s.a, s.S, s.grid, cfg, est.delta));
    }
}
BENCHMARK(BM_monte_carlo)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_oracle(benchmark::State& state) {
    const auto s = make_setup(64.0, 2049, 1.0 / 128.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            gaussian_oracle(s.F, s.G, s.S, s.a, s.grid, -6.0, 5.0, 0.02));
    }
}
BENCHMARK(BM_oracle)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
