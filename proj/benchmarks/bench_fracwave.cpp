#include <benchmark/benchmark.h>

#include "fracwave/estimators.hpp"
#include "fracwave/noise.hpp"
#include "fracwave/solver.hpp"

namespace {

using namespace fracwave;

LatticeConfig lattice_for(double h) { return LatticeConfig{h, 1.0, 3.0}; }

void BM_SampleSheet(benchmark::State& state) {
    const double hurst = state.range(0) == 0 ? 0.5 : 0.75;
    const NoiseSampler sampler(lattice_for(1.0 / 64).noise_shape(hurst, 0));
    std::uint64_t seed = 0;
    for (auto _ : state) {
        auto sheet = sampler.sample(++seed);
        benchmark::DoNotOptimize(sheet.masses().data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<long>(sampler.shape().n_time * sampler.shape().n_space));
}
BENCHMARK(BM_SampleSheet)->Arg(0)->Arg(1)->ArgNames({"fractional"});

void BM_Solve(benchmark::State& state) {
    const auto config = lattice_for(1.0 / static_cast<double>(state.range(0)));
    const auto sheet = sample_sheet(config.noise_shape(0.5, 1));
    const auto sigma = SigmaSpec::affine_sine(1.0, 0.5);
    for (auto _ : state) {
        auto field = solve(config, sheet, sigma);
        benchmark::DoNotOptimize(field.row(field.levels()).data());
    }
}
BENCHMARK(BM_Solve)->Arg(32)->Arg(64)->ArgNames({"inv_h"});

void BM_ChaosProjection(benchmark::State& state) {
    const auto config = lattice_for(1.0 / 64);
    const auto sheet = sample_sheet(config.noise_shape(0.5, 1));
    const ChaosWeights weights(config, 0.5, 1.0, 2.0);
    for (auto _ : state) benchmark::DoNotOptimize(weights.project(sheet));
}
BENCHMARK(BM_ChaosProjection);

void BM_RunExperiment(benchmark::State& state) {
    ExperimentPlan plan;
    plan.h = 1.0 / 32;
    plan.times = {0.5, 1.0};
    plan.radii = {2.0, 4.0};
    plan.replicas = 200;
    plan.sigma = SigmaSpec::linear();
    plan.threads = 1;
    for (auto _ : state) {
        auto summary = run_experiment(plan);
        benchmark::DoNotOptimize(summary.cells.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<long>(plan.replicas));
}
BENCHMARK(BM_RunExperiment)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
