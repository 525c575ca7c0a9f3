#include <benchmark/benchmark.h>

#include "vfp/dynamics.hpp"
#include "vfp/evaluation.hpp"
#include "vfp/geometry.hpp"
#include "vfp/mdp.hpp"
#include "vfp/verification.hpp"

namespace {

using namespace vfp;

void BM_ValueFunction(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Mdp mdp = random_mdp(n, 3, 0.9, 1);
    const Policy pi = random_policy(mdp, 2);
    for (auto _ : state) benchmark::DoNotOptimize(value_function(mdp, pi));
}
BENCHMARK(BM_ValueFunction)->Arg(2)->Arg(8)->Arg(32)->Arg(128);

void BM_OptimalValue(benchmark::State& state) {
    const Mdp mdp = random_mdp(static_cast<std::size_t>(state.range(0)), 3, 0.9, 1);
    for (auto _ : state) benchmark::DoNotOptimize(optimal_value(mdp));
}
BENCHMARK(BM_OptimalValue)->Arg(2)->Arg(16);

void BM_SampleValues(benchmark::State& state) {
    const Mdp mdp = builtin_fixture(FixtureId::Dyn2);
    const auto n = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(sample_values(mdp, n, 1));
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0));
}
BENCHMARK(BM_SampleValues)->Arg(1000)->Arg(50000)->Unit(benchmark::kMillisecond);

void BM_Hull(benchmark::State& state) {
    const auto values = sample_values(builtin_fixture(FixtureId::Fig2c), 50000, 1);
    for (auto _ : state) benchmark::DoNotOptimize(hull_2d(values));
}
BENCHMARK(BM_Hull)->Unit(benchmark::kMillisecond);

void BM_PolicyGradient(benchmark::State& state) {
    const Mdp mdp = random_mdp(static_cast<std::size_t>(state.range(0)), 3, 0.9, 1);
    const SoftmaxParams at = SoftmaxParams::from_policy(random_policy(mdp, 4));
    for (auto _ : state) benchmark::DoNotOptimize(policy_gradient(mdp, at, 0.1));
}
BENCHMARK(BM_PolicyGradient)->Arg(2)->Arg(16);

void BM_CemStep(benchmark::State& state) {
    const Mdp mdp = builtin_fixture(FixtureId::Dyn2);
    const SoftmaxParams init = SoftmaxParams::from_policy(Policy::uniform(2, 2));
    CemConfig cfg;
    cfg.iterations = 1;
    cfg.noise_scale = 0.05;
    for (auto _ : state) benchmark::DoNotOptimize(run_cem(mdp, init, cfg));
}
BENCHMARK(BM_CemStep)->Unit(benchmark::kMillisecond);

void BM_Suite(benchmark::State& state) {
    SuiteOptions opt;
    opt.trials = 10;
    opt.samples = 500;
    const std::string name = state.range(0) == 0 ? "line" : state.range(0) == 1 ? "rho" : "smooth";
    state.SetLabel(name);
    for (auto _ : state) benchmark::DoNotOptimize(run_suite(name, opt));
}
BENCHMARK(BM_Suite)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);

void BM_BoundaryDyn2(benchmark::State& state) {
    const Mdp mdp = builtin_fixture(FixtureId::Dyn2);
    for (auto _ : state) benchmark::DoNotOptimize(boundary_deviation(mdp, 200, 1000, 1));
}
BENCHMARK(BM_BoundaryDyn2)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
