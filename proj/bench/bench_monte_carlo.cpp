// Serial reference kernel against the OpenMP kernel on the default sysid problem.
#include "cmcc/experiments.hpp"
#include "cmcc/monte_carlo.hpp"

#include <benchmark/benchmark.h>

#include <omp.h>

namespace {

struct Fixture {
    cmcc::Problem problem;
    cmcc::RunSpec spec;
};

Fixture make_fixture(long runs)
{
    cmcc::ScenarioConfig cfg;
    cfg.noise = cmcc::make_noise(cmcc::noise::MixedGaussian{0, 0, 0.01, 100, 0.05});
    cmcc::AlgorithmConfig clms;
    clms.algo = cmcc::Algorithm::CLMS;
    clms.label = "CLMS";
    clms.hp.eta = 0.01;
    cmcc::AlgorithmConfig cmcc_entry;
    cmcc_entry.label = "CMCC";
    cmcc_entry.hp.eta = 0.012;
    cmcc_entry.hp.sigma = 2.0;
    cfg.algorithms = {clms, cmcc_entry};
    const auto g = cmcc::build_geometry(cfg);

    Fixture f{cmcc::Problem{g.cs, g.input, g.R, g.W_true, g.W_ref, cfg.noise}, {}};
    f.spec.algorithms = cfg.algorithms;
    f.spec.runs = runs;
    f.spec.iterations = 1000;
    f.spec.steady_window = 200;
    f.spec.seed = 7;
    return f;
}

void BM_serial(benchmark::State& state)
{
    const auto f = make_fixture(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(cmcc::run_monte_carlo_serial(f.problem, f.spec));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_openmp(benchmark::State& state)
{
    auto f = make_fixture(state.range(0));
    f.spec.workers = static_cast<int>(state.range(1));
    for (auto _ : state)
        benchmark::DoNotOptimize(cmcc::run_monte_carlo(f.problem, f.spec));
    state.SetItemsProcessed(state.iterations() * state.range(0));
    state.counters["threads"] = static_cast<double>(state.range(1));
}

void openmp_args(benchmark::internal::Benchmark* b)
{
    const int max_threads = omp_get_max_threads();
    for (long runs : {64L, 256L})
        for (int t = 1; t <= max_threads; t *= 2)
            b->Args({runs, t});
}

} // namespace

BENCHMARK(BM_serial)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_openmp)->Apply(openmp_args)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
