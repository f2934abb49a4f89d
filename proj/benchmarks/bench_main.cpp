#include <benchmark/benchmark.h>

#include "optexec/attribution.hpp"
#include "optexec/simulate.hpp"
#include "optexec/solver.hpp"
#include "optexec/stats.hpp"

using namespace optexec;

static void BM_MillsPsi(benchmark::State& state) {
    double u = -40.0, acc = 0.0;
    for (auto _ : state) {
        acc += mills_psi(u);
        u = u > 40.0 ? -40.0 : u + 0.37;
    }
    benchmark::DoNotOptimize(acc);
}
BENCHMARK(BM_MillsPsi);

static void BM_GaussHermitePsi(benchmark::State& state) {
    const auto& rule = gauss_hermite_cached(int(state.range(0)));
    for (auto _ : state)
        benchmark::DoNotOptimize(gauss_hermite_expectation(rule, 0.3, 1.2, [](double x) { return mills_psi(x); }));
}
BENCHMARK(BM_GaussHermitePsi)->Arg(12)->Arg(40)->Arg(80);

static void BM_MixtureExpectation(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(nln_mixture_expectation({0.1, 0.2}, {1.0, 0.5}, -0.8));
}
BENCHMARK(BM_MixtureExpectation);

static void BM_Recursion(benchmark::State& state) {
    const LinearGaussian lg{1.3, 0.0, 1.0};
    const Formulation f = state.range(1) ? Formulation::complex : Formulation::simple;
    for (auto _ : state)
        benchmark::DoNotOptimize(approximate_recursion(lg, f, {int(state.range(0)), 1.0}, {}));
}
BENCHMARK(BM_Recursion)->Args({5, 0})->Args({10, 0})->Args({5, 1})->Args({10, 1})->Unit(benchmark::kMillisecond);

static void BM_Ar1Complex(benchmark::State& state) {
    for (auto _ : state)
        benchmark::DoNotOptimize(solve_ar1_complex({1.0, 0.4, 0.6, 1.0, 0.8}, {int(state.range(0)), 3.0}, 0.3));
}
BENCHMARK(BM_Ar1Complex)->Arg(3)->Arg(6)->Unit(benchmark::kMillisecond);

static void BM_SimulateBenchmark(benchmark::State& state) {
    SimConfig c;
    c.model = Benchmark{0.1, 1.0};
    c.horizon = {10, 100.0};
    c.n_paths = std::size_t(state.range(0));
    c.threads = 1;
    const auto s = solve_benchmark_simple({0.1, 1.0}, c.horizon).schedule;
    for (auto _ : state) benchmark::DoNotOptimize(evaluate_policy(c, s, Formulation::simple));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SimulateBenchmark)->Arg(10000)->Unit(benchmark::kMillisecond);

static void BM_ZeroSumAudit(benchmark::State& state) {
    const auto set = generate_balanced_fills(1, 0, 8, 12);
    for (auto _ : state) benchmark::DoNotOptimize(zero_sum_audit(set.fills, set.price_path, Formulation::complex));
}
BENCHMARK(BM_ZeroSumAudit);
BENCHMARK_MAIN();
