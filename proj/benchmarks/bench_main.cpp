#include <benchmark/benchmark.h>

#include "pngkpz/asymptotic.hpp"
#include "pngkpz/exact.hpp"
#include "pngkpz/growth.hpp"
#include "pngkpz/oracle.hpp"

using namespace pngkpz;

static void BM_GrowthTable(benchmark::State& st) {
    const int n = static_cast<int>(st.range(0));
    std::uint64_t seed = 1;
    for (auto _ : st) benchmark::DoNotOptimize(build_table(sample_weights(0.5, n, n, seed++)).at(n, n));
    st.SetComplexityN(n);
}
BENCHMARK(BM_GrowthTable)->RangeMultiplier(2)->Range(64, 1024)->Complexity(benchmark::oNSquared);

static void BM_DynamicProgram(benchmark::State& st) {
    const long n = st.range(0);
    const ModelParams mp{0.5, {n / 2, n}, {n / 2, n}, {n / 2 + 1, n + 1}};
    for (auto _ : st) benchmark::DoNotOptimize(dp_exact_prob(mp).prob);
}
BENCHMARK(BM_DynamicProgram)->Arg(4)->Arg(6)->Unit(benchmark::kMillisecond);

static void BM_MonteCarlo(benchmark::State& st) {
    const ModelParams mp{0.5, {1, 2}, {1, 3}, {2, 4}};
    for (auto _ : st) benchmark::DoNotOptimize(mc_multipoint(mp, 100000, 3).estimate);
}
BENCHMARK(BM_MonteCarlo)->Unit(benchmark::kMillisecond);

static void BM_ThetaDeterminant(benchmark::State& st) {
    const long N = st.range(0);
    const ModelParams mp{0.5, {N / 2, N}, {N / 2, N}, {N / 2 + 1, N + 1}};
    ExactFormula ef(mp);
    const std::vector<cplx> th{std::polar(2.0, 0.4)};
    for (auto _ : st) benchmark::DoNotOptimize(ef.det_theta(th));
}
BENCHMARK(BM_ThetaDeterminant)->Arg(8)->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond);

static void BM_ExactTwoPoint(benchmark::State& st) {
    const ModelParams mp{0.4, {1, 2}, {1, 3}, {2, 4}};
    for (auto _ : st) benchmark::DoNotOptimize(multipoint_prob_exact(mp).value);
}
BENCHMARK(BM_ExactTwoPoint)->Unit(benchmark::kMillisecond);

static void BM_TracyWidom(benchmark::State& st) {
    const int nodes = static_cast<int>(st.range(0));
    for (auto _ : st) benchmark::DoNotOptimize(tracy_widom(-1.0, nodes));
}
BENCHMARK(BM_TracyWidom)->Arg(24)->Arg(48)->Arg(96);

static void BM_LimitKernelBuild(benchmark::State& st) {
    LimitInstance in;
    in.t = {1.0, 2.0};
    in.x = {0.0, 0.0};
    in.xi = {-1.0, -1.0};
    in.mu = default_mu(in.t, in.x);
    const auto grid = NystromGrid::uniform(2, auto_truncation(in), static_cast<int>(st.range(0)));
    for (auto _ : st) {
        LimitKernel lk(in, grid);
        benchmark::DoNotOptimize(lk.terms());
    }
}
BENCHMARK(BM_LimitKernelBuild)->Arg(24)->Arg(48)->Unit(benchmark::kMillisecond);

static void BM_TwoTimeCdf(benchmark::State& st) {
    LimitInstance in;
    in.t = {1.0, 2.0};
    in.x = {0.0, 0.0};
    in.xi = {-1.0, -1.0};
    in.mu = default_mu(in.t, in.x);
    for (auto _ : st) benchmark::DoNotOptimize(multitime_cdf(in).value);
}
BENCHMARK(BM_TwoTimeCdf)->Unit(benchmark::kMillisecond)->Iterations(1);
BENCHMARK_MAIN();
