#include "h2ad/fusion_net.hpp"
#include "h2ad/harness.hpp"
#include "h2ad/polynomial.hpp"
#include "h2ad/root_music.hpp"

#include <benchmark/benchmark.h>
#include <omp.h>

using namespace h2ad;

namespace {

RunContext iwf_context(int trials) {
    ExperimentSpec s;
    s.trials = trials;
    s.master_seed = 5;
    return RunContext::prepare(s);
}

// Serial reference; threads argument is ignored.
void BM_RunPointSerial(benchmark::State& state) {
    const auto ctx = iwf_context(32);
    for (auto _ : state) benchmark::DoNotOptimize(run_point_serial(ctx, 10.0, 100));
    state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_RunPointSerial)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_RunPointOpenMP(benchmark::State& state) {
    const auto ctx = iwf_context(32);
    const int threads = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(run_point(ctx, 10.0, 100, {}, ExecutionOptions{threads}));
    state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_RunPointOpenMP)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();

std::vector<cdouble> fd_polynomial() {
    const auto g = ArrayGeometry::reference();
    const auto obs = synthesize_snapshots(g, {41.0, 10.0, 100}, zero_combiners(g), 11);
    const auto ns = noise_subspace(sample_covariance(obs.fd));
    return root_music_polynomial(ns.basis * ns.basis.adjoint());
}

void BM_Roots(benchmark::State& state) {
    const auto coeffs = fd_polynomial();
    const auto method = state.range(0) == 0 ? RootMethod::Aberth : RootMethod::Companion;
    state.SetLabel(method == RootMethod::Aberth ? "aberth" : "companion");
    for (auto _ : state) benchmark::DoNotOptimize(solve_polynomial_roots(coeffs, method));
}
BENCHMARK(BM_Roots)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_TrainingDataSerialVsParallel(benchmark::State& state) {
    const auto g = ArrayGeometry::reference();
    TrainingConfig c;
    c.grid_step_deg = 10.0;
    c.snr_list_db = {0.0, 10.0};
    c.realizations = 1;
    const int threads = static_cast<int>(state.range(0));
    const int saved = omp_get_max_threads();
    omp_set_num_threads(threads);
    for (auto _ : state)
        benchmark::DoNotOptimize(generate_training_data(g, zero_combiners(g), c, ClusterMethod::GMinD));
    omp_set_num_threads(saved);
}
BENCHMARK(BM_TrainingDataSerialVsParallel)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace
BENCHMARK_MAIN();
