#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "posyn/dsp.hpp"
#include "posyn/simulator.hpp"
#include "posyn/synergy.hpp"

using namespace posyn;

static Eigen::MatrixXd planted(Index rows, Index cols, int n) {
    std::mt19937_64 gen(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::MatrixXd W(rows, n), C(n, cols);
    for (Index i = 0; i < W.size(); ++i) W.data()[i] = u(gen) < 0.5 ? 0.0 : u(gen);
    for (Index i = 0; i < C.size(); ++i) C.data()[i] = u(gen) < 0.5 ? 0.0 : u(gen);
    return W * C + 0.01 * Eigen::MatrixXd::Ones(rows, cols);
}

static void BM_Nmf(benchmark::State& state) {
    const Eigen::MatrixXd V = planted(14, state.range(0), 4);
    synergy::NmfOptions o;
    o.n = 4;
    o.restarts = 1;
    for (auto _ : state) benchmark::DoNotOptimize(synergy::nmf_factorize(V, o));
}
BENCHMARK(BM_Nmf)->Arg(16)->Arg(28)->Unit(benchmark::kMillisecond);

static void BM_SelectOrder(benchmark::State& state) {
    const Eigen::MatrixXd V = planted(14, 16, 4);
    synergy::SelectOptions o;
    o.restarts = 5;
    for (auto _ : state) benchmark::DoNotOptimize(synergy::select_n_syn(V, o));
}
BENCHMARK(BM_SelectOrder)->Unit(benchmark::kMillisecond);

static void BM_Envelope(benchmark::State& state) {
    std::mt19937_64 gen(2);
    std::normal_distribution<double> g;
    std::vector<double> x(static_cast<std::size_t>(state.range(0)));
    for (auto& v : x) v = g(gen);
    const dsp::FilterSpec spec;
    for (auto _ : state) benchmark::DoNotOptimize(dsp::envelope(dsp::rectify(dsp::bandpass(x, 2000.0, spec)), 2000.0, spec));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Envelope)->Arg(6000)->Arg(60000);

static void BM_CableTensions(benchmark::State& state) {
    sim::RigModel rig;
    double a = 0.0;
    for (auto _ : state) {
        a += 0.37;
        benchmark::DoNotOptimize(sim::cable_tensions(rig, sim::Vec2(0.01, -0.02), 80.0 * sim::Vec2(std::cos(a), std::sin(a))));
    }
}
BENCHMARK(BM_CableTensions);

static void BM_RunTrial(benchmark::State& state) {
    sim::RigModel rig;
    sim::TaskParams task;
    sim::TrialScript script;
    script.perturbation_force = 250.0;
    for (auto _ : state) benchmark::DoNotOptimize(sim::run_trial(rig, task, script));
}
BENCHMARK(BM_RunTrial)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
