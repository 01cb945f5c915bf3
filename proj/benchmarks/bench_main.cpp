#include <benchmark/benchmark.h>

#include "fixtures.hpp"
#include "formguard/attacks.hpp"
#include "formguard/monitors.hpp"
#include "formguard/orchestrator.hpp"

using namespace formguard;

namespace {

NetworkModel default_model() {
    return assemble_network_model({1.0, 2.0}, fixtures::mode_table(), {1, 4, 5},
                                  {3, 5}, {}, 0.02);
}

void BM_MatrixExponential10(benchmark::State& state) {
    const num::Matrix a = default_model().at(1).a;
    for (auto _ : state) {
        benchmark::DoNotOptimize(num::matrix_exponential(a, 0.02));
    }
}
BENCHMARK(BM_MatrixExponential10);

void BM_StabilizingGainCentral(benchmark::State& state) {
    const NetworkModel m = default_model();
    for (auto _ : state) {
        benchmark::DoNotOptimize(num::stabilizing_gain(m.at(1).ad, m.c));
    }
}
BENCHMARK(BM_StabilizingGainCentral);

void BM_SynthesizeZda(benchmark::State& state) {
    const NetworkModel m = default_model();
    for (auto _ : state) {
        benchmark::DoNotOptimize(synthesize_zda(m, 0.0086, {0.5, 0.5, 4}));
    }
}
BENCHMARK(BM_SynthesizeZda);

void BM_PlantStep(benchmark::State& state) {
    const NetworkModel m = default_model();
    FormationSpec spec;
    spec.setpoints = fixtures::v_formation();
    PlantState st;
    for (int axis = 0; axis < kAxes; ++axis) {
        num::Vector x = num::Vector::Zero(10);
        for (int i = 0; i < 5; ++i) x(i) = spec.setpoints[i][axis];
        st.x[axis] = x;
    }
    NoiseStream noise(NoiseSpec{1e-3, 1});
    const num::Matrix ua = num::Matrix::Zero(3, 2);
    const num::Matrix us = num::Matrix::Zero(2, 2);
    for (auto _ : state) {
        auto res = step(st, m, spec, ua, us, noise);
        benchmark::DoNotOptimize(res.y[0]);
        st = res.next;
        st.time = 0.0;
    }
}
BENCHMARK(BM_PlantStep);

void BM_FullScenario10s(benchmark::State& state) {
    Scenario s = fixtures::base_scenario();
    s.attack = fixtures::zda_request();
    s.policy = SwitchPolicy::triggered;
    s.trigger_target = 4;
    s.noise.amplitude = 1e-3;
    for (auto _ : state) {
        benchmark::DoNotOptimize(run_scenario(s));
    }
}
BENCHMARK(BM_FullScenario10s);

}  // namespace

BENCHMARK_MAIN();
