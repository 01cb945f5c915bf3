#pragma once

// Shared scenario fixtures: the five-agent V-formation with the four-mode
// table used across the unit and acceptance suites.

#include <array>
#include <map>
#include <random>
#include <set>

#include "formguard/orchestrator.hpp"

namespace fixtures {

using namespace formguard;

inline Topology mode_graph(int id) {
    Topology t;
    t.n_agents = 5;
    t.mode_id = id;
    auto add = [&t](std::initializer_list<std::pair<int, int>> edges) {
        for (auto [a, b] : edges) t.add_edge(a, b);
    };
    switch (id) {
        case 1: add({{1, 3}, {1, 4}, {1, 5}, {2, 3}, {3, 5}}); break;
        case 2: add({{1, 3}, {1, 4}, {1, 5}, {2, 5}, {3, 5}}); break;
        case 3: add({{1, 3}, {1, 4}, {1, 5}, {2, 3}, {3, 5}, {3, 4}}); break;
        case 4: add({{1, 3}, {1, 4}, {1, 5}, {2, 3}, {3, 5}, {2, 5}}); break;
        default: throw std::out_of_range("fixture: unknown mode");
    }
    return t;
}

inline std::map<int, Topology> mode_table() {
    return {{1, mode_graph(1)}, {2, mode_graph(2)}, {3, mode_graph(3)}, {4, mode_graph(4)}};
}

inline std::vector<std::array<double, 2>> v_formation() {
    return {{-1.0, 0.0}, {-0.5, 0.75}, {0.0, 1.5}, {0.5, 0.75}, {1.0, 0.0}};
}

/// Attack-free baseline: V-formation, all four modes, detectors {1, 3},
/// central measurements M_p = {3, 5}.
inline Scenario base_scenario() {
    Scenario s;
    s.n_agents = 5;
    s.modes = mode_table();
    s.gains = {1.0, 2.0};
    s.formation.setpoints = v_formation();
    s.initial_positions = {{-1.35, 0.42}, {-0.12, 0.40}, {0.47, 1.26},
                           {0.18, 1.05},  {0.75, -0.28}};
    s.detectors = {1, 3};
    s.measured_pos = {3, 5};
    s.detectability_includes_host = true;
    s.noise.amplitude = 0.0;
    s.noise.seed = 7;
    s.ts = 0.02;
    s.horizon = 10.0;
    return s;
}

/// Same scenario with positions drawn uniformly within +-spread of the
/// formation setpoints (bounded random initial conditions).
inline Scenario randomized_scenario(std::uint64_t seed, double spread = 0.5) {
    Scenario s = base_scenario();
    std::mt19937_64 rng(seed);
    auto draw = [&rng, spread] {
        return spread * (2.0 * std::ldexp(static_cast<double>(rng()), -64) - 1.0);
    };
    for (int i = 0; i < s.n_agents; ++i) {
        s.initial_positions[i] = {s.formation.setpoints[i][0] + draw(),
                                  s.formation.setpoints[i][1] + draw()};
    }
    s.noise.seed = seed;
    return s;
}

inline ZdaPlan zda_request(double scale = 0.0086) {
    ZdaPlan plan;
    plan.compromised = {1, 4, 5};
    plan.scale = scale;
    plan.designated = 4;
    plan.lambda = {0.5, 0.5};
    return plan;
}

inline CovertPlan covert_ramp(double slope = 0.5, double start = 5.0) {
    CovertPlan plan;
    plan.compromised = {2};
    plan.start_time = start;
    plan.waveform[0] = {CovertWaveform::Kind::ramp, slope, 0.0};
    plan.waveform[1] = {CovertWaveform::Kind::ramp, slope, 0.0};
    return plan;
}

inline ReplayPlan replay_request() {
    ReplayPlan plan;
    plan.record_window = 2.0;
    plan.start_time = 3.0;
    plan.dos_targets = {4};
    plan.push = {0.3, 0.3};
    return plan;
}

/// Replay scenario starts exactly on the formation (hover) so the recorded
/// window is stationary.
inline Scenario replay_scenario() {
    Scenario s = base_scenario();
    s.initial_positions = v_formation();
    s.attack = replay_request();
    return s;
}

}  // namespace fixtures
