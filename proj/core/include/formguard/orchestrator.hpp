#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "formguard/attacks.hpp"
#include "formguard/monitors.hpp"
#include "formguard/plant.hpp"
#include "formguard/topology.hpp"

namespace formguard {

enum class SwitchPolicy { none, scheduled, triggered };

/// Complete description of one simulation run.
struct Scenario {
    int n_agents = 0;
    std::map<int, Topology> modes;               // mode id -> graph; mode 1 required
    SwitchPolicy policy = SwitchPolicy::none;
    SwitchingPlan schedule;                      // for SwitchPolicy::scheduled
    int trigger_target = 0;                      // for SwitchPolicy::triggered
    ControlGains gains;
    FormationSpec formation;
    std::vector<std::array<double, kAxes>> initial_positions;
    AttackPlan attack;
    std::set<int> detectors;                     // local-monitor hosts D
    std::set<int> measured_pos;                  // central M_p
    std::set<int> measured_vel;                  // central M_v
    std::optional<double> epsilon_floor_central;
    std::optional<double> epsilon_floor_local;
    std::optional<double> omega_bar;
    bool detectability_includes_host = false;    // M^i = N^i ∪ {i} variant for checks
    NoiseSpec noise;
    double ts = 0.02;
    double horizon = 10.0;

    std::set<int> compromised_set() const;
    void validate() const;
    std::uint64_t digest() const;
};

struct TickRecord {
    double time = 0.0;
    int mode = 1;
    std::array<num::Vector, kAxes> x;
    std::array<num::Vector, kAxes> y_transmitted;
    // Indexed like RunLog::monitor_ids.
    std::vector<std::array<num::Vector, kAxes>> residuals;
    std::vector<std::array<num::Vector, kAxes>> thresholds;
    double formation_error = 0.0;
    double max_speed = 0.0;
};

/// Immutable record of one completed run.
struct RunLog {
    double ts = 0.02;
    double horizon = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t scenario_digest = 0;
    std::vector<int> monitor_ids;  // locals ascending, then 0 for the central
    std::vector<std::vector<std::string>> component_names;  // per monitor
    std::vector<TickRecord> ticks;
    std::vector<DetectionEvent> events;
    std::optional<double> switch_time;
    int switch_target = 0;
    int switch_trigger_monitor = -1;
    double final_formation_error = 0.0;
    double final_max_speed = 0.0;
    std::optional<StealthinessVerdict> stealthiness;  // filled by paired comparisons

    std::uint64_t digest() const;
    std::optional<double> first_alarm(int monitor_id) const;
};

/// Run one scenario to completion. Deterministic for a fixed seed.
RunLog run_scenario(const Scenario& s);

/// Re-run with attacks removed; for ZDA plans the plant starts from the
/// configured initial state without the folded zero-direction offset, matching
/// the attack-free side of the stealthiness definition. Same seed and noise.
RunLog paired_nominal_run(const Scenario& s);

/// Resolve the scenario's attack plan (synthesizing the ZDA when needed).
AttackPlan resolve_attack(const Scenario& s, const NetworkModel& model);

/// Model assembled exactly as run_scenario would.
NetworkModel scenario_model(const Scenario& s);

struct DetectionReport {
    struct MonitorSummary {
        int monitor_id = 0;
        std::optional<double> first_alarm;
    };
    std::vector<MonitorSummary> monitors;
    std::optional<double> switch_time;
    std::optional<StealthinessVerdict> stealthiness;
    double max_formation_error = 0.0;
    double final_formation_error = 0.0;
    double final_max_speed = 0.0;
};

DetectionReport detection_report(const RunLog& log);
std::string format_report(const DetectionReport& report);

}  // namespace formguard
