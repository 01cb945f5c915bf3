#include "formguard/orchestrator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "formguard/digest.hpp"

namespace formguard {

using num::Matrix;
using num::Vector;

std::set<int> Scenario::compromised_set() const {
    if (const auto* zda = std::get_if<ZdaPlan>(&attack)) return zda->compromised;
    if (const auto* covert = std::get_if<CovertPlan>(&attack)) return covert->compromised;
    if (const auto* replay = std::get_if<ReplayPlan>(&attack)) {
        return replay->compromised.empty() ? replay->dos_targets : replay->compromised;
    }
    return {};
}

void Scenario::validate() const {
    if (n_agents < 2) throw DomainError("scenario: need at least two agents");
    if (!modes.count(1)) throw DomainError("scenario: mode 1 must be defined");
    for (const auto& [id, topo] : modes) {
        if (topo.n_agents != n_agents) {
            throw DomainError("scenario: mode " + std::to_string(id) +
                              " agent count differs from [agents]");
        }
        topo.validate();
    }
    gains.validate();
    noise.validate();
    if (static_cast<int>(initial_positions.size()) != n_agents) {
        throw DomainError("scenario: need one initial position per agent");
    }
    if (formation.n_agents() != n_agents) {
        throw DomainError("scenario: need one formation setpoint per agent");
    }
    if (!(ts > 0.0)) throw DomainError("scenario: Ts must be positive");
    const double steps = horizon / ts;
    if (std::abs(steps - std::llround(steps)) > 1e-6) {
        throw DomainError("scenario: horizon must be a multiple of Ts");
    }
    for (int d : detectors) {
        if (d < 1 || d > n_agents) throw DomainError("scenario: detector host out of range");
    }
    for (int i : measured_pos) {
        if (i < 1 || i > n_agents) throw DomainError("scenario: measured position out of range");
    }
    for (int i : measured_vel) {
        if (i < 1 || i > n_agents) throw DomainError("scenario: measured velocity out of range");
    }
    std::set<int> mode_ids;
    for (const auto& [id, topo] : modes) mode_ids.insert(id);
    if (policy == SwitchPolicy::scheduled) {
        schedule.validate(mode_ids);
        for (const auto& [t, m] : schedule.schedule) {
            const double ticks = t / ts;
            if (std::abs(ticks - std::llround(ticks)) > 1e-6) {
                throw DomainError("scenario: switch times must be multiples of Ts");
            }
        }
    }
    if (policy == SwitchPolicy::triggered) {
        if (!mode_ids.count(trigger_target)) {
            throw DomainError("scenario: trigger target mode " +
                              std::to_string(trigger_target) + " is not defined");
        }
        if (detectors.empty()) {
            throw DomainError("scenario: triggered switching needs local detectors");
        }
        // Decentralized detection drives the contingency switch, so the hosts
        // must jointly cover the network.
        if (!coverage_check(detectors, modes.at(1))) {
            throw DomainError("scenario: detector set fails the coverage condition");
        }
    }
    const auto compromised = compromised_set();
    for (int i : compromised) {
        if (i < 1 || i > n_agents) throw DomainError("scenario: compromised agent out of range");
    }
    if (const auto* replay = std::get_if<ReplayPlan>(&attack)) replay->validate();
    if (const auto* covert = std::get_if<CovertPlan>(&attack)) {
        if (covert->start_time < 0.0) throw DomainError("scenario: covert start must be >= 0");
        if (covert->compromised.empty()) {
            throw DomainError("scenario: covert attack needs a compromised set");
        }
    }
    if (const auto* zda = std::get_if<ZdaPlan>(&attack)) {
        if (zda->compromised.empty()) {
            throw DomainError("scenario: zda attack needs a compromised set");
        }
        if (zda->scale == 0.0) throw DomainError("scenario: zda scale must be nonzero");
        for (int axis = 0; axis < kAxes; ++axis) {
            if (zda->lambda[axis] < 0.0) {  // 0 means "synthesize the default"
                throw DomainError("scenario: zda rate must be positive");
            }
        }
    }
}

std::uint64_t Scenario::digest() const {
    Fnv1a64 h;
    h.feed(n_agents);
    for (const auto& [id, topo] : modes) {
        h.feed(id);
        for (const auto& [a, b] : topo.edges) {
            h.feed(a);
            h.feed(b);
        }
    }
    h.feed(static_cast<int>(policy));
    for (const auto& [t, m] : schedule.schedule) {
        h.feed(t);
        h.feed(m);
    }
    h.feed(trigger_target);
    h.feed(gains.alpha);
    h.feed(gains.gamma);
    for (const auto& p : formation.setpoints) {
        h.feed(p[0]);
        h.feed(p[1]);
    }
    for (const auto& p : initial_positions) {
        h.feed(p[0]);
        h.feed(p[1]);
    }
    h.feed(static_cast<int>(attack.index()));
    if (const auto* zda = std::get_if<ZdaPlan>(&attack)) {
        h.feed(zda->scale);
        h.feed(zda->designated);
        h.feed(zda->lambda[0]);
        h.feed(zda->lambda[1]);
        for (int i : zda->compromised) h.feed(i);
    } else if (const auto* covert = std::get_if<CovertPlan>(&attack)) {
        h.feed(covert->start_time);
        for (int axis = 0; axis < kAxes; ++axis) {
            h.feed(static_cast<int>(covert->waveform[axis].kind));
            h.feed(covert->waveform[axis].p1);
            h.feed(covert->waveform[axis].p2);
        }
        for (int i : covert->compromised) h.feed(i);
    } else if (const auto* replay = std::get_if<ReplayPlan>(&attack)) {
        h.feed(replay->record_window);
        h.feed(replay->start_time);
        h.feed(replay->push[0]);
        h.feed(replay->push[1]);
        for (int i : replay->dos_targets) h.feed(i);
        for (int i : replay->compromised) h.feed(i);
    }
    for (int d : detectors) h.feed(d);
    for (int i : measured_pos) h.feed(i);
    for (int i : measured_vel) h.feed(i);
    h.feed(epsilon_floor_central.value_or(-1.0));
    h.feed(epsilon_floor_local.value_or(-1.0));
    h.feed(omega_bar.value_or(-1.0));
    h.feed(detectability_includes_host);
    h.feed(noise.amplitude);
    h.feed(noise.seed);
    h.feed(ts);
    h.feed(horizon);
    return h.value();
}

std::uint64_t RunLog::digest() const {
    Fnv1a64 h;
    h.feed(scenario_digest);
    h.feed(seed);
    for (const auto& tick : ticks) {
        h.feed(tick.time);
        h.feed(tick.mode);
        for (int axis = 0; axis < kAxes; ++axis) {
            for (Eigen::Index i = 0; i < tick.x[axis].size(); ++i) h.feed(tick.x[axis](i));
            for (Eigen::Index i = 0; i < tick.y_transmitted[axis].size(); ++i) {
                h.feed(tick.y_transmitted[axis](i));
            }
        }
        for (const auto& r : tick.residuals) {
            for (int axis = 0; axis < kAxes; ++axis) {
                for (Eigen::Index i = 0; i < r[axis].size(); ++i) h.feed(r[axis](i));
            }
        }
    }
    for (const auto& e : events) {
        h.feed(e.monitor_id);
        h.feed(e.time);
        h.feed(e.axis);
        h.feed(e.component);
        h.feed(e.residual);
        h.feed(e.threshold);
    }
    return h.value();
}

std::optional<double> RunLog::first_alarm(int monitor_id) const {
    for (const auto& e : events) {
        if (e.monitor_id == monitor_id) return e.time;  // events are time-ordered
    }
    return std::nullopt;
}

NetworkModel scenario_model(const Scenario& s) {
    return assemble_network_model(s.gains, s.modes, s.compromised_set(), s.measured_pos,
                                  s.measured_vel, s.ts);
}

AttackPlan resolve_attack(const Scenario& s, const NetworkModel& model) {
    AttackPlan plan = s.attack;
    if (auto* zda = std::get_if<ZdaPlan>(&plan)) {
        if (zda->x0_attack[0].size() == 0) {
            ZdaOptions options;
            if (zda->lambda[0] > 0.0) options.lambda_x = zda->lambda[0];
            if (zda->lambda[1] > 0.0) options.lambda_y = zda->lambda[1];
            if (zda->designated > 0) options.designated = zda->designated;
            *zda = synthesize_zda(model, zda->scale, options);
        }
    }
    if (auto* replay = std::get_if<ReplayPlan>(&plan)) {
        if (replay->compromised.empty()) replay->compromised = replay->dos_targets;
        replay->buffer.clear();
        replay->recorded = 0;
    }
    if (auto* covert = std::get_if<CovertPlan>(&plan)) {
        covert->reset_shadow(model.state_dim());
    }
    return plan;
}

namespace {

struct MonitorSlot {
    MonitorConfig cfg;
    MonitorState state;
    bool is_central = false;
};

Vector thresholds_at(const MonitorConfig& cfg, double t) {
    Vector th(cfg.components());
    for (int j = 0; j < cfg.components(); ++j) th(j) = threshold_value(cfg, j, t);
    return th;
}

}  // namespace

RunLog run_scenario(const Scenario& s) {
    s.validate();
    const NetworkModel model = scenario_model(s);
    AttackPlan plan = resolve_attack(s, model);

    // Initial plant state; a ZDA folds its zero-direction offset into it.
    PlantState state;
    state.time = 0.0;
    state.mode = s.policy == SwitchPolicy::scheduled ? active_mode(s.schedule, 0.0) : 1;
    for (int axis = 0; axis < kAxes; ++axis) {
        Vector x = Vector::Zero(2 * s.n_agents);
        for (int i = 0; i < s.n_agents; ++i) x(i) = s.initial_positions[i][axis];
        if (const auto* zda = std::get_if<ZdaPlan>(&plan)) x += zda->x0_attack[axis];
        state.x[axis] = std::move(x);
    }

    MonitorCalibration central_cal{15.0, s.omega_bar, s.epsilon_floor_central};
    MonitorCalibration local_cal{15.0, s.omega_bar, s.epsilon_floor_local};
    std::vector<MonitorSlot> monitors;
    for (int host : s.detectors) {
        MonitorSlot slot;
        slot.cfg = make_local_monitor(model, s.modes.at(1), host, state.x,
                                      s.noise.amplitude, local_cal);
        slot.state.reset(model.state_dim(), slot.cfg.components());
        monitors.push_back(std::move(slot));
    }
    {
        MonitorSlot slot;
        slot.cfg = make_central_monitor(model, state.x, s.noise.amplitude, central_cal);
        slot.state.reset(model.state_dim(), slot.cfg.components());
        slot.is_central = true;
        monitors.push_back(std::move(slot));
    }

    RunLog log;
    log.ts = s.ts;
    log.horizon = s.horizon;
    log.seed = s.noise.seed;
    log.scenario_digest = s.digest();
    for (const auto& m : monitors) {
        log.monitor_ids.push_back(m.cfg.id);
        log.component_names.push_back(m.cfg.component_names);
    }
    log.switch_target = s.policy == SwitchPolicy::triggered ? s.trigger_target : 0;

    // DoS-degraded matrices per mode, prepared once when a replay plan is active.
    std::map<int, ModeMatrices> dos_matrices;
    if (const auto* replay = std::get_if<ReplayPlan>(&plan)) {
        for (const auto& [id, topo] : s.modes) {
            const Topology degraded = apply_dos(topo, replay->dos_targets);
            ModeMatrices mm;
            mm.a = assemble_dynamics(s.gains, degraded);
            mm.b_formation = -mm.a;
            Matrix b_all(2 * s.n_agents, mm.b_formation.cols() + model.b_attack.cols());
            b_all << mm.b_formation, model.b_attack;
            auto [ad, bd_all] = num::zoh_discretize(mm.a, b_all, s.ts);
            mm.ad = ad;
            mm.bd_formation = bd_all.leftCols(mm.b_formation.cols());
            mm.bd_attack = bd_all.rightCols(model.b_attack.cols());
            dos_matrices.emplace(id, std::move(mm));
        }
    }

    NoiseStream noise(s.noise);
    const long n_ticks = std::llround(s.horizon / s.ts) + 1;
    const auto na = static_cast<Eigen::Index>(model.b_attack.cols());
    bool switch_pending = false;
    bool switch_done = false;

    for (long k = 0; k < n_ticks; ++k) {
        const double t = double(k) * s.ts;

        // Attack signals at this tick (evaluated on the pre-step state).
        Matrix u_attack = Matrix::Zero(na, kAxes);
        Matrix u_sensor = Matrix::Zero(model.output_dim(), kAxes);
        bool dos_active = false;
        if (auto* zda = std::get_if<ZdaPlan>(&plan)) {
            u_attack = zda_signal(*zda, k);
        } else if (auto* covert = std::get_if<CovertPlan>(&plan)) {
            u_attack = covert_attack_input(*covert, t);
            u_sensor = covert_sensor_signal(*covert, model, k, u_attack);
        } else if (auto* replay = std::get_if<ReplayPlan>(&plan)) {
            if (t >= replay->start_time) {
                dos_active = true;
                u_sensor = replay_sensor_signal(*replay, model, state, k);
                for (int axis = 0; axis < kAxes; ++axis) {
                    u_attack.col(axis).setConstant(replay->push[axis]);
                }
            }
        }

        // Plant step: transmitted measurement of the current state + next state.
        const ModeMatrices& mm = dos_active ? dos_matrices.at(state.mode)
                                            : model.at(state.mode);
        StepResult sr = step_with_matrices(state, model, mm, s.formation, u_attack,
                                           u_sensor, noise);
        if (auto* replay = std::get_if<ReplayPlan>(&plan)) {
            if (t < replay->start_time) replay_record(*replay, sr.y, s.ts);
        }

        TickRecord tick;
        tick.time = t;
        tick.mode = state.mode;
        tick.x = state.x;
        tick.y_transmitted = sr.y;
        const auto err = formation_error(state, s.formation);
        tick.formation_error = err[0];
        tick.max_speed = err[1];

        // Local monitors first (ascending host id), then the central monitor.
        bool local_alarm_now = false;
        int local_alarm_host = -1;
        for (auto& m : monitors) {
            std::array<Vector, kAxes> y_mon;
            if (m.is_central) {
                y_mon = sr.y;
            } else {
                for (int axis = 0; axis < kAxes; ++axis) {
                    y_mon[axis] = m.cfg.c * state.x[axis] +
                                  noise.next_vector(m.cfg.components());
                }
            }
            const auto residual =
                m.is_central
                    ? central_step(m.cfg, model, m.state, y_mon, s.formation)
                    : local_step(m.cfg, model, m.state, y_mon, s.formation, state.mode);
            const Vector th = thresholds_at(m.cfg, t);
            tick.residuals.push_back(residual);
            tick.thresholds.push_back({th, th});
            if (!m.state.alarm) {
                for (int axis = 0; axis < kAxes; ++axis) {
                    const auto verdict = hypothesis_test(residual[axis], th);
                    for (int j : verdict.violating) {
                        log.events.push_back({m.cfg.id, t, axis, j,
                                              residual[axis](j), th(j)});
                    }
                    if (verdict.attacked && !m.state.alarm) {
                        m.state.alarm = true;  // latched for the rest of the run
                        m.state.alarm_time = t;
                        if (!m.is_central && !local_alarm_now) {
                            local_alarm_now = true;
                            local_alarm_host = m.cfg.id;
                        }
                    }
                }
            }
        }

        // Contingency: the first local rejection commands one switch, effective
        // at the next tick.
        if (s.policy == SwitchPolicy::triggered && local_alarm_now && !switch_done &&
            !switch_pending) {
            switch_pending = true;
            log.switch_time = t + s.ts;
            log.switch_trigger_monitor = local_alarm_host;
        }

        log.ticks.push_back(std::move(tick));

        if (k + 1 < n_ticks) {
            state = sr.next;
            if (switch_pending) {
                state.mode = s.trigger_target;
                switch_pending = false;
                switch_done = true;
            } else if (s.policy == SwitchPolicy::scheduled) {
                state.mode = active_mode(s.schedule, state.time);
            }
        }
    }

    const auto& last = log.ticks.back();
    log.final_formation_error = last.formation_error;
    log.final_max_speed = last.max_speed;
    return log;
}

RunLog paired_nominal_run(const Scenario& s) {
    if (std::holds_alternative<std::monostate>(s.attack)) {
        throw DomainError("paired_nominal_run: scenario has no attack plan");
    }
    Scenario nominal = s;
    nominal.attack = std::monostate{};
    // The attacked run folds +x0_attack into its initial state, so re-running
    // from the configured initial condition is exactly the attack-free pair.
    return run_scenario(nominal);
}

DetectionReport detection_report(const RunLog& log) {
    DetectionReport report;
    for (int id : log.monitor_ids) {
        report.monitors.push_back({id, log.first_alarm(id)});
    }
    report.switch_time = log.switch_time;
    report.stealthiness = log.stealthiness;
    for (const auto& tick : log.ticks) {
        report.max_formation_error = std::max(report.max_formation_error,
                                              tick.formation_error);
    }
    report.final_formation_error = log.final_formation_error;
    report.final_max_speed = log.final_max_speed;
    return report;
}

std::string format_report(const DetectionReport& report) {
    std::ostringstream out;
    out.precision(12);
    for (const auto& m : report.monitors) {
        out << (m.monitor_id == 0 ? "central monitor" : "local monitor " +
                                                            std::to_string(m.monitor_id));
        if (m.first_alarm) {
            out << ": first alarm at t = " << *m.first_alarm << " s\n";
        } else {
            out << ": no alarm\n";
        }
    }
    if (report.switch_time) {
        out << "topology switch at t = " << *report.switch_time << " s\n";
    }
    if (report.stealthiness) {
        out << "stealthiness vs paired nominal: "
            << (report.stealthiness->stealthy ? "stealthy" : "revealed");
        if (report.stealthiness->first_violation_time) {
            out << " (first violation at t = "
                << *report.stealthiness->first_violation_time << " s)";
        }
        out << ", max measurement deviation " << report.stealthiness->max_deviation
            << " m\n";
    }
    out << "max formation error over run: " << report.max_formation_error << " m\n";
    out << "final formation error: " << report.final_formation_error << " m\n";
    out << "final max speed: " << report.final_max_speed << " m/s\n";
    return out.str();
}

}  // namespace formguard
