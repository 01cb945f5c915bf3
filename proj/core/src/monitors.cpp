#include "formguard/monitors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace formguard {

using num::Matrix;
using num::Vector;

void MonitorState::reset(int state_dim, int outputs) {
    for (int axis = 0; axis < kAxes; ++axis) {
        x_hat[axis] = Vector::Zero(state_dim);
        residual[axis] = Vector::Zero(outputs);
    }
    alarm = false;
    alarm_time = -1.0;
}

Matrix local_measurement_matrix(const Topology& topo_mode1, int i) {
    std::set<int> measured = neighbors(topo_mode1, i);
    measured.insert(i);
    const int n = topo_mode1.n_agents;
    Matrix c = Matrix::Zero(static_cast<Eigen::Index>(measured.size()) + 1, 2 * n);
    Eigen::Index r = 0;
    for (int j : measured) c(r++, j - 1) = 1.0;
    c(r, n + i - 1) = 1.0;  // own velocity
    return c;
}

std::vector<std::string> local_component_names(const Topology& topo_mode1, int i) {
    std::set<int> measured = neighbors(topo_mode1, i);
    measured.insert(i);
    std::vector<std::string> names;
    for (int j : measured) names.push_back("p" + std::to_string(j));
    names.push_back("v" + std::to_string(i));
    return names;
}

namespace {

std::array<Vector, kAxes> observer_step(const ModeMatrices& mm, const Matrix& c,
                                        const Matrix& gain, MonitorState& st,
                                        const std::array<Vector, kAxes>& y,
                                        const FormationSpec& spec) {
    std::array<Vector, kAxes> residual;
    for (int axis = 0; axis < kAxes; ++axis) {
        if (y[axis].size() != c.rows()) {
            throw DimensionError("observer: measurement dimension mismatch");
        }
        residual[axis] = y[axis] - c * st.x_hat[axis];
        st.x_hat[axis] = mm.ad * st.x_hat[axis] +
                         mm.bd_formation * spec.stacked_reference(axis) +
                         gain * residual[axis];
    }
    st.residual = residual;
    return residual;
}

}  // namespace

std::array<Vector, kAxes> central_step(const MonitorConfig& cfg, const NetworkModel& model,
                                       MonitorState& st,
                                       const std::array<Vector, kAxes>& y,
                                       const FormationSpec& spec) {
    // Central estimator keeps the initial-mode model regardless of the plant's
    // active mode; that mismatch is exactly what a commanded switch exposes.
    return observer_step(model.at(1), cfg.c, cfg.gain, st, y, spec);
}

std::array<Vector, kAxes> local_step(const MonitorConfig& cfg, const NetworkModel& model,
                                     MonitorState& st,
                                     const std::array<Vector, kAxes>& y_i,
                                     const FormationSpec& spec, int mode) {
    return observer_step(model.at(mode), cfg.c, cfg.gain, st, y_i, spec);
}

std::pair<double, double> threshold_constants(const Matrix& ad_minus_hc,
                                              const Matrix& c_row, int horizon_steps,
                                              double ts) {
    const double rho = num::spectral_radius(ad_minus_hc);
    if (rho >= 1.0) {
        throw DomainError("threshold_constants: error dynamics not stable");
    }
    const double margin = 0.1 * (1.0 - rho);
    const double lambda_bar = -std::log(rho + margin) / ts;
    double k_bar = 0.0;
    Matrix power = Matrix::Identity(ad_minus_hc.rows(), ad_minus_hc.cols());
    for (int k = 0; k <= horizon_steps; ++k) {
        const double decay = (c_row * power).norm();
        k_bar = std::max(k_bar, decay * std::exp(lambda_bar * k * ts));
        power = ad_minus_hc * power;
    }
    return {k_bar, lambda_bar};
}

double threshold_value(const MonitorConfig& cfg, int component, double t) {
    if (t < 0.0) throw DomainError("threshold_value: time must be non-negative");
    return cfg.k_bar(component) * std::exp(-cfg.lambda_bar * t) * cfg.omega_bar +
           cfg.epsilon_floor;
}

HypothesisVerdict hypothesis_test(const Vector& residuals, const Vector& thresholds) {
    if (residuals.size() != thresholds.size()) {
        throw DimensionError("hypothesis_test: length mismatch");
    }
    HypothesisVerdict v;
    for (Eigen::Index j = 0; j < residuals.size(); ++j) {
        if (std::abs(residuals(j)) > thresholds(j)) v.violating.push_back(static_cast<int>(j));
    }
    v.attacked = !v.violating.empty();
    return v;
}

bool coverage_check(const std::set<int>& detector_hosts, const Topology& topo_mode1) {
    std::set<int> covered;
    for (int host : detector_hosts) {
        const auto nbrs = neighbors(topo_mode1, host);
        covered.insert(nbrs.begin(), nbrs.end());
    }
    return static_cast<int>(covered.size()) == topo_mode1.n_agents;
}

bool zda_local_detectability(const std::set<int>& compromised, int host,
                             const Topology& topo_mode1, bool include_host) {
    std::set<int> reach = neighbors(topo_mode1, host);
    if (include_host) reach.insert(host);
    return std::includes(reach.begin(), reach.end(), compromised.begin(),
                         compromised.end());
}

namespace {

double initial_state_bound(const std::array<Vector, kAxes>& x0) {
    double worst = 0.0;
    for (const auto& x : x0) worst = std::max(worst, x.norm());
    return 1.2 * worst;
}

// Fit one envelope that dominates the sampled decay in every mode the monitor
// models: common lambda from the worst-mode spectral radius, per-component
// k_bar maximized across modes.
void fit_envelope(MonitorConfig& cfg, const NetworkModel& model,
                  const std::vector<int>& mode_ids, double horizon_seconds) {
    const int steps = static_cast<int>(std::llround(horizon_seconds / model.ts));
    double rho_worst = 0.0;
    for (int m : mode_ids) {
        rho_worst = std::max(rho_worst,
                             num::spectral_radius(model.at(m).ad - cfg.gain * cfg.c));
    }
    const double margin = 0.1 * (1.0 - rho_worst);
    cfg.lambda_bar = -std::log(rho_worst + margin) / model.ts;
    cfg.k_bar = Vector::Zero(cfg.components());
    for (int m : mode_ids) {
        const Matrix closed = model.at(m).ad - cfg.gain * cfg.c;
        Matrix power = Matrix::Identity(closed.rows(), closed.cols());
        for (int k = 0; k <= steps; ++k) {
            const Matrix rows = cfg.c * power;
            for (int j = 0; j < cfg.components(); ++j) {
                const double bound = rows.row(j).norm() *
                                     std::exp(cfg.lambda_bar * k * model.ts);
                cfg.k_bar(j) = std::max(cfg.k_bar(j), bound);
            }
            power = closed * power;
        }
    }
}

double default_floor(double noise_amplitude, const Matrix& gain) {
    const double h_inf = gain.cwiseAbs().rowwise().sum().maxCoeff();
    // Absolute floor keeps long noise-free runs immune to round-off residue.
    return std::max(3.0 * noise_amplitude * (1.0 + h_inf), 1e-9);
}

}  // namespace

MonitorConfig make_central_monitor(const NetworkModel& model,
                                   const std::array<Vector, kAxes>& x0,
                                   double noise_amplitude, const MonitorCalibration& cal) {
    MonitorConfig cfg;
    cfg.id = 0;
    cfg.c = model.c;
    try {
        cfg.gain = num::stabilizing_gain(model.at(1).ad, cfg.c);
    } catch (const DetectabilityError& e) {
        throw DetectabilityError(std::string("central monitor: ") + e.what(), 1);
    }
    fit_envelope(cfg, model, {1}, cal.envelope_horizon);
    cfg.omega_bar = cal.omega_bar.value_or(initial_state_bound(x0));
    cfg.epsilon_floor = cal.epsilon_floor.value_or(default_floor(noise_amplitude, cfg.gain));
    for (int i : model.measured_pos) cfg.component_names.push_back("p" + std::to_string(i));
    for (int i : model.measured_vel) cfg.component_names.push_back("v" + std::to_string(i));
    return cfg;
}

MonitorConfig make_local_monitor(const NetworkModel& model, const Topology& topo_mode1,
                                 int host, const std::array<Vector, kAxes>& x0,
                                 double noise_amplitude, const MonitorCalibration& cal) {
    MonitorConfig cfg;
    cfg.id = host;
    cfg.c = local_measurement_matrix(topo_mode1, host);
    try {
        cfg.gain = num::stabilizing_gain(model.at(1).ad, cfg.c);
    } catch (const DetectabilityError& e) {
        throw DetectabilityError("local monitor " + std::to_string(host) + ": " + e.what(), 1);
    }
    std::vector<int> mode_ids;
    for (const auto& [id, mm] : model.mode) {
        if (num::spectral_radius(mm.ad - cfg.gain * cfg.c) >= 1.0) {
            throw DetectabilityError("local monitor " + std::to_string(host) +
                                         ": mode-1 gain is unstable in mode " +
                                         std::to_string(id),
                                     id);
        }
        mode_ids.push_back(id);
    }
    fit_envelope(cfg, model, mode_ids, cal.envelope_horizon);
    cfg.omega_bar = cal.omega_bar.value_or(initial_state_bound(x0));
    cfg.epsilon_floor = cal.epsilon_floor.value_or(default_floor(noise_amplitude, cfg.gain));
    cfg.component_names = local_component_names(topo_mode1, host);
    return cfg;
}

}  // namespace formguard
