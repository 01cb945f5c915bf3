#include "formguard/plant.hpp"

#include <cmath>
#include <string>

namespace formguard {

using num::Matrix;
using num::Vector;

void ControlGains::validate() const {
    if (!(alpha > 0.0) || !(gamma > 0.0)) {
        throw DomainError("gains: alpha and gamma must be positive");
    }
}

double FormationSpec::relative(int i, int j, int axis) const {
    return setpoints.at(i - 1)[axis] - setpoints.at(j - 1)[axis];
}

Vector FormationSpec::stacked_reference(int axis) const {
    const int n = n_agents();
    Vector r = Vector::Zero(2 * n);
    for (int i = 0; i < n; ++i) r(i) = setpoints[i][axis];
    return r;
}

void NoiseSpec::validate() const {
    if (amplitude < 0.0) throw DomainError("noise: amplitude must be non-negative");
}

const ModeMatrices& NetworkModel::at(int mode_id) const {
    auto it = mode.find(mode_id);
    if (it == mode.end()) {
        throw DomainError("network model: unknown mode " + std::to_string(mode_id));
    }
    return it->second;
}

Matrix assemble_dynamics(const ControlGains& gains, const Topology& topo) {
    gains.validate();
    const int n = topo.n_agents;
    Matrix a = Matrix::Zero(2 * n, 2 * n);
    a.topRightCorner(n, n) = Matrix::Identity(n, n);
    a.bottomLeftCorner(n, n) = -gains.alpha * laplacian(topo);
    a.bottomRightCorner(n, n) = -gains.gamma * Matrix::Identity(n, n);
    return a;
}

Matrix assemble_attack_input(const std::set<int>& compromised, int n_agents) {
    if (compromised.empty()) throw DomainError("attack input: compromised set is empty");
    Matrix b = Matrix::Zero(2 * n_agents, static_cast<Eigen::Index>(compromised.size()));
    int col = 0;
    for (int i : compromised) {
        if (i < 1 || i > n_agents) throw DomainError("attack input: agent index out of range");
        b(n_agents + i - 1, col++) = 1.0;
    }
    return b;
}

Matrix assemble_measurement(const std::set<int>& measured_pos,
                            const std::set<int>& measured_vel, int n_agents) {
    const auto rows = static_cast<Eigen::Index>(measured_pos.size() + measured_vel.size());
    Matrix c = Matrix::Zero(rows, 2 * n_agents);
    Eigen::Index r = 0;
    for (int i : measured_pos) {
        if (i < 1 || i > n_agents) throw DomainError("measurement: agent index out of range");
        c(r++, i - 1) = 1.0;
    }
    for (int i : measured_vel) {
        if (i < 1 || i > n_agents) throw DomainError("measurement: agent index out of range");
        c(r++, n_agents + i - 1) = 1.0;
    }
    return c;
}

NetworkModel assemble_network_model(const ControlGains& gains,
                                    const std::map<int, Topology>& modes,
                                    const std::set<int>& compromised,
                                    const std::set<int>& measured_pos,
                                    const std::set<int>& measured_vel, double ts) {
    if (modes.empty()) throw DomainError("network model: empty mode table");
    NetworkModel model;
    model.n_agents = modes.begin()->second.n_agents;
    model.ts = ts;
    model.gains = gains;
    model.compromised = compromised;
    model.measured_pos = measured_pos;
    model.measured_vel = measured_vel;
    model.b_attack = compromised.empty()
                         ? Matrix::Zero(2 * model.n_agents, 0)
                         : assemble_attack_input(compromised, model.n_agents);
    model.c = assemble_measurement(measured_pos, measured_vel, model.n_agents);
    for (const auto& [id, topo] : modes) {
        if (topo.n_agents != model.n_agents) {
            throw DimensionError("network model: inconsistent agent counts across modes");
        }
        ModeMatrices mm;
        mm.a = assemble_dynamics(gains, topo);
        mm.b_formation = -mm.a;
        // One augmented exponential discretizes both input blocks consistently.
        Matrix b_all(2 * model.n_agents, mm.b_formation.cols() + model.b_attack.cols());
        b_all << mm.b_formation, model.b_attack;
        auto [ad, bd_all] = num::zoh_discretize(mm.a, b_all, ts);
        mm.ad = ad;
        mm.bd_formation = bd_all.leftCols(mm.b_formation.cols());
        mm.bd_attack = bd_all.rightCols(model.b_attack.cols());
        model.mode.emplace(id, std::move(mm));
    }
    return model;
}

Matrix control_input(const PlantState& state, const Topology& topo,
                     const FormationSpec& spec, const ControlGains& gains) {
    const int n = topo.n_agents;
    Matrix u = Matrix::Zero(n, kAxes);
    for (int axis = 0; axis < kAxes; ++axis) {
        const Vector& x = state.x[axis];
        for (int i = 1; i <= n; ++i) {
            double acc = 0.0;
            for (int j : neighbors(topo, i)) {
                acc -= gains.alpha * (x(i - 1) - x(j - 1) - spec.relative(i, j, axis));
            }
            acc -= gains.gamma * x(n + i - 1);
            u(i - 1, axis) = acc;
        }
    }
    return u;
}

std::array<double, 2> attitude_setpoints(const std::array<double, 2>& u, double g) {
    if (!(g > 0.0)) throw DomainError("attitude setpoints: g must be positive");
    return {u[0] / g, -u[1] / g};
}

StepResult step_with_matrices(const PlantState& state, const NetworkModel& model,
                              const ModeMatrices& mm, const FormationSpec& spec,
                              const Matrix& u_attack, const Matrix& u_sensor,
                              NoiseStream& noise) {
    const int outputs = model.output_dim();
    if (u_attack.cols() > 0 && u_attack.rows() != model.b_attack.cols()) {
        throw DimensionError("step: attack input size does not match |A|");
    }
    if (u_sensor.cols() > 0 && u_sensor.rows() != outputs) {
        throw DimensionError("step: sensor attack size does not match output count");
    }
    StepResult out;
    out.next.time = state.time + model.ts;
    out.next.mode = state.mode;
    for (int axis = 0; axis < kAxes; ++axis) {
        const Vector& x = state.x[axis];
        Vector y = model.c * x;
        if (u_sensor.cols() > 0) y -= u_sensor.col(axis);
        y += noise.next_vector(outputs);
        out.y[axis] = std::move(y);

        Vector xn = mm.ad * x + mm.bd_formation * spec.stacked_reference(axis);
        if (u_attack.cols() > 0) xn += mm.bd_attack * u_attack.col(axis);
        out.next.x[axis] = std::move(xn);
    }
    return out;
}

StepResult step(const PlantState& state, const NetworkModel& model,
                const FormationSpec& spec, const Matrix& u_attack,
                const Matrix& u_sensor, NoiseStream& noise) {
    return step_with_matrices(state, model, model.at(state.mode), spec, u_attack,
                              u_sensor, noise);
}

std::array<double, 2> formation_error(const PlantState& state, const FormationSpec& spec) {
    const int n = spec.n_agents();
    double worst_pos = 0.0;
    for (int i = 1; i <= n; ++i) {
        for (int j = i + 1; j <= n; ++j) {
            double sq = 0.0;
            for (int axis = 0; axis < kAxes; ++axis) {
                const double d = state.x[axis](i - 1) - state.x[axis](j - 1) -
                                 spec.relative(i, j, axis);
                sq += d * d;
            }
            worst_pos = std::max(worst_pos, std::sqrt(sq));
        }
    }
    double worst_vel = 0.0;
    for (int i = 0; i < n; ++i) {
        double sq = 0.0;
        for (int axis = 0; axis < kAxes; ++axis) {
            const double v = state.x[axis](n + i);
            sq += v * v;
        }
        worst_vel = std::max(worst_vel, std::sqrt(sq));
    }
    return {worst_pos, worst_vel};
}

}  // namespace formguard
