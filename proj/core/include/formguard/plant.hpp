#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "formguard/matrix.hpp"
#include "formguard/topology.hpp"

namespace formguard {

inline constexpr int kAxes = 2;  // planar x / y, decoupled

struct ControlGains {
    double alpha = 1.0;  // position-consensus gain, 1/s^2
    double gamma = 2.0;  // velocity damping, 1/s

    void validate() const;
};

/// Desired formation setpoints p*_i per agent; relative references are derived
/// as p*_ij = p*_i - p*_j.
struct FormationSpec {
    std::vector<std::array<double, kAxes>> setpoints;  // one per agent, meters

    int n_agents() const { return static_cast<int>(setpoints.size()); }
    double relative(int i, int j, int axis) const;
    /// Stacked reference x* = col(p*_1..p*_N, 0..0) for one axis.
    num::Vector stacked_reference(int axis) const;
};

struct NoiseSpec {
    double amplitude = 0.0;  // uniform in [-amplitude, amplitude], meters
    std::uint64_t seed = 0;

    void validate() const;
};

/// Deterministic stream of bounded measurement noise. One stream per run; the
/// draw order is fixed by the orchestrator so paired runs consume identical values.
class NoiseStream {
public:
    explicit NoiseStream(const NoiseSpec& spec) : amplitude_(spec.amplitude), rng_(spec.seed) {}

    /// Uniform sample in [-amplitude, amplitude]; always advances the stream.
    double next() {
        const double u = std::ldexp(static_cast<double>(rng_()), -64);  // [0,1)
        return amplitude_ * (2.0 * u - 1.0);
    }
    num::Vector next_vector(Eigen::Index n) {
        num::Vector v(n);
        for (Eigen::Index k = 0; k < n; ++k) v(k) = next();
        return v;
    }

private:
    double amplitude_;
    std::mt19937_64 rng_;
};

/// Matrices of one communication mode, continuous and ZOH-discretized.
struct ModeMatrices {
    num::Matrix a;          // 2N x 2N, [[0, I], [-alpha L, -gamma I]]
    num::Matrix b_formation;  // = -a
    num::Matrix ad;         // e^{A Ts}
    num::Matrix bd_formation;
    num::Matrix bd_attack;  // ZOH of the attack columns under this mode's A
};

/// Per-axis network-level LTI model shared by plant, attacker and monitors.
struct NetworkModel {
    int n_agents = 0;
    double ts = 0.02;
    ControlGains gains;
    std::set<int> compromised;    // attack input channels, ascending column order
    std::set<int> measured_pos;   // M_p
    std::set<int> measured_vel;   // M_v
    num::Matrix b_attack;         // 2N x |A|, canonical columns in the velocity block
    num::Matrix c;                // (|M_p|+|M_v|) x 2N selection rows
    std::map<int, ModeMatrices> mode;  // keyed by mode id

    const ModeMatrices& at(int mode_id) const;
    int state_dim() const { return 2 * n_agents; }
    int output_dim() const { return static_cast<int>(c.rows()); }
};

/// Plant state for both axes at one sample instant.
struct PlantState {
    std::array<num::Vector, kAxes> x;  // each 2N: positions then velocities
    double time = 0.0;
    int mode = 1;
};

/// A_sigma = [[0, I], [-alpha L, -gamma I]] for one axis.
num::Matrix assemble_dynamics(const ControlGains& gains, const Topology& topo);

/// B_A: canonical velocity-block columns for each compromised agent (ascending).
num::Matrix assemble_attack_input(const std::set<int>& compromised, int n_agents);

/// C: position-selection rows for M_p then velocity-selection rows for M_v.
num::Matrix assemble_measurement(const std::set<int>& measured_pos,
                                 const std::set<int>& measured_vel, int n_agents);

/// Build the full model over a mode table; discretizes every mode at ts.
NetworkModel assemble_network_model(const ControlGains& gains,
                                    const std::map<int, Topology>& modes,
                                    const std::set<int>& compromised,
                                    const std::set<int>& measured_pos,
                                    const std::set<int>& measured_vel, double ts);

/// Nominal consensus input u_n per agent and axis (Nx2).
num::Matrix control_input(const PlantState& state, const Topology& topo,
                          const FormationSpec& spec, const ControlGains& gains);

/// Pitch/roll setpoints (theta_cmd, phi_cmd) = (+u_x/g, -u_y/g), radians.
std::array<double, 2> attitude_setpoints(const std::array<double, 2>& u, double g);

struct StepResult {
    PlantState next;
    std::array<num::Vector, kAxes> y;  // transmitted measurement of the *current* state
};

/// One ZOH step of the closed loop under the given mode's matrices:
///   x+ = Ad x + BdF x* + BdA u_attack, y = C x - u_sensor + noise.
/// u_attack / u_sensor hold one column per axis (may have zero columns for "none").
StepResult step(const PlantState& state, const NetworkModel& model,
                const FormationSpec& spec, const num::Matrix& u_attack,
                const num::Matrix& u_sensor, NoiseStream& noise);

/// Variant stepping with an explicit mode-matrix set (used for DoS-degraded graphs).
StepResult step_with_matrices(const PlantState& state, const NetworkModel& model,
                              const ModeMatrices& mm, const FormationSpec& spec,
                              const num::Matrix& u_attack, const num::Matrix& u_sensor,
                              NoiseStream& noise);

/// (max over pairs of |p_i - p_j - p*_ij|, max over agents of |v_i|), with the
/// two axes of each deviation combined by Euclidean norm.
std::array<double, 2> formation_error(const PlantState& state, const FormationSpec& spec);

}  // namespace formguard
