#pragma once

#include <array>
#include <optional>
#include <set>
#include <variant>
#include <vector>

#include "formguard/matrix.hpp"
#include "formguard/plant.hpp"
#include "formguard/topology.hpp"

namespace formguard {

struct RunLog;  // orchestrator; only referenced here

/// Rate used when the pencil is degenerate (stealthy directions exist at every
/// positive rate) and the scenario does not pin one explicitly.
inline constexpr double kCanonicalZeroRate = 0.5;

/// Zero-dynamics attack plan. The signal u_a(k) = u0 e^{lambda k Ts} together
/// with the state offset x0_attack folded into the initial condition keeps the
/// monitored outputs identical to an attack-free run from the unshifted state.
/// Synthesis works on the ZOH-discretized pencil at mu = e^{lambda Ts}, so the
/// identity is exact in the sampled closed loop.
struct ZdaPlan {
    std::array<double, kAxes> lambda{};      // per-axis rates, 1/s, positive
    std::array<num::Vector, kAxes> u0;       // |A| input amplitudes at k = 0
    std::array<num::Vector, kAxes> x0_attack;  // 2N zero-direction state offsets
    std::set<int> compromised;
    int designated = 0;   // agent whose position offset is normalized to `scale`
    double scale = 0.0;
    double ts = 0.02;
    double start_time = 0.0;  // fixed at 0 by construction
    std::array<double, kAxes> pencil_residual{};             // discrete-pencil ||P v||
    std::array<double, kAxes> continuous_pencil_residual{};  // informational
};

struct CovertWaveform {
    enum class Kind { ramp, step, sinusoid };
    Kind kind = Kind::ramp;
    double p1 = 0.0;  // ramp slope (m/s^3) | step level (m/s^2) | sine amplitude
    double p2 = 0.0;  // sinusoid frequency, Hz
    double value(double t_since_start) const;
};

/// Covert attack: arbitrary waveform injected on the compromised input channels,
/// masked by the sensor correction u_s = C x_s of a mode-1 shadow system.
struct CovertPlan {
    std::array<CovertWaveform, kAxes> waveform;
    double start_time = 0.0;  // t_a
    std::set<int> compromised;
    // Run-owned shadow state, zero before start_time.
    std::array<num::Vector, kAxes> shadow;
    void reset_shadow(int state_dim);
};

/// Cooperative DoS + replay: record the transmitted measurements for a window
/// T_r, then sever the targets' links, push their actuators, and replay the
/// recorded loop so the ground station keeps seeing the pre-attack hover.
struct ReplayPlan {
    double record_window = 1.0;  // T_r, seconds
    double start_time = 2.0;     // t_a, must exceed T_r
    std::set<int> dos_targets;
    std::set<int> compromised;            // actuator-push channels; defaults to dos_targets
    std::array<double, kAxes> push{};     // constant accelerations from t_a
    // Run-owned ring buffer of transmitted measurements, one slot per tick.
    std::vector<std::array<num::Vector, kAxes>> buffer;
    std::size_t recorded = 0;

    int window_ticks(double ts) const;
    void validate() const;
};

using AttackPlan = std::variant<std::monostate, ZdaPlan, CovertPlan, ReplayPlan>;

/// Rosenbrock-style pencil [[lambda I - A1, -B_A], [C, 0]] of the mode-1 model.
num::Matrix build_pencil(const NetworkModel& model, double lambda);

/// Same block structure over arbitrary matrices (used for the discrete pencil).
num::Matrix build_pencil_from(const num::Matrix& a, const num::Matrix& b,
                              const num::Matrix& c, double lambda);

struct InvariantZero {
    double lambda = 0.0;
    num::Vector null_vector;  // unit vector, (x0; u0) split
};

/// True when the pencil has a nontrivial kernel at every rate (more attack
/// channels than monitored outputs, or a structurally singular pencil).
bool pencil_is_degenerate(const num::Matrix& a, const num::Matrix& b,
                          const num::Matrix& c);

/// Positive real rates at which the mode-1 pencil admits stealthy directions,
/// each with a unit kernel vector, ascending. Isolated zeros are found through
/// the generalized eigenvalue problem of the pencil pair and confirmed by SVD;
/// a degenerate pencil reports the canonical representative rate instead.
/// Throws ZeroDynamicsError when no positive rate exists.
std::vector<InvariantZero> find_invariant_zeros(const NetworkModel& model);

struct ZdaOptions {
    std::optional<double> lambda_x;
    std::optional<double> lambda_y;
    std::optional<int> designated;
};

/// Build a ZdaPlan whose designated agent's position offset equals `scale`.
ZdaPlan synthesize_zda(const NetworkModel& model, double scale,
                       const ZdaOptions& options = {});

/// u_a(k) = u0 e^{lambda k Ts}, one column per axis (|A| x 2).
num::Matrix zda_signal(const ZdaPlan& plan, long k);

/// Covert actuator input at time t (|A| x 2); zero before the start time.
num::Matrix covert_attack_input(const CovertPlan& plan, double t);

/// Returns u_s(k) = C x_s(k) and then advances the shadow system with u_a_k.
num::Matrix covert_sensor_signal(CovertPlan& plan, const NetworkModel& model,
                                 long k, const num::Matrix& u_a_k);

/// Record one transmitted sample into the replay ring buffer (pre-attack phase).
void replay_record(ReplayPlan& plan, const std::array<num::Vector, kAxes>& y, double ts);

/// u_s(k) = C x_now - y_recorded at the loop position of tick k. Requires a full
/// buffer; the transmitted measurement then replays the recorded window.
num::Matrix replay_sensor_signal(const ReplayPlan& plan, const NetworkModel& model,
                                 const PlantState& x_now, long k);

/// Topology with every edge incident to a DoS target removed. The degraded
/// graph is applied to the plant only and need not be connected.
Topology apply_dos(const Topology& topo, const std::set<int>& targets);

struct StealthinessVerdict {
    bool stealthy = true;
    std::optional<double> first_violation_time;
    double max_deviation = 0.0;
};

/// Sample-by-sample comparison of transmitted measurements of two runs.
StealthinessVerdict verify_stealthiness(const RunLog& attacked, const RunLog& nominal,
                                        double tol);

}  // namespace formguard
