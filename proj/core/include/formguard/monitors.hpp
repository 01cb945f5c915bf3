#pragma once

#include <array>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "formguard/matrix.hpp"
#include "formguard/plant.hpp"
#include "formguard/topology.hpp"

namespace formguard {

/// Calibrated configuration of one monitor. Id 0 is the central monitor (fixed
/// mode-1 model, network-level measurements); id i >= 1 is the local monitor
/// hosted on agent i (model tracks the active mode, measurements are the mode-1
/// neighbor positions plus the host's own position and velocity).
struct MonitorConfig {
    int id = 0;
    num::Matrix c;             // measurement matrix (rows = components)
    num::Matrix gain;          // H, 2N x rows(c)
    num::Vector k_bar;         // per-component envelope scale
    double lambda_bar = 1.0;   // shared envelope decay rate, 1/s
    double omega_bar = 1.0;    // initial-state bound |x(0)| <= omega_bar
    double epsilon_floor = 0.0;  // noise margin epsilon_0 / epsilon_i
    std::vector<std::string> component_names;  // "p3", "v1", ... for traces

    int components() const { return static_cast<int>(c.rows()); }
};

struct MonitorState {
    std::array<num::Vector, kAxes> x_hat;     // estimates, start at zero
    std::array<num::Vector, kAxes> residual;  // last computed residual
    bool alarm = false;                       // latched for the rest of the run
    double alarm_time = -1.0;

    void reset(int state_dim, int outputs);
};

struct DetectionEvent {
    int monitor_id = 0;
    double time = 0.0;
    int axis = 0;
    int component = 0;  // row index into the monitor's C
    double residual = 0.0;
    double threshold = 0.0;
};

struct HypothesisVerdict {
    bool attacked = false;          // H1
    std::vector<int> violating;     // component indices with |r_j| > eps_j
};

/// Local measurement matrix C_i: position rows for N^i(mode 1) + {i}
/// (ascending) followed by the host's velocity row.
num::Matrix local_measurement_matrix(const Topology& topo_mode1, int i);

/// Component labels matching local_measurement_matrix row order.
std::vector<std::string> local_component_names(const Topology& topo_mode1, int i);

/// One update of the central observer (model fixed to mode 1). Returns the
/// residual evaluated before the estimate update.
std::array<num::Vector, kAxes> central_step(const MonitorConfig& cfg,
                                            const NetworkModel& model,
                                            MonitorState& st,
                                            const std::array<num::Vector, kAxes>& y,
                                            const FormationSpec& spec);

/// One update of a local observer whose model follows the active mode.
std::array<num::Vector, kAxes> local_step(const MonitorConfig& cfg,
                                          const NetworkModel& model, MonitorState& st,
                                          const std::array<num::Vector, kAxes>& y_i,
                                          const FormationSpec& spec, int mode);

/// Smallest exponential envelope k_bar e^{-lambda_bar t} dominating the sampled
/// decay ||C_j (Ad - H C)^k|| over the horizon. lambda_bar comes from the
/// spectral radius (with a safety margin); requires a stable input matrix.
std::pair<double, double> threshold_constants(const num::Matrix& ad_minus_hc,
                                              const num::Matrix& c_row, int horizon_steps,
                                              double ts);

/// Time-varying residual bound k_bar_j e^{-lambda_bar t} omega_bar + eps_floor.
double threshold_value(const MonitorConfig& cfg, int component, double t);

/// Existential hypothesis test: H1 iff |r_j| > eps_j for at least one j.
/// Equality stays with the null hypothesis.
HypothesisVerdict hypothesis_test(const num::Vector& residuals,
                                  const num::Vector& thresholds);

/// True iff the union of the mode-1 neighbor sets of the detector hosts covers
/// every agent.
bool coverage_check(const std::set<int>& detector_hosts, const Topology& topo_mode1);

/// Structural detectability: A contained in the host's mode-1
/// neighbor set. With include_host, the host's own index augments the set.
bool zda_local_detectability(const std::set<int>& compromised, int host,
                             const Topology& topo_mode1, bool include_host = false);

struct MonitorCalibration {
    double envelope_horizon = 15.0;        // seconds of samples for the fit
    std::optional<double> omega_bar;       // override; default 1.2 |x(0)|
    std::optional<double> epsilon_floor;   // override; default 3 a (1 + |H|inf)
};

/// Build a calibrated central-monitor configuration. Gain designed on the
/// mode-1 pair and required stable there (the central model never switches).
MonitorConfig make_central_monitor(const NetworkModel& model,
                                   const std::array<num::Vector, kAxes>& x0,
                                   double noise_amplitude,
                                   const MonitorCalibration& cal = {});

/// Build a calibrated local-monitor configuration for a host agent. The gain is
/// designed on mode 1 and post-checked stable for every mode in the model;
/// a failing mode raises DetectabilityError naming it.
MonitorConfig make_local_monitor(const NetworkModel& model, const Topology& topo_mode1,
                                 int host, const std::array<num::Vector, kAxes>& x0,
                                 double noise_amplitude,
                                 const MonitorCalibration& cal = {});

}  // namespace formguard
