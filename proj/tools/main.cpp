#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "formguard/attacks.hpp"
#include "formguard/monitors.hpp"
#include "formguard/orchestrator.hpp"
#include "formguard/scenario_io.hpp"

namespace fs = std::filesystem;
using namespace formguard;

namespace {

constexpr int kExitClean = 0;
constexpr int kExitError = 1;
constexpr int kExitDetected = 2;

Scenario load(const std::string& path, std::optional<std::uint64_t> seed_override) {
    Scenario s = parse_scenario(path);
    if (seed_override) s.noise.seed = *seed_override;
    return s;
}

int run_one(const std::string& path, const fs::path& out_dir, bool paired_nominal,
            std::optional<std::uint64_t> seed_override) {
    const Scenario s = load(path, seed_override);
    RunLog log = run_scenario(s);
    if (paired_nominal) {
        if (std::holds_alternative<std::monostate>(s.attack)) {
            std::cerr << path << ": --paired-nominal needs an attack plan\n";
            return kExitError;
        }
        RunLog nominal = paired_nominal_run(s);
        log.stealthiness = verify_stealthiness(log, nominal, 1e-6);
        write_traces(nominal, out_dir, "nominal_");
    }
    write_traces(log, out_dir);
    std::cout << format_report(detection_report(log));
    std::cout << "traces written to " << out_dir.string() << "\n";
    return log.events.empty() ? kExitClean : kExitDetected;
}

int cmd_run(const std::vector<std::string>& paths, const fs::path& out_dir,
            bool paired_nominal, bool batch, std::optional<std::uint64_t> seed_override) {
    if (!batch) {
        return run_one(paths.front(), out_dir, paired_nominal, seed_override);
    }
    // Batch mode: independent scenarios in parallel, one subdirectory each.
    std::vector<std::future<int>> futures;
    for (const auto& path : paths) {
        const fs::path sub = out_dir / fs::path(path).stem();
        futures.push_back(std::async(std::launch::async, [=] {
            try {
                return run_one(path, sub, paired_nominal, seed_override);
            } catch (const std::exception& e) {
                std::cerr << path << ": " << e.what() << "\n";
                return kExitError;
            }
        }));
    }
    bool any_error = false;
    bool any_detection = false;
    for (auto& f : futures) {
        const int code = f.get();
        any_error = any_error || code == kExitError;
        any_detection = any_detection || code == kExitDetected;
    }
    if (any_error) return kExitError;
    return any_detection ? kExitDetected : kExitClean;
}

int cmd_check(const std::string& path) {
    const Scenario s = parse_scenario(path);
    const Topology& mode1 = s.modes.at(1);
    bool all_ok = true;
    auto report = [&](bool ok, const std::string& what) {
        std::cout << (ok ? "OK   " : "FAIL ") << what << "\n";
        all_ok = all_ok && ok;
    };

    for (const auto& [id, topo] : s.modes) {
        report(is_connected(topo), "mode " + std::to_string(id) + " connected");
    }
    if (!s.detectors.empty()) {
        report(coverage_check(s.detectors, mode1),
               "detector coverage: union of mode-1 neighbor sets spans all agents");
    }
    const auto compromised = s.compromised_set();
    if (!compromised.empty() && !s.detectors.empty()) {
        // Per-host lines are informational; the network is secured as soon as one
        // configured host satisfies the subset condition.
        bool any = false;
        for (int host : s.detectors) {
            const bool detectable = zda_local_detectability(
                compromised, host, mode1, s.detectability_includes_host);
            any = any || detectable;
            std::cout << "     host " << host << " structurally detects the attack set: "
                      << (detectable ? "yes" : "no")
                      << (s.detectability_includes_host ? " (M^i variant)" : "") << "\n";
        }
        report(any, "at least one detector host structurally detects the attack set");
    }
    // Gain design doubles as the observability / stability diagnosis.
    const NetworkModel model = scenario_model(s);
    std::array<num::Vector, kAxes> x0;
    for (int axis = 0; axis < kAxes; ++axis) {
        x0[axis] = num::Vector::Zero(2 * s.n_agents);
        for (int i = 0; i < s.n_agents; ++i) x0[axis](i) = s.initial_positions[i][axis];
    }
    try {
        make_central_monitor(model, x0, s.noise.amplitude);
        report(true, "central monitor gain stable on mode 1");
    } catch (const DetectabilityError& e) {
        report(false, std::string("central monitor gain: ") + e.what());
    }
    for (int host : s.detectors) {
        try {
            make_local_monitor(model, mode1, host, x0, s.noise.amplitude);
            report(true, "local monitor " + std::to_string(host) +
                             " gain stable on all modes");
        } catch (const DetectabilityError& e) {
            report(false, "local monitor " + std::to_string(host) + ": " + e.what());
        }
    }
    return all_ok ? kExitClean : kExitError;
}

int cmd_synthesize_zda(const std::string& path, std::optional<double> scale_override,
                       const std::string& emit_path) {
    Scenario s = parse_scenario(path);
    auto* zda = std::get_if<ZdaPlan>(&s.attack);
    if (!zda) {
        std::cerr << path << ": scenario's [attack] section is not a zda plan\n";
        return kExitError;
    }
    if (scale_override) zda->scale = *scale_override;
    const NetworkModel model = scenario_model(s);
    ZdaPlan plan;
    try {
        plan = std::get<ZdaPlan>(resolve_attack(s, model));
    } catch (const ZeroDynamicsError& e) {
        std::cerr << "synthesis failed: " << e.what() << "\n";
        std::cerr << "scanned rates: smallest confirmed positive zero of the mode-1 "
                     "pencil over (0, 10]\n";
        return kExitError;
    }
    std::cout.precision(12);
    std::cout << "zda plan (Ts = " << plan.ts << " s)\n";
    std::cout << "  compromised agents:";
    for (int i : plan.compromised) std::cout << " " << i;
    std::cout << "\n  designated agent: " << plan.designated
              << " (position offset = " << plan.scale << " m)\n";
    const char* axes[] = {"x", "y"};
    for (int axis = 0; axis < kAxes; ++axis) {
        std::cout << "  axis " << axes[axis] << ": lambda = " << plan.lambda[axis]
                  << " 1/s\n";
        std::cout << "    u0 =";
        for (Eigen::Index i = 0; i < plan.u0[axis].size(); ++i) {
            std::cout << " " << plan.u0[axis](i);
        }
        std::cout << "\n    x0_attack =";
        for (Eigen::Index i = 0; i < plan.x0_attack[axis].size(); ++i) {
            std::cout << " " << plan.x0_attack[axis](i);
        }
        std::cout << "\n    pencil residual (discrete) = " << plan.pencil_residual[axis]
                  << "\n    pencil residual (continuous) = "
                  << plan.continuous_pencil_residual[axis] << "\n";
    }
    if (!emit_path.empty()) {
        Scenario completed = s;
        ZdaPlan pinned = *std::get_if<ZdaPlan>(&completed.attack);
        pinned.lambda = plan.lambda;
        pinned.designated = plan.designated;
        pinned.scale = plan.scale;
        completed.attack = pinned;
        std::ofstream out(emit_path);
        if (!out) {
            std::cerr << "cannot write " << emit_path << "\n";
            return kExitError;
        }
        out << emit_scenario(completed);
        std::cout << "completed scenario written to " << emit_path << "\n";
    }
    return kExitClean;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Consensus-formation attack simulation and observer-based detection"};
    app.require_subcommand(1);

    std::vector<std::string> run_paths;
    std::string out_dir = "out";
    bool paired_nominal = false;
    bool batch = false;
    std::optional<std::uint64_t> seed_override;
    std::uint64_t seed_value = 0;

    auto* run = app.add_subcommand("run", "Simulate a scenario and write trace files");
    run->add_option("scenario", run_paths, "scenario file(s)")->required();
    run->add_option("--out", out_dir, "output directory");
    run->add_flag("--paired-nominal", paired_nominal,
                  "also run the attack-free pair and report stealthiness");
    run->add_flag("--batch", batch, "run multiple scenarios concurrently");
    auto* seed_opt = run->add_option("--seed", seed_value, "override the scenario seed");

    std::string check_path;
    auto* check = app.add_subcommand("check", "Structural checks for a scenario");
    check->add_option("scenario", check_path, "scenario file")->required();

    std::string synth_path;
    std::string emit_path;
    double scale_value = 0.0;
    auto* synth = app.add_subcommand("synthesize-zda",
                                     "Synthesize the stealthy zero-dynamics plan");
    synth->add_option("scenario", synth_path, "scenario file")->required();
    auto* scale_opt = synth->add_option("--scale", scale_value,
                                        "designated agent's position offset, meters");
    synth->add_option("--emit", emit_path, "write the completed scenario to this path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            if (seed_opt->count() > 0) seed_override = seed_value;
            if (run_paths.size() > 1 && !batch) {
                std::cerr << "multiple scenarios need --batch\n";
                return kExitError;
            }
            return cmd_run(run_paths, out_dir, paired_nominal, batch, seed_override);
        }
        if (check->parsed()) return cmd_check(check_path);
        if (synth->parsed()) {
            std::optional<double> scale;
            if (scale_opt->count() > 0) scale = scale_value;
            return cmd_synthesize_zda(synth_path, scale, emit_path);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}
