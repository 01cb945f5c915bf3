#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "formguard/scenario_io.hpp"

using namespace formguard;
namespace fs = std::filesystem;

namespace {

std::string minimal_two_agent() {
    return R"(
[agents]
count = 2
pos_1 = 0.0 0.0
pos_2 = 1.2 0.3

[gains]
alpha = 1.0
gamma = 2.0

[formation]
ref_1 = 0.0 0.0
ref_2 = 1.0 0.0

[modes]
mode_1 = 1-2

[switching]
policy = none

[attack]
type = none

[monitors]
detectors =
measured_positions = 1
measured_velocities =

[sim]
ts = 0.02
horizon = 1.0
noise_amplitude = 0.0
seed = 5
)";
}

std::string replace_once(std::string text, const std::string& from, const std::string& to) {
    const auto pos = text.find(from);
    REQUIRE(pos != std::string::npos);
    return text.replace(pos, from.size(), to);
}

}  // namespace

TEST_CASE("parse_scenario_text: minimal attack-free file is valid") {
    const Scenario s = parse_scenario_text(minimal_two_agent(), "mini");
    CHECK(s.n_agents == 2);
    CHECK(s.modes.at(1).edges.size() == 1);
    CHECK(std::holds_alternative<std::monostate>(s.attack));
    const RunLog log = run_scenario(s);
    CHECK(log.ticks.size() == 51);
}

TEST_CASE("parse_scenario_text: diagnostics name section, key and reason") {
    // Missing required section.
    {
        std::string text = replace_once(minimal_two_agent(), "[gains]", "[agents2]");
        CHECK_THROWS_WITH_AS(parse_scenario_text(text, "f"),
                             doctest::Contains("unknown section"), ParseError);
    }
    {
        std::string text = minimal_two_agent();
        text = replace_once(text, "[sim]", "[sim]\nwhatever = 3");
        CHECK_THROWS_WITH_AS(parse_scenario_text(text, "f"),
                             doctest::Contains("unknown key 'whatever'"), ParseError);
    }
    {
        std::string text = replace_once(minimal_two_agent(), "alpha = 1.0", "alpha = abc");
        CHECK_THROWS_WITH_AS(parse_scenario_text(text, "f"),
                             doctest::Contains("not a number"), ParseError);
    }
    {
        std::string text = replace_once(minimal_two_agent(), "gamma = 2.0", "");
        CHECK_THROWS_WITH_AS(parse_scenario_text(text, "f"),
                             doctest::Contains("missing required key 'gamma'"), ParseError);
    }
}

TEST_CASE("parse_scenario_text: disconnected mode is rejected by name") {
    std::string text = minimal_two_agent();
    text = replace_once(text, "mode_1 = 1-2", "mode_1 = 1-2\nmode_2 =");
    CHECK_THROWS_WITH_AS(parse_scenario_text(text, "f"), doctest::Contains("mode 2"),
                         ParseError);
}

TEST_CASE("parse_scenario_text: coverage is enforced for triggered switching") {
    Scenario s = fixtures::base_scenario();
    s.detectors = {1};  // N^1 = {3,4,5} does not cover the network
    s.policy = SwitchPolicy::triggered;
    s.trigger_target = 4;
    const std::string text = emit_scenario(s);
    CHECK_THROWS_WITH_AS(parse_scenario_text(text, "f"), doctest::Contains("coverage"),
                         ParseError);

    // The same detector set parses when no triggered contingency depends on it;
    // `check` then reports the failed coverage with a nonzero exit.
    s.policy = SwitchPolicy::none;
    const Scenario parsed = parse_scenario_text(emit_scenario(s), "f");
    CHECK_FALSE(coverage_check(parsed.detectors, parsed.modes.at(1)));
}

TEST_CASE("parse_scenario_text: paper-shaped scenario passes with coverage") {
    Scenario s = fixtures::base_scenario();
    s.attack = fixtures::zda_request();
    s.policy = SwitchPolicy::triggered;
    s.trigger_target = 4;
    const Scenario parsed = parse_scenario_text(emit_scenario(s), "f");
    CHECK(parsed.n_agents == 5);
    CHECK(parsed.measured_pos == std::set<int>{3, 5});
    CHECK(parsed.detectors == std::set<int>{1, 3});
    CHECK(coverage_check(parsed.detectors, parsed.modes.at(1)));
}

TEST_CASE("round-trip: parse(emit(s)) reproduces the digest") {
    for (int variant = 0; variant < 4; ++variant) {
        Scenario s = fixtures::base_scenario();
        switch (variant) {
            case 0: break;
            case 1:
                s.attack = fixtures::zda_request(0.012);
                s.policy = SwitchPolicy::triggered;
                s.trigger_target = 3;
                break;
            case 2:
                s.attack = fixtures::covert_ramp();
                s.policy = SwitchPolicy::scheduled;
                s.schedule.schedule = {{2.0, 2}, {4.0, 1}};
                break;
            case 3:
                s = fixtures::replay_scenario();
                s.epsilon_floor_central = 0.02;
                s.omega_bar = 5.0;
                break;
        }
        CAPTURE(variant);
        const Scenario parsed = parse_scenario_text(emit_scenario(s), "roundtrip");
        CHECK(parsed.digest() == s.digest());
    }
}

TEST_CASE("write_traces: row counts and numeric fidelity") {
    Scenario s = fixtures::base_scenario();
    s.horizon = 1.0;
    s.noise.amplitude = 1e-3;
    const RunLog log = run_scenario(s);
    const fs::path dir = fs::temp_directory_path() / "formguard_trace_test";
    fs::remove_all(dir);
    write_traces(log, dir);

    auto count_lines = [](const fs::path& p) {
        std::ifstream in(p);
        std::string line;
        std::size_t n = 0;
        while (std::getline(in, line)) ++n;
        return n;
    };
    // ticks x monitors x axes x components: 51 * (5 + 5 + 2) * 2 (+ header).
    CHECK(count_lines(dir / "residuals.csv") == 51 * 24 + 1);
    CHECK(count_lines(dir / "states.csv") == 51 * 5 * 2 + 1);
    CHECK(count_lines(dir / "events.log") == log.events.size());

    // Values round-trip through the text at >= 12 significant digits.
    std::ifstream in(dir / "states.csv");
    std::string header, first;
    std::getline(in, header);
    std::getline(in, first);
    std::stringstream row(first);
    std::string field;
    std::getline(row, field, ',');  // time
    std::getline(row, field, ',');  // agent
    std::getline(row, field, ',');  // axis
    std::getline(row, field, ',');  // position
    CHECK(std::abs(std::stod(field) - log.ticks[0].x[0](0)) <= 0.0);
    fs::remove_all(dir);
}

TEST_CASE("parse_scenario: missing file gives a ParseError") {
    CHECK_THROWS_AS(parse_scenario("/nonexistent/nowhere.scn"), ParseError);
}
