#include "formguard/scenario_io.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

namespace formguard {

namespace {

constexpr const char* kSections[] = {"agents",    "gains",   "formation", "modes",
                                     "switching", "attack",  "monitors",  "sim"};

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

struct Entry {
    std::string value;
    int line = 0;
    bool used = false;
};

struct Document {
    std::string name;
    std::map<std::string, std::map<std::string, Entry>> sections;
    std::map<std::string, int> section_lines;

    [[noreturn]] void fail(const std::string& msg, int line = 0) const {
        std::ostringstream out;
        out << name;
        if (line > 0) out << ":" << line;
        out << ": " << msg;
        throw ParseError(out.str());
    }
};

Document lex(const std::string& text, const std::string& name) {
    Document doc;
    doc.name = name;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = raw;
        if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') doc.fail("malformed section header", lineno);
            section = trim(line.substr(1, line.size() - 2));
            bool known = false;
            for (const char* s : kSections) known = known || section == s;
            if (!known) doc.fail("unknown section [" + section + "]", lineno);
            if (doc.sections.count(section)) {
                doc.fail("duplicate section [" + section + "]", lineno);
            }
            doc.sections[section];
            doc.section_lines[section] = lineno;
            continue;
        }
        if (section.empty()) doc.fail("content before any section header", lineno);
        auto eq = line.find('=');
        if (eq == std::string::npos) doc.fail("expected key = value", lineno);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) doc.fail("empty key", lineno);
        auto& sec = doc.sections[section];
        if (sec.count(key)) doc.fail("duplicate key '" + key + "' in [" + section + "]", lineno);
        sec[key] = Entry{value, lineno, false};
    }
    for (const char* s : kSections) {
        if (!doc.sections.count(s)) doc.fail("missing required section [" + std::string(s) + "]");
    }
    return doc;
}

class SectionReader {
public:
    SectionReader(Document& doc, const std::string& section)
        : doc_(doc), section_(section), entries_(doc.sections.at(section)) {}

    bool has(const std::string& key) const { return entries_.count(key) > 0; }

    std::string require(const std::string& key) {
        auto it = entries_.find(key);
        if (it == entries_.end()) {
            doc_.fail("[" + section_ + "] missing required key '" + key + "'",
                      doc_.section_lines.at(section_));
        }
        it->second.used = true;
        return it->second.value;
    }
    std::string optional(const std::string& key, const std::string& fallback) {
        auto it = entries_.find(key);
        if (it == entries_.end()) return fallback;
        it->second.used = true;
        return it->second.value;
    }

    double number(const std::string& key) { return to_number(key, require(key)); }
    double number_or(const std::string& key, double fallback) {
        if (!has(key)) return fallback;
        return to_number(key, require(key));
    }
    long integer(const std::string& key) { return to_integer(key, require(key)); }

    std::set<int> int_set(const std::string& key, bool required) {
        std::set<int> out;
        if (!required && !has(key)) return out;
        for (const auto& tok : split_ws(require(key))) {
            out.insert(static_cast<int>(to_integer(key, tok)));
        }
        return out;
    }

    std::array<double, 2> pair(const std::string& key) {
        const auto toks = split_ws(require(key));
        if (toks.size() != 2) {
            doc_.fail("[" + section_ + "] key '" + key + "' needs two numbers",
                      line(key));
        }
        return {to_number(key, toks[0]), to_number(key, toks[1])};
    }

    int line(const std::string& key) const {
        auto it = entries_.find(key);
        return it == entries_.end() ? doc_.section_lines.at(section_) : it->second.line;
    }

    [[noreturn]] void fail(const std::string& key, const std::string& msg) {
        doc_.fail("[" + section_ + "] key '" + key + "': " + msg, line(key));
    }

    void reject_unused() {
        for (const auto& [key, entry] : entries_) {
            if (!entry.used) {
                doc_.fail("unknown key '" + key + "' in [" + section_ + "]", entry.line);
            }
        }
    }

    double to_number(const std::string& key, const std::string& text) {
        try {
            std::size_t used = 0;
            const double v = std::stod(text, &used);
            if (used != text.size()) throw std::invalid_argument("trailing characters");
            return v;
        } catch (const std::exception&) {
            fail(key, "'" + text + "' is not a number");
        }
    }
    long to_integer(const std::string& key, const std::string& text) {
        try {
            std::size_t used = 0;
            const long v = std::stol(text, &used);
            if (used != text.size()) throw std::invalid_argument("trailing characters");
            return v;
        } catch (const std::exception&) {
            fail(key, "'" + text + "' is not an integer");
        }
    }

private:
    Document& doc_;
    std::string section_;
    std::map<std::string, Entry>& entries_;
};

CovertWaveform parse_waveform(SectionReader& sec, const std::string& key) {
    const auto toks = split_ws(sec.require(key));
    if (toks.empty()) sec.fail(key, "expected waveform kind");
    CovertWaveform w;
    if (toks[0] == "ramp" || toks[0] == "step") {
        if (toks.size() != 2) sec.fail(key, toks[0] + " needs one parameter");
        w.kind = toks[0] == "ramp" ? CovertWaveform::Kind::ramp : CovertWaveform::Kind::step;
        w.p1 = sec.to_number(key, toks[1]);
    } else if (toks[0] == "sinusoid") {
        if (toks.size() != 3) sec.fail(key, "sinusoid needs amplitude and frequency");
        w.kind = CovertWaveform::Kind::sinusoid;
        w.p1 = sec.to_number(key, toks[1]);
        w.p2 = sec.to_number(key, toks[2]);
    } else {
        sec.fail(key, "unknown waveform '" + toks[0] + "'");
    }
    return w;
}

Scenario build_scenario(Document& doc) {
    Scenario s;

    SectionReader agents(doc, "agents");
    s.n_agents = static_cast<int>(agents.integer("count"));
    if (s.n_agents < 2) agents.fail("count", "need at least two agents");
    for (int i = 1; i <= s.n_agents; ++i) {
        s.initial_positions.push_back(agents.pair("pos_" + std::to_string(i)));
    }
    agents.reject_unused();

    SectionReader gains(doc, "gains");
    s.gains.alpha = gains.number("alpha");
    s.gains.gamma = gains.number("gamma");
    gains.reject_unused();

    SectionReader formation(doc, "formation");
    for (int i = 1; i <= s.n_agents; ++i) {
        s.formation.setpoints.push_back(formation.pair("ref_" + std::to_string(i)));
    }
    formation.reject_unused();

    SectionReader modes(doc, "modes");
    for (const auto& [key, entry] : doc.sections.at("modes")) {
        if (key.rfind("mode_", 0) != 0) modes.fail(key, "expected mode_<id> keys");
        const int id = static_cast<int>(modes.to_integer(key, key.substr(5)));
        Topology topo;
        topo.n_agents = s.n_agents;
        topo.mode_id = id;
        for (const auto& tok : split_ws(modes.require(key))) {
            const auto dash = tok.find('-');
            if (dash == std::string::npos) modes.fail(key, "edges look like i-j");
            const int a = static_cast<int>(modes.to_integer(key, tok.substr(0, dash)));
            const int b = static_cast<int>(modes.to_integer(key, tok.substr(dash + 1)));
            try {
                topo.add_edge(a, b);
            } catch (const std::exception& e) {
                modes.fail(key, e.what());
            }
        }
        s.modes.emplace(id, std::move(topo));
    }
    modes.reject_unused();

    SectionReader switching(doc, "switching");
    const std::string policy = switching.require("policy");
    if (policy == "none") {
        s.policy = SwitchPolicy::none;
    } else if (policy == "scheduled") {
        s.policy = SwitchPolicy::scheduled;
        for (const auto& tok : split_ws(switching.require("schedule"))) {
            const auto colon = tok.find(':');
            if (colon == std::string::npos) {
                switching.fail("schedule", "entries look like time:mode");
            }
            s.schedule.schedule.emplace_back(
                switching.to_number("schedule", tok.substr(0, colon)),
                static_cast<int>(switching.to_integer("schedule", tok.substr(colon + 1))));
        }
    } else if (policy == "triggered") {
        s.policy = SwitchPolicy::triggered;
        s.trigger_target = static_cast<int>(switching.integer("trigger_target"));
    } else {
        switching.fail("policy", "expected none, scheduled or triggered");
    }
    switching.reject_unused();

    SectionReader attack(doc, "attack");
    const std::string type = attack.require("type");
    if (type == "none") {
        s.attack = std::monostate{};
    } else if (type == "zda") {
        ZdaPlan plan;
        plan.compromised = attack.int_set("compromised", true);
        plan.scale = attack.number("scale");
        plan.designated = static_cast<int>(
            attack.has("designated") ? attack.integer("designated") : 0);
        plan.lambda[0] = attack.number_or("lambda_x", 0.0);
        plan.lambda[1] = attack.number_or("lambda_y", 0.0);
        s.attack = std::move(plan);
    } else if (type == "covert") {
        CovertPlan plan;
        plan.compromised = attack.int_set("compromised", true);
        plan.start_time = attack.number("start");
        plan.waveform[0] = parse_waveform(attack, "waveform_x");
        plan.waveform[1] = parse_waveform(attack, "waveform_y");
        s.attack = std::move(plan);
    } else if (type == "replay") {
        ReplayPlan plan;
        plan.record_window = attack.number("record_window");
        plan.start_time = attack.number("start");
        plan.dos_targets = attack.int_set("dos_targets", true);
        plan.compromised = attack.int_set("compromised", false);
        plan.push[0] = attack.number_or("push_x", 0.0);
        plan.push[1] = attack.number_or("push_y", 0.0);
        s.attack = std::move(plan);
    } else {
        attack.fail("type", "expected none, zda, covert or replay");
    }
    attack.reject_unused();

    SectionReader monitors(doc, "monitors");
    s.detectors = monitors.int_set("detectors", true);
    s.measured_pos = monitors.int_set("measured_positions", true);
    s.measured_vel = monitors.int_set("measured_velocities", false);
    if (monitors.has("epsilon_floor_central")) {
        s.epsilon_floor_central = monitors.number("epsilon_floor_central");
    }
    if (monitors.has("epsilon_floor_local")) {
        s.epsilon_floor_local = monitors.number("epsilon_floor_local");
    }
    if (monitors.has("omega_bar")) s.omega_bar = monitors.number("omega_bar");
    const std::string flag = monitors.optional("include_host_in_detectability", "false");
    if (flag != "true" && flag != "false") {
        monitors.fail("include_host_in_detectability", "expected true or false");
    }
    s.detectability_includes_host = flag == "true";
    monitors.reject_unused();

    SectionReader sim(doc, "sim");
    s.ts = sim.number("ts");
    s.horizon = sim.number("horizon");
    s.noise.amplitude = sim.number("noise_amplitude");
    s.noise.seed = static_cast<std::uint64_t>(sim.integer("seed"));
    sim.reject_unused();

    try {
        s.validate();
    } catch (const std::exception& e) {
        doc.fail(e.what());
    }
    return s;
}

const char* axis_name(int axis) { return axis == 0 ? "x" : "y"; }

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

Scenario parse_scenario_text(const std::string& text, const std::string& name) {
    Document doc = lex(text, name);
    return build_scenario(doc);
}

Scenario parse_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path.string() + ": cannot open file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario_text(buf.str(), path.string());
}

std::string emit_scenario(const Scenario& s) {
    std::ostringstream out;
    out << "[agents]\n";
    out << "count = " << s.n_agents << "\n";
    for (int i = 0; i < s.n_agents; ++i) {
        out << "pos_" << i + 1 << " = " << fmt(s.initial_positions[i][0]) << " "
            << fmt(s.initial_positions[i][1]) << "\n";
    }
    out << "\n[gains]\n";
    out << "alpha = " << fmt(s.gains.alpha) << "\n";
    out << "gamma = " << fmt(s.gains.gamma) << "\n";
    out << "\n[formation]\n";
    for (int i = 0; i < s.n_agents; ++i) {
        out << "ref_" << i + 1 << " = " << fmt(s.formation.setpoints[i][0]) << " "
            << fmt(s.formation.setpoints[i][1]) << "\n";
    }
    out << "\n[modes]\n";
    for (const auto& [id, topo] : s.modes) {
        out << "mode_" << id << " =";
        for (const auto& [a, b] : topo.edges) out << " " << a << "-" << b;
        out << "\n";
    }
    out << "\n[switching]\n";
    switch (s.policy) {
        case SwitchPolicy::none:
            out << "policy = none\n";
            break;
        case SwitchPolicy::scheduled:
            out << "policy = scheduled\n";
            out << "schedule =";
            for (const auto& [t, m] : s.schedule.schedule) out << " " << fmt(t) << ":" << m;
            out << "\n";
            break;
        case SwitchPolicy::triggered:
            out << "policy = triggered\n";
            out << "trigger_target = " << s.trigger_target << "\n";
            break;
    }
    out << "\n[attack]\n";
    if (const auto* zda = std::get_if<ZdaPlan>(&s.attack)) {
        out << "type = zda\n";
        out << "compromised =";
        for (int i : zda->compromised) out << " " << i;
        out << "\n";
        out << "scale = " << fmt(zda->scale) << "\n";
        if (zda->designated > 0) out << "designated = " << zda->designated << "\n";
        if (zda->lambda[0] > 0.0) out << "lambda_x = " << fmt(zda->lambda[0]) << "\n";
        if (zda->lambda[1] > 0.0) out << "lambda_y = " << fmt(zda->lambda[1]) << "\n";
    } else if (const auto* covert = std::get_if<CovertPlan>(&s.attack)) {
        out << "type = covert\n";
        out << "compromised =";
        for (int i : covert->compromised) out << " " << i;
        out << "\n";
        out << "start = " << fmt(covert->start_time) << "\n";
        for (int axis = 0; axis < kAxes; ++axis) {
            out << "waveform_" << axis_name(axis) << " = ";
            const auto& w = covert->waveform[axis];
            switch (w.kind) {
                case CovertWaveform::Kind::ramp:
                    out << "ramp " << fmt(w.p1);
                    break;
                case CovertWaveform::Kind::step:
                    out << "step " << fmt(w.p1);
                    break;
                case CovertWaveform::Kind::sinusoid:
                    out << "sinusoid " << fmt(w.p1) << " " << fmt(w.p2);
                    break;
            }
            out << "\n";
        }
    } else if (const auto* replay = std::get_if<ReplayPlan>(&s.attack)) {
        out << "type = replay\n";
        out << "record_window = " << fmt(replay->record_window) << "\n";
        out << "start = " << fmt(replay->start_time) << "\n";
        out << "dos_targets =";
        for (int i : replay->dos_targets) out << " " << i;
        out << "\n";
        if (!replay->compromised.empty()) {
            out << "compromised =";
            for (int i : replay->compromised) out << " " << i;
            out << "\n";
        }
        out << "push_x = " << fmt(replay->push[0]) << "\n";
        out << "push_y = " << fmt(replay->push[1]) << "\n";
    } else {
        out << "type = none\n";
    }
    out << "\n[monitors]\n";
    out << "detectors =";
    for (int d : s.detectors) out << " " << d;
    out << "\n";
    out << "measured_positions =";
    for (int i : s.measured_pos) out << " " << i;
    out << "\n";
    out << "measured_velocities =";
    for (int i : s.measured_vel) out << " " << i;
    out << "\n";
    if (s.epsilon_floor_central) {
        out << "epsilon_floor_central = " << fmt(*s.epsilon_floor_central) << "\n";
    }
    if (s.epsilon_floor_local) {
        out << "epsilon_floor_local = " << fmt(*s.epsilon_floor_local) << "\n";
    }
    if (s.omega_bar) out << "omega_bar = " << fmt(*s.omega_bar) << "\n";
    out << "include_host_in_detectability = "
        << (s.detectability_includes_host ? "true" : "false") << "\n";
    out << "\n[sim]\n";
    out << "ts = " << fmt(s.ts) << "\n";
    out << "horizon = " << fmt(s.horizon) << "\n";
    out << "noise_amplitude = " << fmt(s.noise.amplitude) << "\n";
    out << "seed = " << s.noise.seed << "\n";
    return out.str();
}

void write_traces(const RunLog& log, const std::filesystem::path& dir,
                  const std::string& prefix) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);

    {
        std::ofstream out(dir / (prefix + "residuals.csv"));
        out << "time,monitor_id,axis,component,residual,threshold\n";
        for (const auto& tick : log.ticks) {
            for (std::size_t m = 0; m < log.monitor_ids.size(); ++m) {
                for (int axis = 0; axis < kAxes; ++axis) {
                    const auto& r = tick.residuals[m][axis];
                    const auto& th = tick.thresholds[m][axis];
                    for (Eigen::Index j = 0; j < r.size(); ++j) {
                        out << fmt(tick.time) << "," << log.monitor_ids[m] << ","
                            << axis_name(axis) << "," << log.component_names[m][j] << ","
                            << fmt(r(j)) << "," << fmt(th(j)) << "\n";
                    }
                }
            }
        }
    }
    {
        std::ofstream out(dir / (prefix + "states.csv"));
        out << "time,agent,axis,position,velocity,mode\n";
        const int n = log.ticks.empty() ? 0 : static_cast<int>(log.ticks[0].x[0].size() / 2);
        for (const auto& tick : log.ticks) {
            for (int agent = 1; agent <= n; ++agent) {
                for (int axis = 0; axis < kAxes; ++axis) {
                    out << fmt(tick.time) << "," << agent << "," << axis_name(axis) << ","
                        << fmt(tick.x[axis](agent - 1)) << ","
                        << fmt(tick.x[axis](n + agent - 1)) << "," << tick.mode << "\n";
                }
            }
        }
    }
    {
        std::ofstream out(dir / (prefix + "events.log"));
        for (const auto& e : log.events) {
            std::size_t mi = 0;
            while (mi < log.monitor_ids.size() && log.monitor_ids[mi] != e.monitor_id) ++mi;
            out << "event time=" << fmt(e.time) << " monitor=" << e.monitor_id
                << " axis=" << axis_name(e.axis)
                << " component=" << log.component_names[mi][e.component]
                << " residual=" << fmt(e.residual) << " threshold=" << fmt(e.threshold)
                << "\n";
        }
    }
    {
        std::ofstream out(dir / (prefix + "summary.txt"));
        out << "scenario_digest = " << log.scenario_digest << "\n";
        out << "runlog_digest = " << log.digest() << "\n";
        out << "seed = " << log.seed << "\n";
        out << "ticks = " << log.ticks.size() << "\n";
        out << "events = " << log.events.size() << "\n";
        out << format_report(detection_report(log));
    }
}

}  // namespace formguard
