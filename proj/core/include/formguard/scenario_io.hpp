#pragma once

#include <filesystem>
#include <string>

#include "formguard/orchestrator.hpp"

namespace formguard {

/// Parse and validate a scenario file. Diagnostics name the file, section and
/// key that caused the rejection; unknown sections or keys are errors.
Scenario parse_scenario(const std::filesystem::path& path);

/// Same parser over an in-memory document ("name" only labels diagnostics).
Scenario parse_scenario_text(const std::string& text, const std::string& name = "<memory>");

/// Canonical text form; parse(emit(s)) reproduces an identical digest.
std::string emit_scenario(const Scenario& s);

/// Write residuals.csv, states.csv, events.log and summary.txt into dir.
/// An optional prefix ("nominal_") keeps paired traces side by side.
void write_traces(const RunLog& log, const std::filesystem::path& dir,
                  const std::string& prefix = "");

}  // namespace formguard
