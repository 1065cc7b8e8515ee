#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "invar/scenario.hpp"

namespace invar {

// Exit codes shared by the library entry points and the CLI.
inline constexpr int kExitOk = 0;
inline constexpr int kExitSafetyViolation = 2;
inline constexpr int kExitRunError = 3;
inline constexpr int kExitInvalid = 4;

struct RunOptions {
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<double> horizon;
    std::optional<double> dt;
    bool no_safety = false;
    bool plots = false;
};

// Prints every load-time check with pass/fail and measured constants.
int cmd_validate(const std::string& path, std::ostream& report);

// Runs one scenario, writing trajectory.csv, events.csv and summary.txt under
// the output directory. Nonzero exit on safety violation or error.
int cmd_run(const std::string& path, const RunOptions& opts, std::ostream& report);

// Runs every scenario matching the glob (a '*'/'?' pattern on the filename),
// optionally across a worker pool, and writes an aggregate CSV. Per-scenario
// failures are isolated into their aggregate rows.
int cmd_batch(const std::string& pattern, int jobs, const RunOptions& opts, std::ostream& report);

// Helpers shared with the tests.
std::string default_output_dir(const ScenarioConfig& cfg, const RunOptions& opts);
void write_run_artifacts(const RunResult& result, const RunSpec& spec, const std::string& dir,
                         bool plots);
std::string summary_text(const RunSummary& s);
std::string aggregate_header();
std::string aggregate_row(const RunSummary& s);
std::vector<std::string> expand_glob(const std::string& pattern);

} // namespace invar
