#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "darwinize/config.hpp"
#include "darwinize/measurement.hpp"

namespace darwinize {

enum class Command { dynamics, partial_info, correlations, redundancy_series, nonmarkov };

// "dynamics", "partial-info", "correlations", "redundancy-series", "nonmarkov".
Command parse_command(std::string_view name);
std::string_view to_string(Command command);

struct RunRequest {
    Command command = Command::dynamics;
    std::filesystem::path config_path;
    std::filesystem::path out_dir;
    ConfigEntries entries;               // file entries with overrides applied
    std::vector<std::string> overrides;  // as given, for the manifest
    int threads = 1;                     // 0 = hardware concurrency
};

struct OutputFile {
    std::string name;
    std::size_t rows = 0;
};

// Final-time scalars of one fragment kind: the f = 1 correlation split and
// R_δ at t_max.
struct FinalScalars {
    FragmentKind kind = FragmentKind::subenvironments;
    double t = 0.0;
    CorrelationSplit split;
    RedundancyResult redundancy;
};

struct RunResult {
    RunConfig config;
    std::vector<OutputFile> outputs;
    std::vector<FinalScalars> final;  // filled when requested
    double wall_seconds = 0.0;
};

// Resolves the configuration, runs the command, writes its CSV files and
// manifest.txt into out_dir.
RunResult run_experiment(const RunRequest& request, bool with_final = false);

struct SweepOutcome {
    std::vector<RunResult> runs;  // in value order
};

// One run per value into out_dir/<key>=<value>/, at most `threads` at a time,
// and sweep_summary.csv in out_dir. A failure stops new runs from starting;
// runs already in flight finish and the summary covers every completed run.
// The first failure is rethrown after the summary is written.
SweepOutcome run_sweep(const RunRequest& request, const std::string& key, const std::vector<std::string>& values);

// Splits `v1,v2,...`; throws ConfigError on an empty list or element.
std::vector<std::string> split_values(const std::string& text);

}  // namespace darwinize
