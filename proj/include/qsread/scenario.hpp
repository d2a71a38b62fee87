#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qsread/ed.hpp"

namespace qsread {

inline constexpr const char* version_string = "qsread 0.1.0";
inline constexpr int config_format_version = 1;

/// Hilbert dimension a spec would allocate, for pre-flight budget checks.
long hilbert_dimension(const SystemSpec& spec, Part part = Part::full);

/// Parsed and resolved scenario file (JSON). Tolerance names are restricted to
/// the documented set; prerequisites are auto-inserted into the task list.
struct ScenarioConfig {
    SystemSpec system;           // coupling.lambda holds the first sweep value
    std::vector<double> lambdas; // sweep (single value for plain runs)
    double grid_beta = 0.0;
    Statistics grid_statistics = Statistics::bosonic;
    int grid_N = 0;
    std::vector<std::string> tasks;
    std::vector<std::string> auto_inserted;
    FlatBathMode bath_mode = FlatBathMode::paper_literal;
    bool tail_correction = true;
    bool convergence_check = false;
    std::map<std::string, double> tolerances; // resolved with defaults
    std::array<double, 4> wick_times{};
    bool wick_times_given = false;
    int continuation_order = 6;
    double continuation_eta = 1e-3;
    double continuation_window_lo = 0.5, continuation_window_hi = 1.5;
    int continuation_points = 101;
    std::filesystem::path output_dir;
    long seed = 0; // reserved; pipeline is deterministic
    std::string echo; // resolved config as JSON text, embedded in provenance
};

const std::map<std::string, double>& default_tolerances();

ScenarioConfig parse_config(const std::filesystem::path& path);

struct ValidationReport {
    std::vector<std::string> errors; // empty means valid
    std::vector<std::string> auto_inserted_tasks;
};

/// Full schema and invariant check without execution.
ValidationReport validate_config(const std::filesystem::path& path);

struct RunOverrides {
    std::optional<std::filesystem::path> output_dir;
    int threads = 0; // 0 = leave unchanged
    std::map<std::string, double> tolerances;
};

/// Executes the scenario. Exit status: 0 all comparisons pass, 2 a comparison
/// failed, 1 execution error (message on stderr).
int run_scenario(const std::filesystem::path& config_path, const RunOverrides& overrides = {});

} // namespace qsread
