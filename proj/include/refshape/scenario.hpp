#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "refshape/csv.hpp"
#include "refshape/gcode.hpp"
#include "refshape/lqr.hpp"
#include "refshape/metrics.hpp"
#include "refshape/refopt.hpp"

namespace refshape {

/// Scenario file problem: message carries the offending field's location.
struct ScenarioError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A print job defined in space: toolpath plus force-vs-arc-length schedule.
struct PrintJob {
    PrintPath path;
    ForceSchedule schedule;
};

struct SteadyStateStart {};  // start from the steady state of the first sample

/// One self-contained experiment: model, weights, reference source, initial
/// state policy, shaping parameters and output location.
struct Scenario {
    StateSpace system;
    LqrWeights weights;
    std::variant<ReferenceProfile, PrintJob> reference;
    std::variant<SteadyStateStart, Vector> initial_state;
    double smoothness_weight = 1e-3;
    std::vector<int> hold_lengths = {1, 2, 5};
    BoxBounds bounds;
    std::string output_dir = "out";

    /// The time-domain reference this scenario tracks.
    ReferenceProfile reference_profile() const;
    Vector resolve_x0() const;
};

Scenario load_scenario(const std::filesystem::path& file);

struct RunOptions {
    std::optional<std::string> output_dir;
    std::optional<std::vector<int>> hold_lengths;
    std::optional<double> smoothness_weight;
    bool gcode_only = false;  // write only the .gcode artifacts
};

struct RunOutcome {
    bool all_optimal = true;
    std::vector<MetricsReport> reports;
    std::vector<std::filesystem::path> files;
    std::string table;  // aligned text metrics table
    std::string message;
};

/// Execute a scenario: unshaped baseline plus one shaped run per hold
/// length; writes trace CSVs, G-code (for print-defined scenarios) and the
/// combined metrics table.
RunOutcome run_scenario(const Scenario& scenario, const RunOptions& options = {});

/// Trace CSV layout: k, t, r_F, r_F_mod, F, u, x_1..x_n with N+1 rows.
CsvTable build_trace(const StateSpace& sys, const Trajectory& traj,
                     const ReferenceProfile& refs, const ReferenceProfile& modified);

/// Recheck F = C x on every row of a trace read back from disk.
double max_output_inconsistency(const CsvTable& trace, const StateSpace& sys);

}  // namespace refshape
