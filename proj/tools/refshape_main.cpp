// Command line front end: scenario execution, fixture verification, G-code
// emission and trace metrics.
//
// Exit codes: 0 success, 1 usage error, 2 solver failure, 3 invalid scenario.

#include <cstdio>
#include <optional>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "refshape/fixture.hpp"
#include "refshape/scenario.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitSolver = 2;
constexpr int kExitScenario = 3;

struct CommonFlags {
    std::string out_dir;
    std::vector<int> hold_lengths;
    double smoothness = -1.0;
};

refshape::RunOptions to_options(const CommonFlags& flags, bool gcode_only) {
    refshape::RunOptions options;
    if (!flags.out_dir.empty()) options.output_dir = flags.out_dir;
    if (!flags.hold_lengths.empty()) options.hold_lengths = flags.hold_lengths;
    if (flags.smoothness >= 0.0) options.smoothness_weight = flags.smoothness;
    options.gcode_only = gcode_only;
    return options;
}

int run_pipeline(const std::string& scenario_file, const CommonFlags& flags,
                 bool gcode_only) {
    std::optional<refshape::Scenario> loaded;
    try {
        loaded = refshape::load_scenario(scenario_file);
    } catch (const refshape::ScenarioError& e) {
        std::cerr << "invalid scenario: " << e.what() << "\n";
        return kExitScenario;
    }
    const refshape::Scenario& scenario = *loaded;
    if (gcode_only && !std::holds_alternative<refshape::PrintJob>(scenario.reference)) {
        std::cerr << "invalid scenario: G-code emission needs a 'print' reference "
                     "(a toolpath with a force schedule)\n";
        return kExitScenario;
    }
    try {
        const refshape::RunOutcome outcome =
            refshape::run_scenario(scenario, to_options(flags, gcode_only));
        if (!gcode_only) {
            std::cout << outcome.table;
        }
        for (const auto& file : outcome.files) {
            std::cout << "wrote " << file.string() << "\n";
        }
        if (!outcome.all_optimal) {
            std::cerr << "solver failure:\n" << outcome.message;
            return kExitSolver;
        }
        return kExitOk;
    } catch (const refshape::ScenarioError& e) {
        std::cerr << "invalid scenario: " << e.what() << "\n";
        return kExitScenario;
    } catch (const std::exception& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return kExitSolver;
    }
}

int run_metrics(const std::string& trace_file, const std::string& ref_file) {
    try {
        const refshape::CsvTable trace = refshape::read_csv(trace_file);
        const refshape::CsvTable ref = refshape::read_csv(ref_file);
        const std::size_t f_col = trace.column("F");
        const std::size_t r_col = ref.column("r_F");
        if (trace.rows.size() != ref.rows.size()) {
            std::cerr << "metrics: trace has " << trace.rows.size() << " rows, reference "
                      << ref.rows.size() << "\n";
            return kExitUsage;
        }
        std::vector<double> force, reference;
        force.reserve(trace.rows.size());
        reference.reserve(ref.rows.size());
        for (std::size_t k = 0; k < trace.rows.size(); ++k) {
            force.push_back(trace.rows[k][f_col]);
            reference.push_back(ref.rows[k][r_col]);
        }
        double dt = 0.01;
        if (trace.rows.size() >= 2) {
            const std::size_t t_col = trace.column("t");
            dt = trace.rows[1][t_col] - trace.rows[0][t_col];
        }
        std::size_t step_index = 0;
        for (std::size_t k = 1; k < reference.size(); ++k) {
            if (reference[k] != reference[k - 1]) step_index = k;
        }
        const double err = refshape::rmse(force, reference);
        const auto settle =
            refshape::settling_time(force, reference, dt, step_index);
        std::printf("RMSE (N): %.6g\n", err);
        if (settle) {
            std::printf("t_5%% (s): %.6g (step at sample %zu)\n", *settle, step_index);
        } else {
            std::printf("t_5%% (s): never settles (step at sample %zu)\n", step_index);
        }
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "metrics: " << e.what() << "\n";
        return kExitUsage;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"LQR force tracking with shaped references for extrusion printing"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::string scenario_file;
    std::string trace_file, ref_file;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--out", flags.out_dir, "output directory (overrides the scenario)");
        cmd->add_option("--nh", flags.hold_lengths, "hold lengths to run")
            ->delimiter(',');
        cmd->add_option("--qv", flags.smoothness, "smoothness weight Q_v")
            ->check(CLI::NonNegativeNumber);
    };

    CLI::App* run_cmd = app.add_subcommand("run", "run a scenario end to end");
    run_cmd->add_option("scenario", scenario_file, "scenario JSON file")->required();
    add_common(run_cmd);

    CLI::App* verify_cmd =
        app.add_subcommand("verify-fixture", "re-derive the bundled model's controller");

    CLI::App* gcode_cmd =
        app.add_subcommand("gcode", "emit G-code only (print-defined scenarios)");
    gcode_cmd->add_option("scenario", scenario_file, "scenario JSON file")->required();
    add_common(gcode_cmd);

    CLI::App* metrics_cmd = app.add_subcommand("metrics", "tracking metrics from trace CSVs");
    metrics_cmd->add_option("trace", trace_file, "trace CSV with an F column")->required();
    metrics_cmd->add_option("reference", ref_file, "CSV with an r_F column")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? kExitOk : kExitUsage;
    }

    if (run_cmd->parsed()) return run_pipeline(scenario_file, flags, false);
    if (gcode_cmd->parsed()) return run_pipeline(scenario_file, flags, true);
    if (metrics_cmd->parsed()) return run_metrics(trace_file, ref_file);
    if (verify_cmd->parsed()) {
        const refshape::FixtureReport report = refshape::verify_fixture();
        std::cout << report.to_string();
        return kExitOk;
    }
    return kExitUsage;
}
