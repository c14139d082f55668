#include "refshape/scenario.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace refshape {

namespace {

using nlohmann::json;

[[noreturn]] void bad_field(const std::string& path, const std::string& what) {
    throw ScenarioError(path + ": " + what);
}

const json& require_key(const json& j, const std::string& key, const std::string& path) {
    if (!j.is_object() || !j.contains(key)) {
        bad_field(path + "." + key, "missing");
    }
    return j.at(key);
}

double as_number(const json& j, const std::string& path) {
    if (!j.is_number()) bad_field(path, "expected a number");
    return j.get<double>();
}

Matrix as_matrix(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) bad_field(path, "expected a non-empty array of rows");
    if (!j.front().is_array()) bad_field(path, "expected nested arrays (rows of numbers)");
    const std::size_t cols = j.front().size();
    Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < j.size(); ++r) {
        const json& row = j.at(r);
        if (!row.is_array() || row.size() != cols) {
            bad_field(path, "row " + std::to_string(r) + " has inconsistent length");
        }
        for (std::size_t c = 0; c < cols; ++c) {
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                as_number(row.at(c), path + "[" + std::to_string(r) + "][" +
                                         std::to_string(c) + "]");
        }
    }
    return m;
}

Vector as_vector(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) bad_field(path, "expected a non-empty array of numbers");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        v[static_cast<Eigen::Index>(i)] =
            as_number(j.at(i), path + "[" + std::to_string(i) + "]");
    }
    return v;
}

Vector optional_bound(const json& j, const char* key, const std::string& path) {
    if (!j.contains(key)) return Vector();
    return as_vector(j.at(key), path + "." + key);
}

ReferenceProfile parse_profile(const json& j, const std::string& path) {
    const Vector values = as_vector(require_key(j, "values", path), path + ".values");
    const double dt = as_number(require_key(j, "dt", path), path + ".dt");
    std::vector<Vector> samples;
    samples.reserve(static_cast<std::size_t>(values.size()));
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        samples.push_back(Vector::Constant(1, values[i]));
    }
    try {
        return ReferenceProfile(std::move(samples), dt);
    } catch (const std::exception& e) {
        bad_field(path, e.what());
    }
}

PrintJob parse_print(const json& j, const std::string& path) {
    const json& segs = require_key(j, "segments", path);
    if (!segs.is_array() || segs.empty()) {
        bad_field(path + ".segments", "expected a non-empty array");
    }
    std::vector<PathSegment> segments;
    for (std::size_t i = 0; i < segs.size(); ++i) {
        const std::string spath = path + ".segments[" + std::to_string(i) + "]";
        const json& seg = segs.at(i);
        const Vector start = as_vector(require_key(seg, "start", spath), spath + ".start");
        const Vector end = as_vector(require_key(seg, "end", spath), spath + ".end");
        if (start.size() != 2 || end.size() != 2) {
            bad_field(spath, "start/end must be [x, y] pairs");
        }
        const double speed = as_number(require_key(seg, "speed", spath), spath + ".speed");
        segments.push_back({{start[0], start[1]}, {end[0], end[1]}, speed});
    }
    const double z = j.contains("z") ? as_number(j.at("z"), path + ".z") : 0.0;

    const json& sched = require_key(j, "schedule", path);
    if (!sched.is_array() || sched.empty()) {
        bad_field(path + ".schedule", "expected a non-empty array");
    }
    std::vector<ForceSchedule::Entry> entries;
    for (std::size_t i = 0; i < sched.size(); ++i) {
        const std::string epath = path + ".schedule[" + std::to_string(i) + "]";
        const json& e = sched.at(i);
        entries.push_back(
            {as_number(require_key(e, "distance", epath), epath + ".distance"),
             as_number(require_key(e, "force", epath), epath + ".force")});
    }

    try {
        return PrintJob{PrintPath(std::move(segments), z), ForceSchedule(std::move(entries))};
    } catch (const std::exception& e) {
        bad_field(path, e.what());
    }
}

std::string label_for(int hold_length) {
    return hold_length == 0 ? "unshaped" : "N_h=" + std::to_string(hold_length);
}

std::string file_tag(int hold_length) {
    return hold_length == 0 ? "unshaped" : "nh" + std::to_string(hold_length);
}

}  // namespace

ReferenceProfile Scenario::reference_profile() const {
    if (std::holds_alternative<ReferenceProfile>(reference)) {
        return std::get<ReferenceProfile>(reference);
    }
    const PrintJob& job = std::get<PrintJob>(reference);
    return schedule_to_reference(job.schedule, job.path, system.dt);
}

Vector Scenario::resolve_x0() const {
    if (std::holds_alternative<Vector>(initial_state)) {
        return std::get<Vector>(initial_state);
    }
    const ReferenceProfile refs = reference_profile();
    return steady_state_target(system, refs.values.front()).x;
}

Scenario load_scenario(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) {
        throw ScenarioError("cannot open scenario file " + file.string());
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ScenarioError(file.string() + ": " + e.what());
    }

    const json& jsys = require_key(doc, "system", "scenario");
    Matrix A = as_matrix(require_key(jsys, "A", "scenario.system"), "scenario.system.A");
    Matrix B = as_matrix(require_key(jsys, "B", "scenario.system"), "scenario.system.B");
    Matrix C = as_matrix(require_key(jsys, "C", "scenario.system"), "scenario.system.C");
    const double dt = as_number(require_key(jsys, "dt", "scenario.system"), "scenario.system.dt");

    const json& jw = require_key(doc, "weights", "scenario");
    Matrix Q = as_matrix(require_key(jw, "Q", "scenario.weights"), "scenario.weights.Q");
    Matrix R = as_matrix(require_key(jw, "R", "scenario.weights"), "scenario.weights.R");

    std::optional<StateSpace> system;
    std::optional<LqrWeights> weights;
    try {
        system.emplace(std::move(A), std::move(B), std::move(C), dt);
    } catch (const std::exception& e) {
        bad_field("scenario.system", e.what());
    }
    try {
        weights.emplace(std::move(Q), std::move(R));
    } catch (const std::exception& e) {
        bad_field("scenario.weights", e.what());
    }

    const json& jref = require_key(doc, "reference", "scenario");
    const bool has_profile = jref.contains("profile");
    const bool has_print = jref.contains("print");
    if (has_profile == has_print) {
        bad_field("scenario.reference", "specify exactly one of 'profile' or 'print'");
    }

    Scenario scenario{std::move(*system),
                      std::move(*weights),
                      ReferenceProfile::constant(-1.0, 1, dt),  // replaced below
                      SteadyStateStart{},
                      1e-3,
                      {1, 2, 5},
                      BoxBounds{},
                      "out"};
    if (has_profile) {
        scenario.reference = parse_profile(jref.at("profile"), "scenario.reference.profile");
        const auto& profile = std::get<ReferenceProfile>(scenario.reference);
        if (profile.dt != scenario.system.dt) {
            bad_field("scenario.reference.profile.dt", "must match scenario.system.dt");
        }
    } else {
        scenario.reference = parse_print(jref.at("print"), "scenario.reference.print");
    }

    if (doc.contains("x0")) {
        const json& jx0 = doc.at("x0");
        if (jx0.is_string()) {
            if (jx0.get<std::string>() != "steady_state_of_first_ref") {
                bad_field("scenario.x0",
                          "unknown policy '" + jx0.get<std::string>() +
                              "' (use \"steady_state_of_first_ref\" or a numeric vector)");
            }
            scenario.initial_state = SteadyStateStart{};
        } else {
            Vector x0 = as_vector(jx0, "scenario.x0");
            if (x0.size() != scenario.system.state_dim()) {
                bad_field("scenario.x0", "wrong dimension");
            }
            scenario.initial_state = std::move(x0);
        }
    }

    if (doc.contains("qp")) {
        const json& jqp = doc.at("qp");
        if (jqp.contains("Q_v")) {
            scenario.smoothness_weight = as_number(jqp.at("Q_v"), "scenario.qp.Q_v");
            if (scenario.smoothness_weight < 0.0) {
                bad_field("scenario.qp.Q_v", "must be nonnegative");
            }
        }
        if (jqp.contains("N_h")) {
            const json& jnh = jqp.at("N_h");
            if (!jnh.is_array() || jnh.empty()) {
                bad_field("scenario.qp.N_h", "expected a non-empty array of integers");
            }
            scenario.hold_lengths.clear();
            for (std::size_t i = 0; i < jnh.size(); ++i) {
                const double v = as_number(jnh.at(i), "scenario.qp.N_h[" + std::to_string(i) + "]");
                if (v < 1.0 || v != std::floor(v)) {
                    bad_field("scenario.qp.N_h[" + std::to_string(i) + "]",
                              "hold lengths must be integers >= 1");
                }
                scenario.hold_lengths.push_back(static_cast<int>(v));
            }
        }
        if (jqp.contains("bounds")) {
            const json& jb = jqp.at("bounds");
            if (!jb.is_object()) bad_field("scenario.qp.bounds", "expected an object");
            BoxBounds b;
            b.u_min = optional_bound(jb, "u_min", "scenario.qp.bounds");
            b.u_max = optional_bound(jb, "u_max", "scenario.qp.bounds");
            b.r_min = optional_bound(jb, "r_min", "scenario.qp.bounds");
            b.r_max = optional_bound(jb, "r_max", "scenario.qp.bounds");
            b.x_min = optional_bound(jb, "x_min", "scenario.qp.bounds");
            b.x_max = optional_bound(jb, "x_max", "scenario.qp.bounds");
            try {
                b.validate(scenario.system.state_dim(), scenario.system.input_dim(),
                           scenario.system.output_dim());
            } catch (const std::exception& e) {
                bad_field("scenario.qp.bounds", e.what());
            }
            scenario.bounds = std::move(b);
        } else {
            scenario.bounds = BoxBounds::defaults(scenario.system);
        }
    } else {
        scenario.bounds = BoxBounds::defaults(scenario.system);
    }

    if (doc.contains("outputs")) {
        if (!doc.at("outputs").is_string()) bad_field("scenario.outputs", "expected a string");
        scenario.output_dir = doc.at("outputs").get<std::string>();
    }
    return scenario;
}

CsvTable build_trace(const StateSpace& sys, const Trajectory& traj,
                     const ReferenceProfile& refs, const ReferenceProfile& modified) {
    const std::size_t N = refs.size();
    CsvTable table;
    table.header = {"k", "t", "r_F", "r_F_mod", "F", "u"};
    for (Eigen::Index i = 0; i < sys.state_dim(); ++i) {
        table.header.push_back("x_" + std::to_string(i + 1));
    }
    // Row k pairs F_k with the reference sample whose target produced it;
    // row 0 shows the first sample, the final input repeats the held value.
    for (std::size_t k = 0; k <= N; ++k) {
        std::vector<double> row;
        row.push_back(static_cast<double>(k));
        row.push_back(static_cast<double>(k) * traj.dt);
        const std::size_t ref_idx = k == 0 ? 0 : k - 1;
        row.push_back(refs.values[ref_idx][0]);
        row.push_back(modified.values[ref_idx][0]);
        row.push_back(traj.outputs[k][0]);
        row.push_back(traj.inputs[std::min(k, N - 1)][0]);
        for (Eigen::Index i = 0; i < sys.state_dim(); ++i) {
            row.push_back(traj.states[k][i]);
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

double max_output_inconsistency(const CsvTable& trace, const StateSpace& sys) {
    const std::size_t f_col = trace.column("F");
    const std::size_t x0_col = trace.column("x_1");
    double worst = 0.0;
    for (const std::vector<double>& row : trace.rows) {
        Vector x(sys.state_dim());
        for (Eigen::Index i = 0; i < sys.state_dim(); ++i) {
            x[i] = row[x0_col + static_cast<std::size_t>(i)];
        }
        // scaled by the row's output magnitude: the columns carry 9
        // significant digits, so the absolute gap grows with the signal
        const double gap = std::abs((sys.C * x)[0] - row[f_col]);
        worst = std::max(worst, gap / std::max(1.0, std::abs(row[f_col])));
    }
    return worst;
}

RunOutcome run_scenario(const Scenario& scenario, const RunOptions& options) {
    namespace fs = std::filesystem;

    const std::vector<int> hold_lengths =
        options.hold_lengths.value_or(scenario.hold_lengths);
    const double smoothness =
        options.smoothness_weight.value_or(scenario.smoothness_weight);
    const fs::path out_dir = options.output_dir.value_or(scenario.output_dir);
    if (hold_lengths.empty()) {
        throw ScenarioError("scenario.qp.N_h: need at least one hold length");
    }

    const ReferenceProfile refs = scenario.reference_profile();
    const LqrDesign design = solve_dare(scenario.system, scenario.weights);
    const Vector x0 = scenario.resolve_x0();
    const std::size_t N = refs.size();

    fs::create_directories(out_dir);

    RunOutcome outcome;
    const PrintJob* job = std::get_if<PrintJob>(&scenario.reference);

    // command trace for settling: the reference as a function of wall time
    std::vector<double> command(N + 1);
    for (std::size_t k = 0; k <= N; ++k) {
        command[k] = refs.values[std::min(k, N - 1)][0];
    }
    std::size_t step_index = 0;
    for (std::size_t k = 1; k <= N; ++k) {
        if (command[k] != command[k - 1]) step_index = k;
    }

    auto evaluate = [&](const std::string& label, const Trajectory& traj) {
        MetricsReport report;
        report.label = label;
        report.horizon = N;
        report.dt = refs.dt;
        std::vector<double> force(N + 1), target(N + 1);
        for (std::size_t k = 0; k <= N; ++k) {
            force[k] = traj.outputs[k][0];
            target[k] = refs.values[k == 0 ? 0 : k - 1][0];
        }
        report.rmse = rmse(std::vector<double>(force.begin() + 1, force.end()),
                           std::vector<double>(target.begin() + 1, target.end()));
        report.settling_time = settling_time(force, command, refs.dt, step_index);
        return report;
    };

    auto emit_artifacts = [&](int tag, const Trajectory& traj,
                              const ReferenceProfile& modified) {
        if (!options.gcode_only) {
            const fs::path trace_file = out_dir / ("trace_" + file_tag(tag) + ".csv");
            write_csv(trace_file, build_trace(scenario.system, traj, refs, modified));
            outcome.files.push_back(trace_file);
        }
        if (job != nullptr) {
            const fs::path gcode_file = out_dir / (file_tag(tag) + ".gcode");
            const GcodeProgram program =
                emit_gcode(job->path, modified, std::max(tag, 1));
            std::ofstream out(gcode_file, std::ios::binary);
            out << program.text();
            outcome.files.push_back(gcode_file);
        }
    };

    // unshaped baseline
    const Trajectory baseline = simulate_closed_loop(design, x0, refs);
    outcome.reports.push_back(evaluate(label_for(0), baseline));
    emit_artifacts(0, baseline, refs);

    for (const int nh : hold_lengths) {
        RefOptProblem problem{scenario.system, design, refs, x0,
                              smoothness,      nh,     scenario.bounds};
        const RefOptResult result = solve(problem);
        if (result.status != SolverStatus::optimal) {
            outcome.all_optimal = false;
            outcome.message += label_for(nh) + ": " + to_string(result.status) +
                               (result.message.empty() ? "" : " (" + result.message + ")") +
                               "\n";
        }
        const Trajectory shaped = simulate_closed_loop(design, x0, result.modified);
        outcome.reports.push_back(evaluate(label_for(nh), shaped));
        emit_artifacts(nh, shaped, result.modified);
    }

    outcome.table = format_metrics_table(outcome.reports);
    if (!options.gcode_only) {
        const fs::path table_file = out_dir / "metrics.txt";
        std::ofstream table_out(table_file, std::ios::binary);
        table_out << outcome.table;
        outcome.files.push_back(table_file);

        CsvTable metrics_table;
        metrics_table.header = {"run", "rmse", "rmse_from_step", "settling_time", "horizon",
                                "dt"};
        // numeric run id: 0 = unshaped, otherwise the hold length
        std::vector<int> tags = {0};
        tags.insert(tags.end(), hold_lengths.begin(), hold_lengths.end());
        for (std::size_t i = 0; i < outcome.reports.size(); ++i) {
            const MetricsReport& r = outcome.reports[i];
            const fs::path trace_file = out_dir / ("trace_" + file_tag(tags[i]) + ".csv");
            // from-step window uses the same pairing, rows step_index..N
            double rmse_from_step = r.rmse;
            {
                const CsvTable trace = read_csv(trace_file);
                const std::size_t fc = trace.column("F");
                const std::size_t rc = trace.column("r_F");
                std::vector<double> f, t;
                for (std::size_t k = std::max<std::size_t>(step_index, 1);
                     k < trace.rows.size(); ++k) {
                    f.push_back(trace.rows[k][fc]);
                    t.push_back(trace.rows[k][rc]);
                }
                if (!f.empty()) rmse_from_step = rmse(f, t);
            }
            metrics_table.rows.push_back({static_cast<double>(tags[i]), r.rmse,
                                          rmse_from_step,
                                          r.settling_time.value_or(-1.0),
                                          static_cast<double>(r.horizon), r.dt});
        }
        const fs::path metrics_file = out_dir / "metrics.csv";
        write_csv(metrics_file, metrics_table);
        outcome.files.push_back(metrics_file);
    }
    return outcome;
}

}  // namespace refshape
