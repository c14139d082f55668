#include <doctest.h>

#include <random>

#include "refshape/gcode.hpp"
#include "test_support.hpp"

using refshape::ForceSchedule;
using refshape::GcodeProgram;
using refshape::PathSample;
using refshape::PathSegment;
using refshape::PrintPath;
using refshape::ReferenceProfile;
using refshape::Vector;

namespace {

PrintPath line_path(double length, double speed) {
    return PrintPath({{{0.0, 0.0}, {length, 0.0}, speed}});
}

}  // namespace

TEST_CASE("space_to_time: uniform motion on a single segment") {
    const auto samples = refshape::space_to_time(line_path(10.0, 20.0), 0.01);
    REQUIRE(samples.size() == 51);  // ceil(0.5 / 0.01) + 1
    for (std::size_t k = 0; k < samples.size(); ++k) {
        CHECK(samples[k].arc ==
              doctest::Approx(0.2 * static_cast<double>(k)).epsilon(1e-12));
        CHECK(samples[k].position.x() == doctest::Approx(samples[k].arc));
        CHECK(samples[k].position.y() == 0.0);
    }
    // exactly divisible horizon lands on the path end
    CHECK(samples.back().arc == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("space_to_time: piecewise speeds") {
    const PrintPath path({{{0, 0}, {5, 0}, 5.0}, {{5, 0}, {10, 0}, 10.0}});
    CHECK(path.total_duration() == doctest::Approx(1.5));
    const auto samples = refshape::space_to_time(path, 0.01);
    REQUIRE(samples.size() == 151);
    CHECK(samples[100].arc == doctest::Approx(5.0).epsilon(1e-12));  // t = 1.0 s
    CHECK(samples[100].t == doctest::Approx(1.0));
    CHECK(samples[150].arc == doctest::Approx(10.0).epsilon(1e-12));

    double previous = 0.0;
    for (const PathSample& s : samples) {
        CHECK(s.arc >= previous - 1e-15);
        previous = s.arc;
    }
}

TEST_CASE("space_to_time: rejects empty paths and bad dt") {
    CHECK_THROWS_AS(refshape::space_to_time(PrintPath{}, 0.01), std::invalid_argument);
    CHECK_THROWS_AS(refshape::space_to_time(line_path(1, 1), 0.0), std::invalid_argument);
}

TEST_CASE("PrintPath: invariants") {
    CHECK_THROWS_AS(PrintPath({{{0, 0}, {1, 0}, 0.0}}), std::invalid_argument);
    CHECK_THROWS_AS(PrintPath({{{0, 0}, {0, 0}, 1.0}}), std::invalid_argument);
    CHECK_THROWS_AS(PrintPath({{{0, 0}, {1, 0}, 1.0}, {{2, 0}, {3, 0}, 1.0}}),
                    std::invalid_argument);
}

TEST_CASE("ForceSchedule: invariants and lookup convention") {
    CHECK_THROWS_AS(ForceSchedule(std::vector<ForceSchedule::Entry>{}),
                    std::invalid_argument);
    CHECK_THROWS_AS(ForceSchedule({{1.0, -3.0}}), std::invalid_argument);
    CHECK_THROWS_AS(ForceSchedule({{0.0, 3.0}}), std::invalid_argument);
    CHECK_THROWS_AS(ForceSchedule({{0.0, -3.0}, {0.0, -5.0}}), std::invalid_argument);

    const ForceSchedule schedule({{0.0, -3.0}, {5.0, -5.0}});
    CHECK(schedule.force_at(0.0) == -3.0);
    CHECK(schedule.force_at(4.999) == -3.0);
    CHECK(schedule.force_at(5.0) == -5.0);  // left closed
    CHECK(schedule.force_at(9.0) == -5.0);
}

TEST_CASE("schedule_to_reference: constant schedule, any path") {
    const ReferenceProfile profile = refshape::schedule_to_reference(
        ForceSchedule({{0.0, -3.0}}), line_path(10.0, 20.0), 0.01);
    REQUIRE(profile.size() == 50);
    for (const Vector& v : profile.values) CHECK(v[0] == -3.0);
}

TEST_CASE("schedule_to_reference: mid-path step lands at the predicted sample") {
    const PrintPath path = line_path(10.0, 20.0);
    const ReferenceProfile profile = refshape::schedule_to_reference(
        ForceSchedule({{0.0, -3.0}, {5.0, -5.0}}), path, 0.01);
    REQUIRE(profile.size() == 50);

    // oracle: first sample whose arc reaches 5 mm
    const auto samples = refshape::space_to_time(path, 0.01);
    std::size_t expected = 0;
    while (samples[expected].arc < 5.0) ++expected;
    CHECK(expected == 25);
    for (std::size_t k = 0; k < profile.size(); ++k) {
        CHECK(profile.values[k][0] == (k < expected ? -3.0 : -5.0));
    }
}

TEST_CASE("schedule_to_reference: rejects entries past the path end") {
    CHECK_THROWS_AS(refshape::schedule_to_reference(
                        ForceSchedule({{0.0, -3.0}, {10.5, -5.0}}), line_path(10.0, 20.0),
                        0.01),
                    std::invalid_argument);
}

TEST_CASE("emit_gcode: constant profile gives one force set and one move per segment") {
    const PrintPath path({{{0, 0}, {5, 0}, 5.0}, {{5, 0}, {10, 0}, 10.0}});
    const ReferenceProfile profile = refshape::schedule_to_reference(
        ForceSchedule({{0.0, -3.0}}), path, 0.01);
    const GcodeProgram program = refshape::emit_gcode(path, profile, 1);

    REQUIRE(program.lines.size() == 4);
    CHECK(program.lines[0] == "G1 X0 Y0 F300");
    CHECK(program.lines[1] == "M700 S-3");
    CHECK(program.lines[2] == "G1 X5 Y0 F300");
    CHECK(program.lines[3] == "G1 X10 Y0 F600");
}

TEST_CASE("emit_gcode: a mid-segment change splits the move") {
    const PrintPath path = line_path(10.0, 20.0);
    const ReferenceProfile profile = refshape::schedule_to_reference(
        ForceSchedule({{0.0, -3.0}, {5.0, -5.0}}), path, 0.01);
    const GcodeProgram program = refshape::emit_gcode(path, profile, 1);

    REQUIRE(program.lines.size() == 5);
    CHECK(program.lines[0] == "G1 X0 Y0 F1200");
    CHECK(program.lines[1] == "M700 S-3");
    CHECK(program.lines[2] == "G1 X5 Y0 F1200");
    CHECK(program.lines[3] == "M700 S-5");
    CHECK(program.lines[4] == "G1 X10 Y0 F1200");

    CHECK_THROWS_AS(refshape::emit_gcode(path, profile, 0), std::invalid_argument);

    // positive forces cannot be expressed in the dialect
    std::vector<Vector> positive = {Vector::Constant(1, 1.0)};
    CHECK_THROWS_AS(
        refshape::emit_gcode(path, ReferenceProfile(positive, 0.01), 1),
        std::invalid_argument);
}

TEST_CASE("emit_gcode/parse_gcode: roundtrip on the bundled step line") {
    // 60 mm line, step halfway: the bundled print scenario
    const PrintPath path = line_path(60.0, 20.0);
    const ForceSchedule schedule({{0.0, -3.0}, {30.0, -5.0}});
    const ReferenceProfile profile = refshape::schedule_to_reference(schedule, path, 0.01);

    const GcodeProgram program = refshape::emit_gcode(path, profile, 1);
    const auto [parsed_path, parsed_schedule] = refshape::parse_gcode(program);

    CHECK(parsed_path.total_length() == doctest::Approx(60.0).epsilon(1e-9));
    REQUIRE(parsed_schedule.entries.size() == 2);
    CHECK(parsed_schedule.entries[0].distance == 0.0);
    CHECK(parsed_schedule.entries[0].force == -3.0);
    CHECK(parsed_schedule.entries[1].distance == doctest::Approx(30.0).epsilon(1e-12));
    CHECK(parsed_schedule.entries[1].force == -5.0);

    const ReferenceProfile rebuilt =
        refshape::schedule_to_reference(parsed_schedule, parsed_path, 0.01);
    REQUIRE(rebuilt.size() == profile.size());
    for (std::size_t k = 0; k < profile.size(); ++k) {
        CHECK(rebuilt.values[k][0] == profile.values[k][0]);
    }
}

TEST_CASE("emit_gcode/parse_gcode: roundtrip over random grid paths and schedules") {
    std::mt19937 rng(4242);
    for (int trial = 0; trial < 20; ++trial) {
        const PrintPath path = test_support::random_grid_path(rng);
        const ForceSchedule schedule = test_support::random_schedule(rng, path.total_length());
        const ReferenceProfile profile =
            refshape::schedule_to_reference(schedule, path, test_support::kGridDt);

        const GcodeProgram program = refshape::emit_gcode(path, profile, 1);
        const auto [parsed_path, parsed_schedule] = refshape::parse_gcode(program);

        // total geometry preserved regardless of force-change splits
        CHECK(parsed_path.total_length() ==
              doctest::Approx(path.total_length()).epsilon(1e-9));

        // forces reproduced exactly at every sample
        const ReferenceProfile rebuilt =
            refshape::schedule_to_reference(parsed_schedule, parsed_path, test_support::kGridDt);
        REQUIRE(rebuilt.size() == profile.size());
        for (std::size_t k = 0; k < profile.size(); ++k) {
            CHECK(rebuilt.values[k][0] == profile.values[k][0]);
        }

        // positions at every sample instant within 1e-6 mm
        const auto original = refshape::space_to_time(path, test_support::kGridDt);
        const auto reparsed = refshape::space_to_time(parsed_path, test_support::kGridDt);
        REQUIRE(original.size() == reparsed.size());
        for (std::size_t k = 0; k < original.size(); ++k) {
            CHECK((original[k].position - reparsed[k].position).norm() <= 1e-6);
        }
    }
}

TEST_CASE("parse_gcode: error reporting") {
    CHECK_THROWS_WITH_AS(refshape::parse_gcode(GcodeProgram{}),
                         doctest::Contains("no motion"), std::runtime_error);

    GcodeProgram unknown = GcodeProgram::from_text("G1 X0 Y0 F600\nG92 E0\n");
    CHECK_THROWS_WITH_AS(refshape::parse_gcode(unknown), doctest::Contains("line 2"),
                         std::runtime_error);

    GcodeProgram malformed = GcodeProgram::from_text("G1 X0 Y0 F600\nM700 Sabc\n");
    CHECK_THROWS_WITH_AS(refshape::parse_gcode(malformed),
                         doctest::Contains("malformed numeric field S"), std::runtime_error);

    GcodeProgram zero_move =
        GcodeProgram::from_text("G1 X0 Y0 F600\nM700 S-1\nG1 X0 Y0 F600\n");
    CHECK_THROWS_WITH_AS(refshape::parse_gcode(zero_move),
                         doctest::Contains("zero-length"), std::runtime_error);

    GcodeProgram no_feed = GcodeProgram::from_text("G1 X0 Y0\nM700 S-1\nG1 X5 Y0\n");
    CHECK_THROWS_WITH_AS(refshape::parse_gcode(no_feed),
                         doctest::Contains("feedrate"), std::runtime_error);

    GcodeProgram positive = GcodeProgram::from_text("G1 X0 Y0 F600\nM700 S2\nG1 X5 Y0\n");
    CHECK_THROWS_WITH_AS(refshape::parse_gcode(positive), doctest::Contains("<= 0"),
                         std::runtime_error);

    GcodeProgram no_force = GcodeProgram::from_text("G1 X0 Y0 F600\nG1 X5 Y0 F600\n");
    CHECK_THROWS_WITH_AS(refshape::parse_gcode(no_force),
                         doctest::Contains("force reference"), std::runtime_error);
}

TEST_CASE("parse_gcode: comments and blank lines are ignored") {
    const GcodeProgram program = GcodeProgram::from_text(
        "; header\n\nG1 X0 Y0 F600\nM700 S-2\n; mid comment\nG1 X5 Y0 F600\n");
    const auto [path, schedule] = refshape::parse_gcode(program);
    CHECK(path.segments.size() == 1);
    CHECK(schedule.entries.size() == 1);
    CHECK(path.total_length() == doctest::Approx(5.0));
}
