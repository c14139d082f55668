#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "refshape/reference.hpp"

namespace refshape {

/// One straight printing move at constant speed.
struct PathSegment {
    Eigen::Vector2d start;  // mm
    Eigen::Vector2d end;    // mm
    double speed;           // mm/s, > 0

    double length() const { return (end - start).norm(); }
    double duration() const { return length() / speed; }
};

/// Planar polyline toolpath; segments chain continuously.
struct PrintPath {
    std::vector<PathSegment> segments;
    double z = 0.0;  // mm, constant layer height

    PrintPath() = default;
    PrintPath(std::vector<PathSegment> segments_, double z_ = 0.0);

    double total_length() const;
    double total_duration() const;
};

/// Piecewise-constant force as a function of arc length. An entry applies
/// from its own distance (left-closed) until the next entry.
struct ForceSchedule {
    struct Entry {
        double distance;  // mm along the path, strictly increasing from 0
        double force;     // N, <= 0
    };
    std::vector<Entry> entries;

    ForceSchedule() = default;
    explicit ForceSchedule(std::vector<Entry> entries_);

    double force_at(double arc) const;
};

/// Position and arc length of the toolpath at one sample instant.
struct PathSample {
    double t;                  // s
    Eigen::Vector2d position;  // mm
    double arc;                // mm, nondecreasing
};

/// Sample the constant-speed motion at t = 0, dt, ..., N*dt with
/// N = ceil(duration / dt); the trailing sample is clamped to the path end.
std::vector<PathSample> space_to_time(const PrintPath& path, double dt);

/// Reference value at each sample instant: the schedule force active at that
/// sample's arc position. The profile has N = ceil(duration / dt) samples.
ReferenceProfile schedule_to_reference(const ForceSchedule& schedule, const PrintPath& path,
                                       double dt);

/// A parsed or generated program; one statement per line, LF endings.
struct GcodeProgram {
    std::vector<std::string> lines;

    std::string text() const;
    static GcodeProgram from_text(const std::string& text);
};

/// Generate G-code realizing the path with the (shaped) reference profile:
/// moves split wherever the force value changes so each value becomes active
/// exactly at its first sample's arc position.
GcodeProgram emit_gcode(const PrintPath& path, const ReferenceProfile& profile,
                        int hold_length);

/// Reconstruct the toolpath and force schedule from a program.
std::pair<PrintPath, ForceSchedule> parse_gcode(const GcodeProgram& program);

}  // namespace refshape
