#include "refshape/gcode.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>
#include <stdexcept>

// Dialect, line oriented, ASCII, LF endings, floats at 6 significant digits:
//   G1 X<mm> Y<mm> F<mm/min>   linear move (feedrate = speed * 60)
//   M700 S<newton>             set the force reference
//   ; text                     comment
// The first G1 of a program establishes the start position and produces no
// printed segment.

namespace refshape {

namespace {

std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

}  // namespace

PrintPath::PrintPath(std::vector<PathSegment> segments_, double z_)
    : segments(std::move(segments_)), z(z_) {
    for (std::size_t i = 0; i < segments.size(); ++i) {
        const PathSegment& seg = segments[i];
        if (!(seg.speed > 0.0) || !std::isfinite(seg.speed)) {
            throw std::invalid_argument("PrintPath: segment " + std::to_string(i) +
                                        " needs a positive speed");
        }
        if (!(seg.length() > 0.0)) {
            throw std::invalid_argument("PrintPath: segment " + std::to_string(i) +
                                        " has zero length");
        }
        if (i > 0 && segments[i - 1].end != seg.start) {
            throw std::invalid_argument("PrintPath: segment " + std::to_string(i) +
                                        " does not start where segment " +
                                        std::to_string(i - 1) + " ends");
        }
    }
}

double PrintPath::total_length() const {
    double sum = 0.0;
    for (const PathSegment& seg : segments) sum += seg.length();
    return sum;
}

double PrintPath::total_duration() const {
    double sum = 0.0;
    for (const PathSegment& seg : segments) sum += seg.duration();
    return sum;
}

ForceSchedule::ForceSchedule(std::vector<Entry> entries_) : entries(std::move(entries_)) {
    if (entries.empty()) {
        throw std::invalid_argument("ForceSchedule: needs at least one entry");
    }
    if (entries.front().distance != 0.0) {
        throw std::invalid_argument("ForceSchedule: first entry must sit at distance 0");
    }
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (!std::isfinite(entries[i].force) || entries[i].force > 0.0) {
            throw std::invalid_argument("ForceSchedule: entry " + std::to_string(i) +
                                        " must be a finite force <= 0");
        }
        if (i > 0 && !(entries[i].distance > entries[i - 1].distance)) {
            throw std::invalid_argument("ForceSchedule: distances must strictly increase");
        }
    }
}

double ForceSchedule::force_at(double arc) const {
    double force = entries.front().force;
    for (const Entry& e : entries) {
        if (e.distance <= arc) {
            force = e.force;
        } else {
            break;
        }
    }
    return force;
}

std::vector<PathSample> space_to_time(const PrintPath& path, double dt) {
    if (path.segments.empty()) {
        throw std::invalid_argument("space_to_time: path is empty");
    }
    if (!(dt > 0.0)) {
        throw std::invalid_argument("space_to_time: dt must be positive");
    }

    const double duration = path.total_duration();
    const auto sample_count = static_cast<std::size_t>(std::ceil(duration / dt));

    std::vector<PathSample> samples;
    samples.reserve(sample_count + 1);
    std::size_t seg = 0;
    double seg_t0 = 0.0;   // time at current segment start
    double seg_arc0 = 0.0;
    for (std::size_t k = 0; k <= sample_count; ++k) {
        const double t = static_cast<double>(k) * dt;
        while (seg + 1 < path.segments.size() &&
               t >= seg_t0 + path.segments[seg].duration()) {
            seg_t0 += path.segments[seg].duration();
            seg_arc0 += path.segments[seg].length();
            ++seg;
        }
        const PathSegment& s = path.segments[seg];
        PathSample sample;
        sample.t = t;
        const double local = std::clamp(t - seg_t0, 0.0, s.duration());
        sample.arc = seg_arc0 + s.speed * local;
        const Eigen::Vector2d dir = (s.end - s.start) / s.length();
        sample.position = s.start + dir * (s.speed * local);
        samples.push_back(sample);
    }
    return samples;
}

ReferenceProfile schedule_to_reference(const ForceSchedule& schedule, const PrintPath& path,
                                       double dt) {
    const double length = path.total_length();
    for (const ForceSchedule::Entry& e : schedule.entries) {
        if (e.distance > length) {
            std::ostringstream msg;
            msg << "schedule_to_reference: entry at " << e.distance
                << " mm lies past the path end (" << length << " mm)";
            throw std::invalid_argument(msg.str());
        }
    }
    const std::vector<PathSample> samples = space_to_time(path, dt);
    std::vector<Vector> values;
    values.reserve(samples.size() - 1);
    for (std::size_t k = 0; k + 1 < samples.size(); ++k) {
        values.push_back(Vector::Constant(1, schedule.force_at(samples[k].arc)));
    }
    return ReferenceProfile(std::move(values), dt);
}

std::string GcodeProgram::text() const {
    std::string out;
    for (const std::string& line : lines) {
        out += line;
        out += '\n';
    }
    return out;
}

GcodeProgram GcodeProgram::from_text(const std::string& text) {
    GcodeProgram program;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        program.lines.push_back(line);
    }
    return program;
}

GcodeProgram emit_gcode(const PrintPath& path, const ReferenceProfile& profile,
                        int hold_length) {
    if (hold_length < 1) {
        throw std::invalid_argument("emit_gcode: hold length must be at least 1");
    }
    if (profile.values.front().size() != 1) {
        throw std::invalid_argument("emit_gcode: profile must be scalar-valued");
    }
    for (const Vector& v : profile.values) {
        if (v[0] > 0.0) {
            throw std::invalid_argument(
                "emit_gcode: force references must be <= 0 (sensor sign convention)");
        }
    }
    const std::vector<PathSample> samples = space_to_time(path, profile.dt);

    // Force changes mapped to the arc position of their first sample.
    struct Event {
        double arc;
        double force;
    };
    std::vector<Event> events;
    events.push_back({0.0, profile.values.front()[0]});
    for (std::size_t k = 1; k < profile.size(); ++k) {
        const double f = profile.values[k][0];
        if (f == profile.values[k - 1][0]) continue;
        const std::size_t idx = std::min(k, samples.size() - 1);
        const double arc = samples[idx].arc;
        if (!events.empty() && events.back().arc == arc) {
            events.back().force = f;  // later change at the same position wins
        } else {
            events.push_back({arc, f});
        }
    }

    GcodeProgram program;
    const Eigen::Vector2d& start = path.segments.front().start;
    program.lines.push_back("G1 X" + fmt(start.x()) + " Y" + fmt(start.y()) + " F" +
                            fmt(path.segments.front().speed * 60.0));

    std::size_t next = 0;
    auto set_force = [&](double force) {
        program.lines.push_back("M700 S" + fmt(force));
    };

    double seg_arc0 = 0.0;
    for (const PathSegment& seg : path.segments) {
        const double seg_arc1 = seg_arc0 + seg.length();
        while (next < events.size() && events[next].arc <= seg_arc0) {
            set_force(events[next++].force);
        }
        const Eigen::Vector2d dir = (seg.end - seg.start) / seg.length();
        const std::string feed = fmt(seg.speed * 60.0);
        while (next < events.size() && events[next].arc < seg_arc1) {
            const Eigen::Vector2d split = seg.start + dir * (events[next].arc - seg_arc0);
            program.lines.push_back("G1 X" + fmt(split.x()) + " Y" + fmt(split.y()) + " F" +
                                    feed);
            set_force(events[next++].force);
        }
        program.lines.push_back("G1 X" + fmt(seg.end.x()) + " Y" + fmt(seg.end.y()) + " F" +
                                feed);
        seg_arc0 = seg_arc1;
    }
    while (next < events.size()) {
        set_force(events[next++].force);  // changes at the very end of the path
    }
    return program;
}

namespace {

struct LineParser {
    const std::string& line;
    std::size_t number;
    std::size_t pos = 0;

    [[noreturn]] void fail(const std::string& what) const {
        throw std::runtime_error("line " + std::to_string(number) + ": " + what);
    }

    void skip_spaces() {
        while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
    }

    bool done() {
        skip_spaces();
        return pos >= line.size();
    }

    std::optional<char> word_letter() {
        skip_spaces();
        if (pos >= line.size()) return std::nullopt;
        const char c = line[pos];
        if (!std::isalpha(static_cast<unsigned char>(c))) {
            fail(std::string("unexpected character '") + c + "'");
        }
        ++pos;
        return std::toupper(static_cast<unsigned char>(c));
    }

    double number_field(char letter) {
        const char* begin = line.c_str() + pos;
        char* end = nullptr;
        const double value = std::strtod(begin, &end);
        if (end == begin || !std::isfinite(value)) {
            fail(std::string("malformed numeric field ") + letter);
        }
        pos += static_cast<std::size_t>(end - begin);
        return value;
    }
};

}  // namespace

std::pair<PrintPath, ForceSchedule> parse_gcode(const GcodeProgram& program) {
    std::vector<PathSegment> segments;
    std::vector<ForceSchedule::Entry> entries;

    std::optional<Eigen::Vector2d> position;
    std::optional<double> feed;
    double arc = 0.0;
    std::optional<double> active_force;

    for (std::size_t i = 0; i < program.lines.size(); ++i) {
        LineParser parser{program.lines[i], i + 1};
        if (parser.done()) continue;
        if (program.lines[i][parser.pos] == ';') continue;

        // statement word, e.g. G1 or M700
        const char letter = *parser.word_letter();
        const double code = parser.number_field(letter);
        if (letter == 'G' && code == 1.0) {
            std::optional<double> x, y, f;
            while (!parser.done()) {
                const char w = *parser.word_letter();
                const double value = parser.number_field(w);
                if (w == 'X') x = value;
                else if (w == 'Y') y = value;
                else if (w == 'F') f = value;
                else parser.fail(std::string("unknown word '") + w + "' in G1");
            }
            if (!x || !y) parser.fail("G1 needs both X and Y");
            if (f) {
                if (*f <= 0.0) parser.fail("feedrate must be positive");
                feed = *f;
            }
            const Eigen::Vector2d target(*x, *y);
            if (!position) {
                position = target;  // program start, no printed segment
                continue;
            }
            if (!feed) parser.fail("move without a feedrate");
            if (target == *position) parser.fail("zero-length move");
            segments.push_back({*position, target, *feed / 60.0});
            arc += segments.back().length();
            position = target;
        } else if (letter == 'M' && code == 700.0) {
            const char w = parser.word_letter().value_or('\0');
            if (w != 'S') parser.fail("M700 needs an S value");
            const double force = parser.number_field('S');
            if (!parser.done()) parser.fail("trailing content after M700");
            if (force > 0.0) parser.fail("force reference must be <= 0");
            if (active_force && force == *active_force) continue;
            if (!entries.empty() && entries.back().distance == arc) {
                entries.back().force = force;
            } else {
                entries.push_back({arc, force});
            }
            active_force = force;
        } else {
            std::ostringstream msg;
            msg << "unknown statement '" << letter << code << "'";
            parser.fail(msg.str());
        }
    }

    if (segments.empty()) {
        throw std::runtime_error("parse_gcode: program contains no motion");
    }
    if (entries.empty() || entries.front().distance != 0.0) {
        throw std::runtime_error("parse_gcode: no force reference before the first move");
    }
    return {PrintPath(std::move(segments)), ForceSchedule(std::move(entries))};
}

}  // namespace refshape
