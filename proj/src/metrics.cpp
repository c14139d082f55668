#include "refshape/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace refshape {

double rmse(const std::vector<Vector>& actual, const std::vector<Vector>& reference) {
    if (actual.size() != reference.size()) {
        throw std::invalid_argument("rmse: sequences have different lengths");
    }
    if (actual.empty()) {
        throw std::invalid_argument("rmse: sequences are empty");
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < actual.size(); ++k) {
        if (actual[k].size() != reference[k].size()) {
            throw std::invalid_argument("rmse: sample " + std::to_string(k) +
                                        " has mismatched dimensions");
        }
        sum += (actual[k] - reference[k]).squaredNorm();
    }
    return std::sqrt(sum / static_cast<double>(actual.size()));
}

double rmse(const std::vector<double>& actual, const std::vector<double>& reference) {
    if (actual.size() != reference.size()) {
        throw std::invalid_argument("rmse: sequences have different lengths");
    }
    if (actual.empty()) {
        throw std::invalid_argument("rmse: sequences are empty");
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < actual.size(); ++k) {
        const double e = actual[k] - reference[k];
        sum += e * e;
    }
    return std::sqrt(sum / static_cast<double>(actual.size()));
}

std::optional<double> settling_time(const std::vector<double>& actual,
                                    const std::vector<double>& reference, double dt,
                                    std::size_t step_index, const SettlingOptions& options) {
    if (actual.size() != reference.size()) {
        throw std::invalid_argument("settling_time: sequences have different lengths");
    }
    if (step_index >= actual.size()) {
        throw std::invalid_argument("settling_time: step index is past the end");
    }
    if (!(options.fraction > 0.0 && options.fraction < 1.0)) {
        throw std::invalid_argument("settling_time: fraction must lie in (0, 1)");
    }
    if (!(dt > 0.0)) {
        throw std::invalid_argument("settling_time: dt must be positive");
    }
    const double r_final = reference.back();
    for (std::size_t k = step_index; k < reference.size(); ++k) {
        if (reference[k] != r_final) {
            throw std::invalid_argument(
                "settling_time: reference is not constant after the step");
        }
    }
    const double band =
        options.absolute_band ? options.fraction : options.fraction * std::abs(r_final);

    // walk backwards: the settled suffix is the maximal in-band tail
    std::size_t first_settled = actual.size();
    for (std::size_t k = actual.size(); k-- > step_index;) {
        if (std::abs(actual[k] - r_final) <= band) {
            first_settled = k;
        } else {
            break;
        }
    }
    if (first_settled == actual.size()) {
        return std::nullopt;
    }
    return static_cast<double>(first_settled - step_index) * dt;
}

namespace {

std::string format_value(double v, const char* fmt = "%.4g") {
    char buf[64];
    std::snprintf(buf, sizeof(buf), fmt, v);
    return buf;
}

}  // namespace

std::string format_metrics_table(const std::vector<MetricsReport>& reports) {
    std::vector<std::string> header = {"Metric"};
    std::vector<std::string> rmse_row = {"RMSE (N)"};
    std::vector<std::string> settle_row = {"t_5% (s)"};
    for (const MetricsReport& r : reports) {
        header.push_back(r.label);
        rmse_row.push_back(format_value(r.rmse));
        settle_row.push_back(r.settling_time ? format_value(*r.settling_time) : "n/a");
    }

    std::vector<std::size_t> widths(header.size(), 0);
    for (const auto* row : {&header, &rmse_row, &settle_row}) {
        for (std::size_t i = 0; i < row->size(); ++i) {
            widths[i] = std::max(widths[i], (*row)[i].size());
        }
    }

    std::ostringstream out;
    for (const auto* row : {&header, &rmse_row, &settle_row}) {
        for (std::size_t i = 0; i < row->size(); ++i) {
            out << std::left << std::setw(static_cast<int>(widths[i] + 3)) << (*row)[i];
        }
        out << '\n';
    }
    return out.str();
}

std::string metrics_to_csv(const std::vector<MetricsReport>& reports) {
    std::ostringstream out;
    out << "label,rmse,settling_time,horizon,dt\n";
    for (const MetricsReport& r : reports) {
        out << r.label << ',' << format_value(r.rmse, "%.9g") << ',';
        if (r.settling_time) {
            out << format_value(*r.settling_time, "%.9g");
        }
        out << ',' << r.horizon << ',' << format_value(r.dt, "%.9g") << '\n';
    }
    return out.str();
}

}  // namespace refshape
