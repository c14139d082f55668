#pragma once

#include <optional>
#include <string>
#include <vector>

#include "refshape/state_space.hpp"

namespace refshape {

/// Tracking-quality figures for one run.
struct MetricsReport {
    std::string label;
    double rmse = 0.0;                    // N
    std::optional<double> settling_time;  // s, empty when the signal never settles
    std::size_t horizon = 0;              // N
    double dt = 0.0;
};

/// sqrt(mean ||F_k - r_k||^2) over equal-length sequences.
double rmse(const std::vector<Vector>& actual, const std::vector<Vector>& reference);
double rmse(const std::vector<double>& actual, const std::vector<double>& reference);

struct SettlingOptions {
    double fraction = 0.05;
    bool absolute_band = false;  // band = fraction instead of fraction * |r_final|
};

/// Time after step_index at which the response enters the tolerance band
/// around the final reference and stays there. The reference must already be
/// constant from step_index on.
std::optional<double> settling_time(const std::vector<double>& actual,
                                    const std::vector<double>& reference, double dt,
                                    std::size_t step_index,
                                    const SettlingOptions& options = {});

/// Aligned text table, one row per metric and one column per report.
std::string format_metrics_table(const std::vector<MetricsReport>& reports);

/// The same table as CSV (label, rmse, settling_time, horizon, dt rows).
std::string metrics_to_csv(const std::vector<MetricsReport>& reports);

}  // namespace refshape
