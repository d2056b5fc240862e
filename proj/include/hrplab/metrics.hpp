#pragma once

#include <optional>
#include <span>

namespace hrplab {

/// Monthly (not annualized) summary of an excess-return series.
/// Fields are empty where undefined: std/sharpe need two observations, and
/// sharpe is also undefined for a zero-variance series.
struct MetricsRow {
    std::optional<double> mean_excess;
    std::optional<double> std_dev;
    std::optional<double> sharpe;
    int n_months = 0;
    std::optional<double> avg_turnover;

    friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

/// Arithmetic mean, sample standard deviation (n - 1) and mean / std.
/// Throws ValidationError for fewer than two observations.
MetricsRow summarize(std::span<const double> excess);

/// Like summarize(), but tolerates short series by leaving fields empty.
MetricsRow summarize_partial(std::span<const double> excess);

}  // namespace hrplab
