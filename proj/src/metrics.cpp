#include "hrplab/metrics.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "hrplab/error.hpp"

namespace hrplab {

MetricsRow summarize(std::span<const double> excess) {
    const auto n = excess.size();
    if (n < 2) throw ValidationError("summarize: need at least 2 observations, got " + std::to_string(n));
    const double mean = std::accumulate(excess.begin(), excess.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double x : excess) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));

    MetricsRow row;
    row.mean_excess = mean;
    row.std_dev = sd;
    if (sd > 0.0) row.sharpe = mean / sd;
    row.n_months = static_cast<int>(n);
    return row;
}

MetricsRow summarize_partial(std::span<const double> excess) {
    if (excess.size() >= 2) return summarize(excess);
    MetricsRow row;
    row.n_months = static_cast<int>(excess.size());
    if (!excess.empty()) row.mean_excess = excess.front();
    return row;
}

}  // namespace hrplab
